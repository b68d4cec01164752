//! Quasiparticle tunneling through NIS and SIS junctions: broadened BCS
//! density of states, IV simulation, numerical differential conductance,
//! gap extraction from conductance peaks, and subgap leakage fits.
//!
//! Units: energies and voltages in meV/mV (numerically interchangeable
//! across a tunnel barrier), currents in nA, resistances in kΩ (normal
//! state) or MΩ (subgap), temperatures in K.
//!
//! Only single-quasiparticle current is modeled. The Josephson (pair)
//! branch, Andreev processes, and environment-induced subgap resonances
//! are out of scope; measured curves may carry them, simulated ones
//! never do.

use nalgebra::Complex;

use crate::constants::KB_MEV_PER_K;
use crate::error::{Error, Result};
use crate::trace::{SampledTrace, XUnit, YUnit};

/// One electrode: gap, Dynes broadening, critical temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperconductorModel {
    delta0_mev: f64,
    gamma: f64,
    tc_k: f64,
}

impl SuperconductorModel {
    /// Validate and build. `delta0_mev = 0` denotes a normal metal;
    /// `tc_k` must be positive whenever the gap is.
    pub fn new(delta0_mev: f64, gamma: f64, tc_k: f64) -> Result<Self> {
        if !(delta0_mev >= 0.0) || !delta0_mev.is_finite() {
            return Err(Error::Parameter(format!(
                "gap must be non-negative and finite, got {delta0_mev} meV"
            )));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::Parameter(format!(
                "Dynes parameter must be non-negative and finite, got {gamma}"
            )));
        }
        if delta0_mev > 0.0 && (!(tc_k > 0.0) || !tc_k.is_finite()) {
            return Err(Error::Parameter(format!(
                "critical temperature must be positive for a gapped electrode, got {tc_k} K"
            )));
        }
        Ok(Self {
            delta0_mev,
            gamma,
            tc_k,
        })
    }

    /// Gapless electrode.
    pub fn normal_metal() -> Self {
        Self {
            delta0_mev: 0.0,
            gamma: 0.0,
            tc_k: 1.0,
        }
    }

    /// Zero-temperature gap (meV).
    pub fn delta0_mev(&self) -> f64 {
        self.delta0_mev
    }

    /// Dynes broadening parameter.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Critical temperature (K).
    pub fn tc_k(&self) -> f64 {
        self.tc_k
    }
}

/// DC tunnel junction: normal-state resistance and two electrodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionDC {
    r_n_kohm: f64,
    left: SuperconductorModel,
    right: SuperconductorModel,
}

impl JunctionDC {
    /// Validate and build: R_N must be positive.
    pub fn new(r_n_kohm: f64, left: SuperconductorModel, right: SuperconductorModel) -> Result<Self> {
        if !(r_n_kohm > 0.0) || !r_n_kohm.is_finite() {
            return Err(Error::Parameter(format!(
                "normal-state resistance must be positive, got {r_n_kohm} kΩ"
            )));
        }
        Ok(Self { r_n_kohm, left, right })
    }

    /// Normal-state resistance (kΩ).
    pub fn r_n_kohm(&self) -> f64 {
        self.r_n_kohm
    }

    /// Electrode models.
    pub fn electrodes(&self) -> (&SuperconductorModel, &SuperconductorModel) {
        (&self.left, &self.right)
    }
}

/// Dynes-broadened BCS density of states,
/// N(E) = |Re[(E + iγΔ)/√((E + iγΔ)² − Δ²)]|, normalized to 1 far
/// above the gap. Total for finite inputs; the γ = 0, |E| = Δ corner is
/// the gap-edge divergence and returns +∞.
pub fn dynes_dos(e_mev: f64, sc: &SuperconductorModel) -> f64 {
    let delta = sc.delta0_mev;
    if delta == 0.0 {
        return 1.0;
    }
    if sc.gamma == 0.0 && e_mev.abs() == delta {
        return f64::INFINITY;
    }
    let z = Complex::new(e_mev, sc.gamma * delta);
    let w = z / (z * z - Complex::new(delta * delta, 0.0)).sqrt();
    w.re.abs()
}

/// Occupation factor 1/(e^{E/k_BT} + 1) in the overflow-safe tanh form.
fn fermi(e_mev: f64, t_k: f64) -> f64 {
    0.5 * (1.0 - (e_mev / (2.0 * KB_MEV_PER_K * t_k)).tanh())
}

/// Absolute quadrature budget (meV) for one tunnel-current integral;
/// keeps current errors at the 1e-7 nA scale, far below the 0.1%
/// normal-current contract.
const QUADRATURE_TOL_MEV: f64 = 1.0e-9;

const MAX_SIMPSON_DEPTH: u32 = 48;

/// Recursive Simpson refinement with a forced minimum depth so narrow
/// gap-edge peaks inside a panel cannot fake early convergence.
#[allow(clippy::too_many_arguments)]
fn simpson_recurse(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    force: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !flm.is_finite() || !frm.is_finite() {
        return Err(Error::Numerical(format!(
            "tunneling integrand not finite near E = {lm} meV"
        )));
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if force == 0 && (delta.abs() <= 15.0 * tol || b - a < 1.0e-14) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numerical(format!(
            "quadrature failed to converge on [{a}, {b}] meV"
        )));
    }
    let half_tol = 0.5 * tol;
    let next_force = force.saturating_sub(1);
    Ok(simpson_recurse(f, a, m, fa, flm, fm, left, half_tol, depth - 1, next_force)?
        + simpson_recurse(f, m, b, fm, frm, fb, right, half_tol, depth - 1, next_force)?)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    if !fa.is_finite() || !fm.is_finite() || !fb.is_finite() {
        return Err(Error::Numerical(format!(
            "tunneling integrand not finite on [{a}, {b}] meV"
        )));
    }
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_recurse(f, a, b, fa, fm, fb, whole, tol, MAX_SIMPSON_DEPTH, 4)
}

/// Integrate one panel whose endpoints may sit on gap edges. The edge
/// side is mapped through E = edge ± s², which flattens the inverse
/// square-root divergence of sharp BCS edges and clusters nodes where
/// Dynes peaks live.
fn integrate_panel(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    edge_left: bool,
    edge_right: bool,
    tol: f64,
) -> Result<f64> {
    const S_FLOOR: f64 = 1.0e-30;
    if b - a <= 0.0 {
        return Ok(0.0);
    }
    match (edge_left, edge_right) {
        (false, false) => adaptive_simpson(f, a, b, tol),
        (true, false) => {
            let g = move |s: f64| {
                let s = s.max(S_FLOOR);
                2.0 * s * f(a + s * s)
            };
            adaptive_simpson(&g, 0.0, (b - a).sqrt(), tol)
        }
        (false, true) => {
            let g = move |s: f64| {
                let s = s.max(S_FLOOR);
                2.0 * s * f(b - s * s)
            };
            adaptive_simpson(&g, 0.0, (b - a).sqrt(), tol)
        }
        (true, true) => {
            let m = 0.5 * (a + b);
            Ok(integrate_panel(f, a, m, true, false, 0.5 * tol)?
                + integrate_panel(f, m, b, false, true, 0.5 * tol)?)
        }
    }
}

/// Quasiparticle tunnel current (nA) at bias `v_mv` and bath
/// temperature `t_k`:
/// I = (1000/R_N[kΩ]) ∫ N_L(E) N_R(E + V) [f(E) − f(E + V)] dE[meV].
///
/// Temperature enters only through the Fermi factors; gaps are taken as
/// given (rescale them via [`junction_at_temperature`] when sweeping
/// bath temperature). The both-normal case reduces to I = V/R_N, which
/// is returned in closed form.
pub fn tunnel_current(v_mv: f64, j: &JunctionDC, t_k: f64) -> Result<f64> {
    if !(t_k > 0.0) || !t_k.is_finite() {
        return Err(Error::Parameter(format!(
            "bath temperature must be positive, got {t_k} K"
        )));
    }
    if !v_mv.is_finite() {
        return Err(Error::Parameter(format!("bias must be finite, got {v_mv} mV")));
    }
    let (left, right) = (j.left, j.right);
    if left.delta0_mev == 0.0 && right.delta0_mev == 0.0 {
        return Ok(1000.0 * v_mv / j.r_n_kohm);
    }

    // Gap edges of the integrand in E: N_L peaks at ±Δ_L, N_R(E + V)
    // peaks at ±Δ_R − V.
    let mut edges: Vec<f64> = Vec::with_capacity(4);
    if left.delta0_mev > 0.0 {
        edges.push(-left.delta0_mev);
        edges.push(left.delta0_mev);
    }
    if right.delta0_mev > 0.0 {
        edges.push(-right.delta0_mev - v_mv);
        edges.push(right.delta0_mev - v_mv);
    }
    let farthest = edges.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let span = v_mv
        .abs()
        .max(left.delta0_mev + right.delta0_mev)
        .max(farthest)
        + 30.0 * KB_MEV_PER_K * t_k;

    let mut cuts: Vec<f64> = vec![-span];
    cuts.extend(edges.iter().copied().filter(|e| e.abs() < span));
    cuts.push(span);
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1.0e-12);

    let integrand = move |e: f64| {
        dynes_dos(e, &left) * dynes_dos(e + v_mv, &right) * (fermi(e, t_k) - fermi(e + v_mv, t_k))
    };
    let n_panels = cuts.len() - 1;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let edge_left = w[0] != -span;
        let edge_right = w[1] != span;
        total += integrate_panel(
            &integrand,
            w[0],
            w[1],
            edge_left,
            edge_right,
            QUADRATURE_TOL_MEV / n_panels as f64,
        )?;
    }
    Ok(1000.0 * total / j.r_n_kohm)
}

/// Junction with both gaps rescaled to their BCS values at `t_k`.
pub fn junction_at_temperature(j: &JunctionDC, t_k: f64) -> Result<JunctionDC> {
    let scale = |sc: &SuperconductorModel| -> Result<SuperconductorModel> {
        if sc.delta0_mev == 0.0 {
            return Ok(*sc);
        }
        SuperconductorModel::new(bcs_gap(sc, t_k)?, sc.gamma, sc.tc_k)
    };
    JunctionDC::new(j.r_n_kohm, scale(&j.left)?, scale(&j.right)?)
}

/// Simulated IV curve over a strictly increasing bias grid (mV), with
/// the bath temperature attached.
pub fn iv_curve(j: &JunctionDC, t_k: f64, v_grid_mv: &[f64]) -> Result<SampledTrace> {
    let mut currents = Vec::with_capacity(v_grid_mv.len());
    for &v in v_grid_mv {
        currents.push(tunnel_current(v, j, t_k)?);
    }
    SampledTrace::new(
        v_grid_mv.to_vec(),
        currents,
        XUnit::Millivolts,
        YUnit::Nanoamps,
    )?
    .with_temperature(t_k)
}

/// Numerical dI/dV of an IV trace, in kΩ⁻¹ versus mV. Central
/// differences on interior points, one-sided at the ends; the bias grid
/// is preserved.
pub fn numerical_didv(iv: &SampledTrace) -> Result<SampledTrace> {
    if iv.x_unit != XUnit::Millivolts || iv.y_unit != YUnit::Nanoamps {
        return Err(Error::Data(format!(
            "differential conductance needs an IV trace in mV/nA, got {:?}/{:?}",
            iv.x_unit, iv.y_unit
        )));
    }
    let n = iv.len();
    if n < 5 {
        return Err(Error::Data(format!(
            "need at least 5 points to differentiate, got {n}"
        )));
    }
    let x = iv.x();
    let y = iv.y();
    let mut g = Vec::with_capacity(n);
    // nA/mV is µS; conductance is reported in kΩ⁻¹ = mS.
    g.push((y[1] - y[0]) / (x[1] - x[0]) / 1000.0);
    for i in 1..n - 1 {
        g.push((y[i + 1] - y[i - 1]) / (x[i + 1] - x[i - 1]) / 1000.0);
    }
    g.push((y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]) / 1000.0);
    let mut out = SampledTrace::new(x.to_vec(), g, XUnit::Millivolts, YUnit::InverseKiloohms)?;
    if let Some(t) = iv.temperature_k {
        out = out.with_temperature(t)?;
    }
    Ok(out)
}

/// Fraction of the normal-state current that marks the onset crossing.
pub const ONSET_OHMIC_FRACTION: f64 = 0.25;

/// Current-onset voltage of an IV trace: the smallest positive bias
/// where the current first reaches a quarter of the normal-state value
/// V/R_N, linearly interpolated between grid points.
///
/// The quarter-crossing pins the knee of the curve at the gap voltage.
/// Thermal smearing pushes the conductance maximum well above it (for
/// Δ = 1.42 meV against a normal electrode at 1.3 K the dI/dV peak
/// sits near 1.56 mV while the current knee stays at Δ/e), so the
/// peak position is not a usable onset estimate at elevated
/// temperature. Biases below 0.3 mV are skipped; there the subgap and
/// ohmic currents are both near zero and their ratio is noise.
pub fn onset_voltage(iv: &SampledTrace, r_n_kohm: f64) -> Result<f64> {
    if iv.x_unit != XUnit::Millivolts || iv.y_unit != YUnit::Nanoamps {
        return Err(Error::Data(format!(
            "onset extraction needs an IV trace in mV/nA, got {:?}/{:?}",
            iv.x_unit, iv.y_unit
        )));
    }
    if !(r_n_kohm.is_finite() && r_n_kohm > 0.0) {
        return Err(Error::Parameter(format!(
            "normal-state resistance must be positive, got {r_n_kohm} kΩ"
        )));
    }
    let x = iv.x();
    let y = iv.y();
    // Signed distance from the quarter-ohmic line, in nA.
    let excess = |k: usize| y[k] - ONSET_OHMIC_FRACTION * 1000.0 * x[k] / r_n_kohm;
    for k in 1..iv.len() {
        if x[k] <= 0.3 {
            continue;
        }
        let (lo, hi) = (excess(k - 1), excess(k));
        if hi >= 0.0 && lo < 0.0 {
            let t = -lo / (hi - lo);
            return Ok(x[k - 1] + t * (x[k] - x[k - 1]));
        }
    }
    Err(Error::Data(
        "current never reaches a quarter of the normal-state value in the positive-bias range"
            .into(),
    ))
}

/// Conductance-peak voltages found in the sum- and difference-gap
/// windows, per bias sign. Missing peaks are `None`, never errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapPeaks {
    pub sum_positive_mv: Option<f64>,
    pub sum_negative_mv: Option<f64>,
    pub diff_positive_mv: Option<f64>,
    pub diff_negative_mv: Option<f64>,
}

/// Lower |V| bound of the default sum-gap window (mV).
pub const SUM_WINDOW_LO_MV: f64 = 1.4;

/// Default difference-gap window on |V| (mV).
pub const DIFF_WINDOW_MV: (f64, f64) = (1.0, 1.4);

/// A peak must rise at least this fraction of the trace's conductance
/// range above its window floor to count as present. Calibrated so the
/// thermally activated difference peak of a Δ ≈ 0.2 meV counter-gap
/// reads as absent below roughly 0.4 K, where the quasiparticle
/// population e^{−Δ/k_BT} has collapsed.
pub const PEAK_VISIBILITY_REL: f64 = 3.0e-3;

/// Highest visible local maximum of dI/dV inside each window, for each
/// bias sign, with 3-point quadratic refinement of the peak voltage.
///
/// Windows are intervals on |V|; they must not overlap (sharing an
/// endpoint is fine) and must lie inside the trace's bias range on both
/// signs.
pub fn find_gap_peaks(
    didv: &SampledTrace,
    sum_window_mv: (f64, f64),
    diff_window_mv: (f64, f64),
) -> Result<GapPeaks> {
    if didv.y_unit != YUnit::InverseKiloohms {
        return Err(Error::Data(format!(
            "peak finding needs a conductance trace in kΩ⁻¹, got {:?}",
            didv.y_unit
        )));
    }
    for (name, (lo, hi)) in [("sum", sum_window_mv), ("difference", diff_window_mv)] {
        if !(0.0 <= lo && lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Parameter(format!(
                "{name} window must satisfy 0 ≤ lo < hi, got ({lo}, {hi}) mV"
            )));
        }
    }
    let overlap = sum_window_mv.0.max(diff_window_mv.0) < sum_window_mv.1.min(diff_window_mv.1);
    if overlap {
        return Err(Error::Parameter(format!(
            "windows ({:?}, {:?}) mV overlap",
            sum_window_mv, diff_window_mv
        )));
    }
    let x = didv.x();
    let hi_needed = sum_window_mv.1.max(diff_window_mv.1);
    if x[0] > -hi_needed || x[x.len() - 1] < hi_needed {
        return Err(Error::Parameter(format!(
            "windows reach |V| = {hi_needed} mV but the trace covers [{}, {}] mV",
            x[0],
            x[x.len() - 1]
        )));
    }

    let y = didv.y();
    let range = y.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
        - y.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let scan = |lo: f64, hi: f64| highest_visible_peak(x, y, lo, hi, range);
    Ok(GapPeaks {
        sum_positive_mv: scan(sum_window_mv.0, sum_window_mv.1),
        sum_negative_mv: scan(-sum_window_mv.1, -sum_window_mv.0),
        diff_positive_mv: scan(diff_window_mv.0, diff_window_mv.1),
        diff_negative_mv: scan(-diff_window_mv.1, -diff_window_mv.0),
    })
}

/// Highest strict local maximum of y inside [lo, hi], quadratically
/// refined; `None` when no candidate clears the visibility floor.
fn highest_visible_peak(x: &[f64], y: &[f64], lo: f64, hi: f64, range: f64) -> Option<f64> {
    let idx: Vec<usize> = (0..x.len()).filter(|&i| lo <= x[i] && x[i] <= hi).collect();
    if idx.len() < 3 {
        return None;
    }
    let floor = idx.iter().map(|&i| y[i]).fold(f64::INFINITY, f64::min);
    let mut best: Option<usize> = None;
    for w in idx.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        if y[b] > y[a]
            && y[b] > y[c]
            && y[b] - floor >= PEAK_VISIBILITY_REL * range
            && best.is_none_or(|prev| y[b] > y[prev])
        {
            best = Some(b);
        }
    }
    let i = best?;
    // Parabola through the three samples around the maximum; vertex
    // clamped to the bracketing interval.
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    let d01 = x1 - x0;
    let d12 = x1 - x2;
    let num = d01 * d01 * (y1 - y2) - d12 * d12 * (y1 - y0);
    let den = d01 * (y1 - y2) - d12 * (y1 - y0);
    let refined = if den.abs() > 0.0 {
        (x1 - 0.5 * num / den).clamp(x0, x2)
    } else {
        x1
    };
    Some(refined)
}

/// Gap trajectories extracted from a temperature series, parallel
/// vectors sorted by ascending temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct GapExtractionResult {
    pub temperatures_k: Vec<f64>,
    pub delta_nb_mev: Vec<f64>,
    pub delta_al_mev: Vec<f64>,
    /// Mean |V| of the sum-gap conductance peak (mV).
    pub v_sum_mv: Vec<f64>,
    /// Mean |V| of the difference-gap peak; `None` where thermally
    /// invisible.
    pub v_diff_mv: Vec<Option<f64>>,
}

/// Extract both gaps at every temperature from IV (or conductance)
/// traces using the default windows.
///
/// Per trace: differentiate if needed, locate sum- and difference-gap
/// peaks, average the |V| of the two bias signs, then
/// Δ_big = (V_sum + V_diff)/2 and Δ_small = (V_sum − V_diff)/2. Where
/// the difference peak is invisible (cold traces), Δ_big is held at its
/// value from the coldest temperature that still shows both peaks and
/// Δ_small = V_sum − Δ_big.
pub fn extract_gaps_vs_temperature(traces: &[SampledTrace]) -> Result<GapExtractionResult> {
    if traces.is_empty() {
        return Err(Error::Data("no traces given".into()));
    }
    struct Row {
        t: f64,
        v_sum: f64,
        v_diff: Option<f64>,
    }
    let mut rows = Vec::with_capacity(traces.len());
    for trace in traces {
        let t = trace.temperature_k.ok_or_else(|| {
            Error::Data("every trace needs a bath-temperature tag".into())
        })?;
        let didv = match trace.y_unit {
            YUnit::Nanoamps => numerical_didv(trace)?,
            YUnit::InverseKiloohms => trace.clone(),
            other => {
                return Err(Error::Data(format!(
                    "gap extraction needs IV or conductance traces, got {other:?}"
                )))
            }
        };
        let x_max = didv.x()[didv.len() - 1];
        let peaks = find_gap_peaks(&didv, (SUM_WINDOW_LO_MV, x_max), DIFF_WINDOW_MV)?;
        let v_sum = match (peaks.sum_positive_mv, peaks.sum_negative_mv) {
            (Some(p), Some(n)) => 0.5 * (p + n.abs()),
            (Some(p), None) => p,
            (None, Some(n)) => n.abs(),
            (None, None) => {
                return Err(Error::Data(format!(
                    "no sum-gap conductance peak at T = {t} K; cannot extract gaps"
                )))
            }
        };
        let v_diff = match (peaks.diff_positive_mv, peaks.diff_negative_mv) {
            (Some(p), Some(n)) => Some(0.5 * (p + n.abs())),
            (Some(p), None) => Some(p),
            (None, Some(n)) => Some(n.abs()),
            (None, None) => None,
        };
        rows.push(Row { t, v_sum, v_diff });
    }
    rows.sort_by(|a, b| a.t.total_cmp(&b.t));

    let plateau = rows
        .iter()
        .find_map(|r| r.v_diff.map(|vd| 0.5 * (r.v_sum + vd)))
        .ok_or_else(|| {
            Error::Data(
                "difference peak invisible at every temperature; gaps cannot be separated".into(),
            )
        })?;

    let mut out = GapExtractionResult {
        temperatures_k: Vec::with_capacity(rows.len()),
        delta_nb_mev: Vec::with_capacity(rows.len()),
        delta_al_mev: Vec::with_capacity(rows.len()),
        v_sum_mv: Vec::with_capacity(rows.len()),
        v_diff_mv: Vec::with_capacity(rows.len()),
    };
    for r in rows {
        let (big, small) = match r.v_diff {
            Some(vd) => (0.5 * (r.v_sum + vd), 0.5 * (r.v_sum - vd)),
            None => (plateau, r.v_sum - plateau),
        };
        // Sub-µeV negatives are grid rounding on a closed gap.
        let small = if (-1.0e-9..0.0).contains(&small) { 0.0 } else { small };
        if small < 0.0 || big < small {
            return Err(Error::Data(format!(
                "extracted gaps ({big:.4}, {small:.4}) meV at T = {} K violate Δ_big ≥ Δ_small ≥ 0",
                r.t
            )));
        }
        out.temperatures_k.push(r.t);
        out.delta_nb_mev.push(big);
        out.delta_al_mev.push(small);
        out.v_sum_mv.push(r.v_sum);
        out.v_diff_mv.push(r.v_diff);
    }
    Ok(out)
}

/// Subgap resistance from a linear fit, with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgapFit {
    pub r_subgap_mohm: f64,
    pub std_err_mohm: f64,
    pub points_used: usize,
}

/// Least-squares line through the IV points inside `window_mv`; the
/// inverse slope is the subgap resistance (nA per mV inverts to MΩ).
pub fn subgap_linear_fit(iv: &SampledTrace, window_mv: (f64, f64)) -> Result<SubgapFit> {
    if iv.x_unit != XUnit::Millivolts || iv.y_unit != YUnit::Nanoamps {
        return Err(Error::Data(format!(
            "subgap fit needs an IV trace in mV/nA, got {:?}/{:?}",
            iv.x_unit, iv.y_unit
        )));
    }
    let (lo, hi) = window_mv;
    if !(lo < hi) {
        return Err(Error::Parameter(format!(
            "window must satisfy lo < hi, got ({lo}, {hi}) mV"
        )));
    }
    let pts: Vec<(f64, f64)> = iv
        .x()
        .iter()
        .zip(iv.y())
        .filter(|(&x, _)| lo <= x && x <= hi)
        .map(|(&x, &y)| (x, y))
        .collect();
    let n = pts.len();
    if n < 6 {
        return Err(Error::Data(format!(
            "need at least 6 points inside the window, found {n}"
        )));
    }
    let nf = n as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let x_mean = sx / nf;
    let y_mean = sy / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - x_mean).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - x_mean) * (p.1 - y_mean)).sum();
    if sxx == 0.0 {
        return Err(Error::Data("window has no bias spread".into()));
    }
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Err(Error::Data(format!(
            "subgap slope {slope:.3e} nA/mV is not positive; no resistance to report"
        )));
    }
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - y_mean - slope * (p.0 - x_mean)).powi(2))
        .sum();
    let slope_var = ss_res / (nf - 2.0) / sxx;
    let r = 1.0 / slope;
    Ok(SubgapFit {
        r_subgap_mohm: r,
        std_err_mohm: slope_var.sqrt() / (slope * slope),
        points_used: n,
    })
}

/// Dynes parameter implied by the resistance ratio, γ = R_N/R_subgap.
pub fn dynes_gamma_estimate(r_n_kohm: f64, r_subgap_mohm: f64) -> Result<f64> {
    if !(r_n_kohm > 0.0) || !r_subgap_mohm.is_finite() || !(r_subgap_mohm > 0.0) || !r_n_kohm.is_finite() {
        return Err(Error::Parameter(format!(
            "resistances must be positive, got R_N = {r_n_kohm} kΩ, R_subgap = {r_subgap_mohm} MΩ"
        )));
    }
    Ok(r_n_kohm / (1000.0 * r_subgap_mohm))
}

/// BCS gap interpolation Δ(T) = Δ0·tanh(1.74·√(Tc/T − 1)), zero at and
/// above Tc. Used to generate synthetic temperature series; measured
/// gaps come from [`extract_gaps_vs_temperature`].
pub fn bcs_gap(sc: &SuperconductorModel, t_k: f64) -> Result<f64> {
    if !(t_k > 0.0) || !t_k.is_finite() {
        return Err(Error::Parameter(format!(
            "temperature must be positive, got {t_k} K"
        )));
    }
    if sc.delta0_mev == 0.0 || t_k >= sc.tc_k {
        return Ok(0.0);
    }
    Ok(sc.delta0_mev * (1.74 * (sc.tc_k / t_k - 1.0).sqrt()).tanh())
}
