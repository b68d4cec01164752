//! Damped least-squares fitting and the measurement models built on it.
//!
//! The engine is a Levenberg-Marquardt iteration with analytic model
//! gradients, box constraints, and Gaussian parameter uncertainties from
//! the Jacobian at the optimum. On top of it sit the characterization
//! models: exponential decay (T1 and echo), exponentially decaying
//! cosine (Ramsey), the junction resistance-area law R = RA/(d - l)²,
//! a linear frequency-versus-size trend, and summary statistics over
//! repeated coherence records.
//!
//! Readout populations are not assumed calibrated, so every time-domain
//! model carries a free amplitude and offset; rescaling the ordinate
//! rescales the fitted amplitude and leaves the time constants alone.
//! Initial guesses are deterministic: log-linear regression for decay
//! constants, the dominant discrete spectral component for the Ramsey
//! detuning, and a linearized 1/sqrt(R) regression for the
//! resistance-area law.

use crate::error::{Error, Result};
use crate::trace::{SampledTrace, XUnit, YUnit};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Iteration cap of the fit engine; exhaustion yields a non-converged
/// report, never an error.
pub const MAX_FIT_ITERATIONS: usize = 200;

/// Converged when the residual norm changes by less than this fraction
/// between accepted steps.
pub const RESIDUAL_REL_TOL: f64 = 1.0e-10;

/// Converged when the gradient 2-norm of the half-sum-of-squares drops
/// below this.
pub const GRADIENT_TOL: f64 = 1.0e-12;

/// Smallest fraction of the detrended signal power the dominant
/// spectral bin must carry for a Ramsey trace to count as oscillating.
/// Pure noise spreads over all bins and stays far below this; a real
/// fringe concentrates most of its power in one bin.
pub const OSCILLATION_MIN_POWER_FRACTION: f64 = 0.2;

// ================== models ==================

/// A parametric scalar model y = f(p, x) with analytic gradient.
pub trait FitModel {
    /// Parameter names, in the order `eval`/`grad` consume them.
    fn names(&self) -> &'static [&'static str];

    /// Model value at `x`.
    fn eval(&self, p: &[f64], x: f64) -> f64;

    /// Gradient df/dp at `x`, written into `out` (length = arity).
    fn grad(&self, p: &[f64], x: f64, out: &mut [f64]);

    /// Number of parameters.
    fn arity(&self) -> usize {
        self.names().len()
    }
}

/// a·exp(−t/τ) + c with parameters `[a, tau_us, c]`.
pub struct ExponentialDecay;

impl FitModel for ExponentialDecay {
    fn names(&self) -> &'static [&'static str] {
        &["a", "tau_us", "c"]
    }

    fn eval(&self, p: &[f64], x: f64) -> f64 {
        p[0] * (-x / p[1]).exp() + p[2]
    }

    fn grad(&self, p: &[f64], x: f64, out: &mut [f64]) {
        let e = (-x / p[1]).exp();
        out[0] = e;
        out[1] = p[0] * x / (p[1] * p[1]) * e;
        out[2] = 1.0;
    }
}

/// a·exp(−t/τ)·cos(2π·f·t + φ) + c with parameters
/// `[a, tau_us, f_mhz, phase_rad, c]`; t in µs makes f a detuning in MHz.
pub struct DecayingCosine;

impl FitModel for DecayingCosine {
    fn names(&self) -> &'static [&'static str] {
        &["a", "tau_us", "f_mhz", "phase_rad", "c"]
    }

    fn eval(&self, p: &[f64], x: f64) -> f64 {
        let theta = 2.0 * std::f64::consts::PI * p[2] * x + p[3];
        p[0] * (-x / p[1]).exp() * theta.cos() + p[4]
    }

    fn grad(&self, p: &[f64], x: f64, out: &mut [f64]) {
        let e = (-x / p[1]).exp();
        let theta = 2.0 * std::f64::consts::PI * p[2] * x + p[3];
        let (s, c) = theta.sin_cos();
        out[0] = e * c;
        out[1] = p[0] * x / (p[1] * p[1]) * e * c;
        out[2] = -p[0] * e * s * 2.0 * std::f64::consts::PI * x;
        out[3] = -p[0] * e * s;
        out[4] = 1.0;
    }
}

/// R(d) = RA·10⁶/(d − l)² with parameters `[ra_ohm_um2, l_nm]`;
/// d in nm, R in Ω. The 10⁶ converts (d − l)² from nm² to µm².
pub struct ResistanceAreaLaw;

impl FitModel for ResistanceAreaLaw {
    fn names(&self) -> &'static [&'static str] {
        &["ra_ohm_um2", "l_nm"]
    }

    fn eval(&self, p: &[f64], x: f64) -> f64 {
        let w = x - p[1];
        p[0] * 1.0e6 / (w * w)
    }

    fn grad(&self, p: &[f64], x: f64, out: &mut [f64]) {
        let w = x - p[1];
        out[0] = 1.0e6 / (w * w);
        out[1] = 2.0 * p[0] * 1.0e6 / (w * w * w);
    }
}

/// slope·x + intercept with parameters `[slope, intercept]`.
pub struct StraightLine;

impl FitModel for StraightLine {
    fn names(&self) -> &'static [&'static str] {
        &["slope", "intercept"]
    }

    fn eval(&self, p: &[f64], x: f64) -> f64 {
        p[0] * x + p[1]
    }

    fn grad(&self, _p: &[f64], x: f64, out: &mut [f64]) {
        out[0] = x;
        out[1] = 1.0;
    }
}

// ================== engine ==================

/// Outcome of a least-squares fit.
///
/// `std_errors` (one per parameter, same order as `params`) are present
/// only when the fit converged and the covariance at the optimum is
/// finite; they come from the Gaussian approximation
/// cov = σ²(JᵀJ)⁻¹ with σ² the reduced sum of squares.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Named parameter values at the final iterate.
    pub params: Vec<(String, f64)>,
    /// Per-parameter standard errors, when available.
    pub std_errors: Option<Vec<f64>>,
    /// 2-norm of the residual vector at the final iterate.
    pub residual_norm: f64,
    /// Whether a convergence criterion fired before the iteration cap.
    pub converged: bool,
    /// Accepted Levenberg-Marquardt steps taken.
    pub iterations: usize,
    /// Non-fatal diagnostics (fallback paths, suppressed uncertainties).
    pub warnings: Vec<String>,
}

impl FitReport {
    /// Value of the named parameter, if present.
    pub fn value(&self, name: &str) -> Option<f64> {
        self.params
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    /// Standard error of the named parameter, if present.
    pub fn std_error(&self, name: &str) -> Option<f64> {
        let idx = self.params.iter().position(|(n, _)| n == name)?;
        self.std_errors.as_ref().map(|e| e[idx])
    }

    fn rename(mut self, from: &str, to: &str) -> Self {
        for (n, _) in &mut self.params {
            if n == from {
                *n = to.to_string();
            }
        }
        self
    }
}

/// Levenberg-Marquardt fit of `model` to `data` from `init`, with
/// inclusive box `bounds` (use ±infinity for free parameters).
///
/// Converges when the relative residual-norm change drops below
/// [`RESIDUAL_REL_TOL`] or the gradient norm below [`GRADIENT_TOL`];
/// hitting [`MAX_FIT_ITERATIONS`] returns a non-converged report. A
/// structurally singular Jacobian (a parameter the data cannot see) is
/// a degenerate-model error.
pub fn damped_least_squares(
    model: &dyn FitModel,
    data: &SampledTrace,
    init: &[f64],
    bounds: &[(f64, f64)],
) -> Result<FitReport> {
    lm_core(model, data.x(), data.y(), init, bounds, MAX_FIT_ITERATIONS)
}

fn residuals(model: &dyn FitModel, x: &[f64], y: &[f64], p: &[f64]) -> Result<(Vec<f64>, f64)> {
    let mut r = Vec::with_capacity(x.len());
    let mut ssr = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let f = model.eval(p, xi);
        if !f.is_finite() {
            return Err(Error::Numerical(format!(
                "model value not finite at x = {xi} with parameters {p:?}"
            )));
        }
        let ri = yi - f;
        ssr += ri * ri;
        r.push(ri);
    }
    Ok((r, ssr))
}

fn jacobian(model: &dyn FitModel, x: &[f64], p: &[f64]) -> Result<DMatrix<f64>> {
    let (n, np) = (x.len(), p.len());
    let mut j = DMatrix::zeros(n, np);
    let mut row = vec![0.0; np];
    for (i, &xi) in x.iter().enumerate() {
        model.grad(p, xi, &mut row);
        for (k, &g) in row.iter().enumerate() {
            if !g.is_finite() {
                return Err(Error::Numerical(format!(
                    "model gradient not finite at x = {xi} with parameters {p:?}"
                )));
            }
            j[(i, k)] = g;
        }
    }
    Ok(j)
}

fn clamp_into(p: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in p.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

fn lm_core(
    model: &dyn FitModel,
    x: &[f64],
    y: &[f64],
    init: &[f64],
    bounds: &[(f64, f64)],
    max_iter: usize,
) -> Result<FitReport> {
    let np = model.arity();
    let n = x.len();
    if init.len() != np || bounds.len() != np {
        return Err(Error::Parameter(format!(
            "model has {np} parameters, got {} initial values and {} bounds",
            init.len(),
            bounds.len()
        )));
    }
    if n < np + 1 {
        return Err(Error::Arity(format!(
            "need at least {} samples to fit {np} parameters, got {n}",
            np + 1
        )));
    }
    for (k, (&v, &(lo, hi))) in init.iter().zip(bounds).enumerate() {
        if !(lo <= hi) {
            return Err(Error::Parameter(format!(
                "bounds for {} are inverted: ({lo}, {hi})",
                model.names()[k]
            )));
        }
        if !v.is_finite() || v < lo || v > hi {
            return Err(Error::Parameter(format!(
                "initial {} = {v} outside bounds ({lo}, {hi})",
                model.names()[k]
            )));
        }
    }

    let mut p = init.to_vec();
    let (mut r, mut ssr) = residuals(model, x, y, &p)?;
    // 0 tries pure Gauss-Newton first; damping turns on only after a
    // rejected step, so linear problems finish in one exact step.
    let mut lambda = 0.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut warnings = Vec::new();

    for iter in 1..=max_iter {
        let j = jacobian(model, x, &p)?;
        let jtj = j.transpose() * &j;
        let g = j.transpose() * DMatrix::from_column_slice(n, 1, &r);
        if g.norm() < GRADIENT_TOL {
            converged = true;
            iterations = iter - 1;
            break;
        }
        let max_diag = (0..np).map(|k| jtj[(k, k)]).fold(0.0, f64::max);
        if let Some(k) = (0..np).find(|&k| jtj[(k, k)] <= max_diag * 1.0e-30) {
            if iter == 1 {
                return Err(Error::DegenerateModel(format!(
                    "data carries no information on {} (singular Jacobian)",
                    model.names()[k]
                )));
            }
            // The iteration itself drove the model into a flat
            // direction (e.g. amplitude to zero on non-decaying data):
            // report the point reached rather than erroring out.
            warnings.push(format!(
                "{} lost influence during iteration; stopped at a degenerate point",
                model.names()[k]
            ));
            iterations = iter - 1;
            break;
        }

        // Inner damping loop: grow lambda until a step is accepted.
        loop {
            let mut a = jtj.clone();
            for k in 0..np {
                a[(k, k)] = jtj[(k, k)] * (1.0 + lambda);
            }
            let step = nalgebra::linalg::Cholesky::new(a).map(|ch| ch.solve(&g));
            let mut accepted = false;
            if let Some(step) = step {
                let mut trial = p.clone();
                for k in 0..np {
                    trial[k] += step[(k, 0)];
                }
                clamp_into(&mut trial, bounds);
                if let Ok((r_t, ssr_t)) = residuals(model, x, y, &trial) {
                    let rel = (ssr.sqrt() - ssr_t.sqrt()).abs() / ssr.sqrt().max(f64::MIN_POSITIVE);
                    if ssr_t < ssr {
                        p = trial;
                        r = r_t;
                        ssr = ssr_t;
                        iterations = iter;
                        if lambda > 0.0 {
                            lambda = (lambda / 10.0).max(1.0e-12);
                        }
                        if rel < RESIDUAL_REL_TOL || ssr == 0.0 {
                            converged = true;
                        }
                        accepted = true;
                    } else if rel < RESIDUAL_REL_TOL {
                        // The best available step no longer moves the
                        // residual measurably: the iterate is at the
                        // attainable floor (typical for exact data,
                        // where steps churn roundoff).
                        converged = true;
                        iterations = iter;
                        break;
                    }
                }
            }
            if accepted {
                break;
            }
            lambda = if lambda == 0.0 { 1.0e-3 } else { lambda * 10.0 };
            if lambda > 1.0e12 {
                // Stuck against noise floor or a bound: report the best
                // point found rather than erroring out.
                warnings.push("damping exhausted before a convergence criterion fired".into());
                iterations = iter;
                break;
            }
        }
        if converged || lambda > 1.0e12 {
            break;
        }
    }

    let std_errors = if converged {
        match covariance_std_errors(model, x, &p, ssr) {
            Some(e) => Some(e),
            None => {
                warnings.push("covariance singular at the optimum; no uncertainties".into());
                None
            }
        }
    } else {
        None
    };

    Ok(FitReport {
        params: model
            .names()
            .iter()
            .map(|s| s.to_string())
            .zip(p.iter().copied())
            .collect(),
        std_errors,
        residual_norm: ssr.sqrt(),
        converged,
        iterations,
        warnings,
    })
}

fn covariance_std_errors(
    model: &dyn FitModel,
    x: &[f64],
    p: &[f64],
    ssr: f64,
) -> Option<Vec<f64>> {
    let j = jacobian(model, x, p).ok()?;
    let jtj = j.transpose() * &j;
    let inv = nalgebra::linalg::Cholesky::new(jtj)?.inverse();
    let dof = (x.len() - p.len()).max(1) as f64;
    let sigma2 = ssr / dof;
    Some((0..p.len())
        .map(|k| (inv[(k, k)] * sigma2).max(0.0).sqrt())
        .collect())
}

// ================== decay fits ==================

fn check_time_trace(trace: &SampledTrace) -> Result<()> {
    if trace.x_unit != XUnit::Microseconds || trace.y_unit != YUnit::Population {
        return Err(Error::Data(format!(
            "decay fits need a µs/population trace, got {:?}/{:?}",
            trace.x_unit, trace.y_unit
        )));
    }
    Ok(())
}

/// Deterministic `[a, tau, c]` guess: log-linear regression of
/// ln(y − min y) against t, falling back to window-scale heuristics
/// when the data does not decay.
fn decay_init(x: &[f64], y: &[f64]) -> [f64; 3] {
    let ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let span = x[x.len() - 1] - x[0];
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(_, &yi)| yi - ymin > 0.0)
        .map(|(&xi, &yi)| (xi, (yi - ymin).ln()))
        .collect();
    if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx > 0.0 {
            let slope = sxy / sxx;
            if slope < 0.0 {
                let tau = (-1.0 / slope).clamp(1.0e-3 * span, 1.0e3 * span);
                return [(my - slope * mx).exp(), tau, ymin];
            }
        }
    }
    [y[0] - y[y.len() - 1], span / 3.0, y[y.len() - 1]]
}

fn fit_decay_named(trace: &SampledTrace, label: &str) -> Result<FitReport> {
    check_time_trace(trace)?;
    let (x, y) = (trace.x(), trace.y());
    let ymax = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
    if ymax - ymin == 0.0 {
        return Err(Error::DegenerateModel(
            "constant trace: decay constant unidentifiable".into(),
        ));
    }
    let init = decay_init(x, y);
    let bounds = [
        (f64::NEG_INFINITY, f64::INFINITY),
        (1.0e-9, f64::INFINITY),
        (f64::NEG_INFINITY, f64::INFINITY),
    ];
    Ok(lm_core(&ExponentialDecay, x, y, &init, &bounds, MAX_FIT_ITERATIONS)?
        .rename("tau_us", label))
}

/// Fit a·exp(−t/T1) + c to a relaxation trace; the decay constant is
/// reported as `T1_us`.
pub fn fit_t1(trace: &SampledTrace) -> Result<FitReport> {
    fit_decay_named(trace, "T1_us")
}

/// Fit a·exp(−t/T2) + c to a Hahn-echo trace; the decay constant is
/// reported as `T2_echo_us`.
pub fn fit_echo(trace: &SampledTrace) -> Result<FitReport> {
    fit_decay_named(trace, "T2_echo_us")
}

// ================== Ramsey fit ==================

/// Decay-scale guess from the RMS of `r` over the two window halves:
/// dt/ln(rms1/rms2), with dt the spacing of the half centroids. None
/// when the second half does not decay.
fn envelope_tau_guess(t: &[f64], r: &[f64]) -> Option<f64> {
    let half = t.len() / 2;
    let rms = |s: &[f64]| (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
    let (r1, r2) = (rms(&r[..half]), rms(&r[half..]));
    let centroid = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let dt = centroid(&t[half..]) - centroid(&t[..half]);
    if r1 > 0.0 && r2 > 0.0 && r1 > r2 && dt > 0.0 {
        Some(dt / (r1 / r2).ln())
    } else {
        None
    }
}

/// Dominant discrete spectral component of `r` on the grid frequencies
/// k/span, k = 1..(n−1)/2: (frequency in MHz, fraction of total power,
/// cosine sum, sine sum). The sums are phased against t − t0.
fn spectral_peak(t: &[f64], r: &[f64]) -> Option<(f64, f64, f64, f64)> {
    let n = t.len();
    let span = t[n - 1] - t[0];
    let kmax = (n - 1) / 2;
    if kmax < 1 || span <= 0.0 {
        return None;
    }
    let total: f64 = r.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return None;
    }
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for k in 1..=kmax {
        let omega = 2.0 * std::f64::consts::PI * k as f64 / span;
        let (mut c, mut s) = (0.0, 0.0);
        for (&ti, &ri) in t.iter().zip(r) {
            let (si, ci) = (omega * (ti - t[0])).sin_cos();
            c += ri * ci;
            s += ri * si;
        }
        let power = c * c + s * s;
        if best.is_none_or(|b| power > b.1) {
            best = Some((k as f64 / span, power, c, s));
        }
    }
    let (f, power, c, s) = best?;
    Some((f, 2.0 * power / (n as f64 * total), c, s))
}

/// Fit a·exp(−t/T2*)·cos(2π·f·t + φ) + c to a Ramsey trace.
///
/// The detuning guess is the dominant discrete spectral component of
/// the residual after a pure-decay prefit. When that component carries
/// less than [`OSCILLATION_MIN_POWER_FRACTION`] of the residual power
/// there is no resolvable fringe (the grid starts at one cycle per
/// window, so slower detunings are absorbed by the envelope); the
/// prefit is returned instead, with the decay constant as `T2_star_us`
/// and a warning.
pub fn fit_ramsey(trace: &SampledTrace) -> Result<FitReport> {
    check_time_trace(trace)?;
    let (x, y) = (trace.x(), trace.y());
    let ymax = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
    if ymax - ymin == 0.0 {
        return Err(Error::DegenerateModel(
            "constant trace: fringe parameters unidentifiable".into(),
        ));
    }

    let init = decay_init(x, y);
    let bounds3 = [
        (f64::NEG_INFINITY, f64::INFINITY),
        (1.0e-9, f64::INFINITY),
        (f64::NEG_INFINITY, f64::INFINITY),
    ];
    let prefit = lm_core(&ExponentialDecay, x, y, &init, &bounds3, MAX_FIT_ITERATIONS)?;
    let pp: Vec<f64> = prefit.params.iter().map(|(_, v)| *v).collect();
    let resid: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| yi - ExponentialDecay.eval(&pp, xi))
        .collect();

    let peak = spectral_peak(x, &resid);
    let oscillating = peak.is_some_and(|(_, frac, _, _)| frac >= OSCILLATION_MIN_POWER_FRACTION);
    let fallback = |mut report: FitReport| {
        report
            .warnings
            .push("no fringe above the detection threshold; fitted a pure decay".into());
        Ok(report.rename("tau_us", "T2_star_us"))
    };
    if !oscillating {
        return fallback(prefit);
    }

    let (f0, _, csum, ssum) = peak.unwrap();
    let omega = 2.0 * std::f64::consts::PI * f0;
    // atan2(−S, C) is the phase at t0; shift it back to absolute time.
    let phase = (-ssum).atan2(csum) - omega * x[0];
    let n = x.len() as f64;
    let a0 = 2.0 * (csum * csum + ssum * ssum).sqrt() / n;
    let span = x[x.len() - 1] - x[0];
    // Envelope guess from the residual power in the two window halves;
    // the prefit decay constant is unreliable when the oscillation
    // dominates. For a pure exponential envelope the half-to-half RMS
    // ratio inverts exactly.
    let tau0 = envelope_tau_guess(x, &resid)
        .unwrap_or(span / 3.0)
        .clamp(1.0e-3 * span, 1.0e3 * span);
    let c0 = if prefit.converged {
        pp[2]
    } else {
        y.iter().sum::<f64>() / n
    };
    let init5 = [a0.max(1.0e-12), tau0, f0, phase, c0];
    // A decay time under a thousandth of the window flattens the model
    // into a spike at t0; nothing identifiable lives there.
    let bounds5 = [
        (f64::NEG_INFINITY, f64::INFINITY),
        (1.0e-3 * span, f64::INFINITY),
        (1.0e-12, f64::INFINITY),
        (f64::NEG_INFINITY, f64::INFINITY),
        (f64::NEG_INFINITY, f64::INFINITY),
    ];
    let full = lm_core(&DecayingCosine, x, y, &init5, &bounds5, MAX_FIT_ITERATIONS)?;
    // Below one cycle per window the envelope and the fringe trade off
    // freely; such a detuning is not identifiable and the fit falls
    // back, enforcing the one-period precondition a posteriori.
    if full.value("f_mhz").is_some_and(|f| f < 1.0 / span) {
        return fallback(prefit);
    }
    Ok(full.rename("tau_us", "T2_star_us"))
}

// ================== resistance-area fit ==================

/// One probed test junction: nominal size, room-temperature resistance,
/// optional die coordinates on the wafer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaferResistancePoint {
    /// Nominal junction size d (nm).
    pub d_nm: f64,
    /// Measured resistance (Ω).
    pub r_ohm: f64,
    /// Die coordinates on the wafer map, when known.
    pub die: Option<(i32, i32)>,
}

impl WaferResistancePoint {
    /// Validated point: both size and resistance strictly positive.
    pub fn new(d_nm: f64, r_ohm: f64) -> Result<Self> {
        if !(d_nm > 0.0 && d_nm.is_finite()) {
            return Err(Error::Parameter(format!(
                "junction size must be positive, got {d_nm} nm"
            )));
        }
        if !(r_ohm > 0.0 && r_ohm.is_finite()) {
            return Err(Error::Parameter(format!(
                "resistance must be positive, got {r_ohm} Ω"
            )));
        }
        Ok(Self {
            d_nm,
            r_ohm,
            die: None,
        })
    }

    /// Attach die coordinates.
    pub fn with_die(mut self, col: i32, row: i32) -> Self {
        self.die = Some((col, row));
        self
    }
}

/// Fit R = RA·10⁶/(d − l)² to wafer probe data: `ra_ohm_um2` is the
/// resistance-area product, `l_nm` the bilayer lateral inset (the
/// amount by which the conducting area falls short of nominal on each
/// side pair). Points are sorted internally, so the result is invariant
/// under input reordering; duplicate sizes are fine.
///
/// Needs ≥ 4 points spanning at least a factor 2 in size, otherwise RA
/// and l trade off freely. The fitted l is constrained below the
/// smallest probed size.
pub fn fit_resistance_area(points: &[WaferResistancePoint]) -> Result<FitReport> {
    if points.len() < 4 {
        return Err(Error::Arity(format!(
            "need at least 4 probe points, got {}",
            points.len()
        )));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| (a.d_nm, a.r_ohm).partial_cmp(&(b.d_nm, b.r_ohm)).unwrap());
    let d_min = sorted[0].d_nm;
    let d_max = sorted[sorted.len() - 1].d_nm;
    if d_max < 2.0 * d_min {
        return Err(Error::DegenerateModel(format!(
            "sizes span {d_min}..{d_max} nm, less than a factor 2: RA and l are not separately \
             identifiable"
        )));
    }
    let x: Vec<f64> = sorted.iter().map(|p| p.d_nm).collect();
    let y: Vec<f64> = sorted.iter().map(|p| p.r_ohm).collect();

    // Linearized guess: 1/sqrt(R) = (d − l)/(1000·sqrt(RA)) is a line in d.
    let s: Vec<f64> = y.iter().map(|&r| 1.0 / r.sqrt()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let ms = s.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&v| (v - mx).powi(2)).sum();
    let sxs: f64 = x.iter().zip(&s).map(|(&v, &w)| (v - mx) * (w - ms)).sum();
    let slope = sxs / sxx;
    if slope <= 0.0 {
        return Err(Error::DegenerateModel(
            "resistance does not fall with size; no resistance-area law fits".into(),
        ));
    }
    let ra0 = 1.0e-6 / (slope * slope);
    let l0 = (mx - ms / slope).clamp(-d_min, 0.99 * d_min);

    let bounds = [(1.0e-12, f64::INFINITY), (f64::NEG_INFINITY, 0.999 * d_min)];
    lm_core(
        &ResistanceAreaLaw,
        &x,
        &y,
        &[ra0, l0],
        &bounds,
        MAX_FIT_ITERATIONS,
    )
}

// ================== frequency-size trend ==================

/// Linear trend of qubit frequency against nominal junction size, with
/// per-point residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    /// Fitted slope (GHz per nm).
    pub slope_ghz_per_nm: f64,
    /// Fitted intercept (GHz).
    pub intercept_ghz: f64,
    /// Residual f − trend per input point, in input order (GHz).
    pub residuals_ghz: Vec<f64>,
    /// Largest |residual| (GHz).
    pub max_abs_residual_ghz: f64,
}

impl TrendReport {
    /// Indices of points whose residual magnitude exceeds `band_ghz`.
    pub fn outliers(&self, band_ghz: f64) -> Vec<usize> {
        self.residuals_ghz
            .iter()
            .enumerate()
            .filter(|(_, r)| r.abs() > band_ghz)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Least-squares line through (size nm, frequency GHz) points.
pub fn frequency_size_trend(points: &[(f64, f64)]) -> Result<TrendReport> {
    if points.len() < 3 {
        return Err(Error::Arity(format!(
            "need at least 3 points for a trend, got {}",
            points.len()
        )));
    }
    if let Some((d, f)) = points
        .iter()
        .find(|(d, f)| !(d.is_finite() && f.is_finite()))
    {
        return Err(Error::Data(format!("non-finite point ({d}, {f})")));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateModel(
            "all points share one size; slope unidentifiable".into(),
        ));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = points.iter().map(|p| p.1 - (slope * p.0 + intercept)).collect();
    let max_abs = residuals.iter().fold(0.0, |m: f64, r| m.max(r.abs()));
    Ok(TrendReport {
        slope_ghz_per_nm: slope,
        intercept_ghz: intercept,
        residuals_ghz: residuals,
        max_abs_residual_ghz: max_abs,
    })
}

// ================== quality factor ==================

/// Effective qubit quality factor Q = 2π·f·T1 (f in GHz, T1 in µs).
pub fn quality_factor(f_ge_ghz: f64, t1_us: f64) -> Result<f64> {
    if !(f_ge_ghz > 0.0 && f_ge_ghz.is_finite()) {
        return Err(Error::Parameter(format!(
            "frequency must be positive, got {f_ge_ghz} GHz"
        )));
    }
    if !(t1_us > 0.0 && t1_us.is_finite()) {
        return Err(Error::Parameter(format!(
            "T1 must be positive, got {t1_us} µs"
        )));
    }
    // GHz·µs = 1e3 cycles.
    Ok(2.0 * std::f64::consts::PI * f_ge_ghz * t1_us * 1.0e3)
}

// ================== coherence records ==================

/// One row of a repeated-characterization log: a timestamp, the qubit
/// frequency, and whichever coherence times were measured that round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceRecord {
    /// Hours since the start of the monitoring run.
    pub timestamp_h: f64,
    /// Qubit transition frequency (GHz).
    pub f_ge_ghz: f64,
    /// Relaxation time (µs), when measured.
    pub t1_us: Option<f64>,
    /// Ramsey dephasing time (µs), when measured.
    pub t2_star_us: Option<f64>,
    /// Hahn-echo dephasing time (µs), when measured.
    pub t2_echo_us: Option<f64>,
}

impl CoherenceRecord {
    /// Validated record with no coherence times attached yet.
    pub fn new(timestamp_h: f64, f_ge_ghz: f64) -> Result<Self> {
        if !timestamp_h.is_finite() {
            return Err(Error::Parameter(format!(
                "timestamp must be finite, got {timestamp_h}"
            )));
        }
        if !(f_ge_ghz > 0.0 && f_ge_ghz.is_finite()) {
            return Err(Error::Parameter(format!(
                "frequency must be positive, got {f_ge_ghz} GHz"
            )));
        }
        Ok(Self {
            timestamp_h,
            f_ge_ghz,
            t1_us: None,
            t2_star_us: None,
            t2_echo_us: None,
        })
    }

    /// Attach a T1 measurement (µs, must be positive).
    pub fn with_t1(mut self, t1_us: f64) -> Result<Self> {
        Self::check_time("T1", t1_us)?;
        self.t1_us = Some(t1_us);
        Ok(self)
    }

    /// Attach a Ramsey T2* measurement (µs, must be positive).
    pub fn with_t2_star(mut self, t2_star_us: f64) -> Result<Self> {
        Self::check_time("T2*", t2_star_us)?;
        self.t2_star_us = Some(t2_star_us);
        Ok(self)
    }

    /// Attach an echo T2 measurement (µs, must be positive).
    pub fn with_t2_echo(mut self, t2_echo_us: f64) -> Result<Self> {
        Self::check_time("T2_echo", t2_echo_us)?;
        self.t2_echo_us = Some(t2_echo_us);
        Ok(self)
    }

    fn check_time(name: &str, v: f64) -> Result<()> {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Parameter(format!(
                "{name} must be positive, got {v} µs"
            )));
        }
        Ok(())
    }
}

/// Echo decay normally outlasts the Ramsey decay (the π pulse undoes
/// slow detuning drifts); records violating that get a warning string,
/// never an error.
pub fn consistency_warnings(records: &[CoherenceRecord]) -> Vec<String> {
    records
        .iter()
        .filter_map(|r| match (r.t2_star_us, r.t2_echo_us) {
            (Some(star), Some(echo)) if echo < star => Some(format!(
                "record at {} h: T2_echo = {echo} µs below T2* = {star} µs",
                r.timestamp_h
            )),
            _ => None,
        })
        .collect()
}

/// Summary of one logged quantity over a monitoring run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantityStats {
    /// Records in which the quantity was present.
    pub count: usize,
    /// Arithmetic mean of the present values.
    pub mean: f64,
    /// Population standard deviation (zero for a single value).
    pub std: f64,
    /// Smallest present value.
    pub min: f64,
    /// Largest present value.
    pub max: f64,
}

fn quantity_stats(values: &[f64]) -> Option<QuantityStats> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some(QuantityStats {
        count: values.len(),
        mean,
        std: var.sqrt(),
        min: values.iter().cloned().fold(f64::INFINITY, f64::min),
        max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Per-quantity summaries over a monitoring run; the time-averaged T1
/// is the headline number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceStats {
    /// T1 summary, absent when no record carried one.
    pub t1_us: Option<QuantityStats>,
    /// T2* summary, absent when no record carried one.
    pub t2_star_us: Option<QuantityStats>,
    /// Echo T2 summary, absent when no record carried one.
    pub t2_echo_us: Option<QuantityStats>,
    /// Frequency summary (present in every record).
    pub f_ge_ghz: QuantityStats,
}

impl CoherenceStats {
    /// Headline number: the time-averaged T1 (µs), when any was logged.
    pub fn time_averaged_t1_us(&self) -> Option<f64> {
        self.t1_us.map(|s| s.mean)
    }
}

/// Mean/std/min/max per quantity over ≥ 2 records; missing fields
/// reduce the per-quantity count, they are not errors.
pub fn coherence_time_series_stats(records: &[CoherenceRecord]) -> Result<CoherenceStats> {
    if records.len() < 2 {
        return Err(Error::Arity(format!(
            "need at least 2 records for statistics, got {}",
            records.len()
        )));
    }
    let collect = |f: fn(&CoherenceRecord) -> Option<f64>| -> Vec<f64> {
        records.iter().filter_map(f).collect()
    };
    Ok(CoherenceStats {
        t1_us: quantity_stats(&collect(|r| r.t1_us)),
        t2_star_us: quantity_stats(&collect(|r| r.t2_star_us)),
        t2_echo_us: quantity_stats(&collect(|r| r.t2_echo_us)),
        f_ge_ghz: quantity_stats(&collect(|r| Some(r.f_ge_ghz))).unwrap(),
    })
}

// ================== bootstrap uncertainties ==================

/// Residual-resampling bootstrap standard errors, as an opt-in
/// alternative to the Gaussian approximation in [`FitReport`]: refit
/// against fitted values plus resampled residuals, `resamples` times,
/// and take the per-parameter spread. Deterministic for a fixed seed.
pub fn bootstrap_std_errors(
    model: &dyn FitModel,
    data: &SampledTrace,
    report: &FitReport,
    resamples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if !report.converged {
        return Err(Error::Parameter(
            "bootstrap needs a converged fit to resample around".into(),
        ));
    }
    if resamples < 2 {
        return Err(Error::Arity(format!(
            "need at least 2 resamples, got {resamples}"
        )));
    }
    let p0: Vec<f64> = report.params.iter().map(|(_, v)| *v).collect();
    if p0.len() != model.arity() {
        return Err(Error::Parameter(format!(
            "report carries {} parameters, model has {}",
            p0.len(),
            model.arity()
        )));
    }
    let (x, y) = (data.x(), data.y());
    let fitted: Vec<f64> = x.iter().map(|&xi| model.eval(&p0, xi)).collect();
    let resid: Vec<f64> = y.iter().zip(&fitted).map(|(&yi, &fi)| yi - fi).collect();
    let bounds: Vec<(f64, f64)> = vec![(f64::NEG_INFINITY, f64::INFINITY); p0.len()];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let y_star: Vec<f64> = fitted
            .iter()
            .map(|&fi| fi + resid[rng.gen_range(0..resid.len())])
            .collect();
        if let Ok(r) = lm_core(model, x, &y_star, &p0, &bounds, MAX_FIT_ITERATIONS) {
            if r.converged {
                samples.push(r.params.iter().map(|(_, v)| *v).collect());
            }
        }
    }
    if samples.len() < resamples / 2 {
        return Err(Error::Numerical(format!(
            "only {}/{resamples} bootstrap refits converged",
            samples.len()
        )));
    }
    let nb = samples.len() as f64;
    Ok((0..p0.len())
        .map(|k| {
            let mean = samples.iter().map(|s| s[k]).sum::<f64>() / nb;
            (samples.iter().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / nb).sqrt()
        })
        .collect())
}
