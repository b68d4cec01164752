//! Charge-basis quantization of the double-junction qubit and the
//! single-junction transmon.
//!
//! The double-junction circuit: two Josephson junctions in series between
//! two electrodes that are shunted by C_S, with a small island between
//! the junctions. Taking the island as the phase reference leaves two
//! dynamical nodes with phases φ1, φ2 (the drops across the two
//! junctions) and integer Cooper-pair numbers n1, n2. In the combined
//! charges n_± = n2 ± n1 the Hamiltonian separates into
//!
//!   H = 4·(e²/2hC_Σ)·(n_− − n_g−)² + 4·(e²/2hC_Δ)·(n_+ − n_g+)²
//!       − E_J1 cos φ1 − E_J2 cos φ2
//!
//! with C_Δ = C_J1 + C_J2 + C_g1 + C_g2 and C_Σ = 4·C_S + C_Δ. Working in
//! the per-node basis (n1, n2) keeps the parity coupling between n_+ and
//! n_− (they are either both even or both odd) automatic.
//!
//! All energies are frequencies (E/h) in GHz; capacitances are fF.

use nalgebra::{Complex, DMatrix};

use crate::constants::E2_OVER_2H_GHZ_FF;
use crate::error::{Error, Result};
use crate::linalg::{self, SparseSym};

/// Capacitances and Josephson energies of the double-junction circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleJunctionParams {
    c_s: f64,
    c_j1: f64,
    c_j2: f64,
    c_g1: f64,
    c_g2: f64,
    e_j1: f64,
    e_j2: f64,
}

impl DoubleJunctionParams {
    /// Validate and build. Shunt and junction capacitances must be
    /// positive, gate capacitances non-negative, Josephson energies
    /// positive.
    pub fn new(
        c_s: f64,
        c_j1: f64,
        c_j2: f64,
        c_g1: f64,
        c_g2: f64,
        e_j1: f64,
        e_j2: f64,
    ) -> Result<Self> {
        for (name, v) in [("C_S", c_s), ("C_J1", c_j1), ("C_J2", c_j2)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!(
                    "{name} must be positive and finite, got {v} fF"
                )));
            }
        }
        for (name, v) in [("C_g1", c_g1), ("C_g2", c_g2)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!(
                    "{name} must be non-negative and finite, got {v} fF"
                )));
            }
        }
        for (name, v) in [("E_J1", e_j1), ("E_J2", e_j2)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!(
                    "{name} must be positive and finite, got {v} GHz"
                )));
            }
        }
        Ok(Self {
            c_s,
            c_j1,
            c_j2,
            c_g1,
            c_g2,
            e_j1,
            e_j2,
        })
    }

    /// Symmetric-junction convenience: C_J1 = C_J2, E_J1 = E_J2, no gates.
    pub fn symmetric(c_s: f64, c_j: f64, e_j: f64) -> Result<Self> {
        Self::new(c_s, c_j, c_j, 0.0, 0.0, e_j, e_j)
    }

    /// Shunt capacitance C_S (fF).
    pub fn c_s(&self) -> f64 {
        self.c_s
    }

    /// Junction capacitances (fF).
    pub fn c_j(&self) -> (f64, f64) {
        (self.c_j1, self.c_j2)
    }

    /// Gate capacitances (fF).
    pub fn c_g(&self) -> (f64, f64) {
        (self.c_g1, self.c_g2)
    }

    /// Josephson energies (GHz).
    pub fn e_j(&self) -> (f64, f64) {
        (self.e_j1, self.e_j2)
    }

    /// C_Δ = C_J1 + C_J2 + C_g1 + C_g2 (fF). Derived, never stored.
    pub fn c_delta(&self) -> f64 {
        self.c_j1 + self.c_j2 + self.c_g1 + self.c_g2
    }

    /// C_Σ = 4·C_S + C_Δ (fF). Always exceeds C_Δ.
    pub fn c_sigma(&self) -> f64 {
        4.0 * self.c_s + self.c_delta()
    }

    /// Charging scale of the n_− mode, (e²/2h)/C_Σ (GHz).
    pub fn ec_sigma(&self) -> f64 {
        E2_OVER_2H_GHZ_FF / self.c_sigma()
    }

    /// Charging scale of the n_+ mode, (e²/2h)/C_Δ (GHz).
    pub fn ec_delta(&self) -> f64 {
        E2_OVER_2H_GHZ_FF / self.c_delta()
    }
}

/// Offset charges (n_g−, n_g+) in Cooper-pair units.
///
/// The physical symmetry lattice in these coordinates is generated by
/// the simultaneous shifts (±1, +1): only shifts of both components
/// together return to the same physical spectrum. Shifting a single
/// component by 1 lands on a parity-distinct gate point whose spectrum
/// differs by up to the charge dispersion (exponentially small in the
/// transmon regime, but nonzero).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GateCharge {
    /// Offset of the n_− = n2 − n1 mode.
    pub n_g_minus: f64,
    /// Offset of the n_+ = n2 + n1 mode.
    pub n_g_plus: f64,
}

impl GateCharge {
    /// Both offsets zero.
    pub fn zero() -> Self {
        Self::default()
    }

    /// Build from explicit offsets.
    pub fn new(n_g_minus: f64, n_g_plus: f64) -> Self {
        Self {
            n_g_minus,
            n_g_plus,
        }
    }
}

/// Charge-basis truncation: per-node Cooper-pair numbers run over
/// [−n_max, n_max], so the Hamiltonian dimension is (2·n_max + 1)².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSpec {
    n_max: usize,
    convergence_tol_hz: f64,
}

impl TruncationSpec {
    /// Validate and build: n_max ≥ 1, tolerance positive (Hz).
    pub fn new(n_max: usize, convergence_tol_hz: f64) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::Parameter("n_max must be ≥ 1".into()));
        }
        if !(convergence_tol_hz > 0.0) || !convergence_tol_hz.is_finite() {
            return Err(Error::Parameter(format!(
                "convergence tolerance must be positive, got {convergence_tol_hz} Hz"
            )));
        }
        Ok(Self {
            n_max,
            convergence_tol_hz,
        })
    }

    /// Per-node charge cutoff.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Frequency tolerance (Hz) for automatic truncation growth.
    pub fn convergence_tol_hz(&self) -> f64 {
        self.convergence_tol_hz
    }

    /// Hamiltonian dimension (2·n_max + 1)².
    pub fn dimension(&self) -> usize {
        let n = 2 * self.n_max + 1;
        n * n
    }
}

impl Default for TruncationSpec {
    /// n_max = 15 (converges the working parameter range with headroom
    /// for Hz-scale dispersion), tolerance 1 kHz.
    fn default() -> Self {
        Self {
            n_max: 15,
            convergence_tol_hz: 1.0e3,
        }
    }
}

/// Eigen-frequencies relative to the ground state plus derived
/// transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Levels in GHz, ascending, `levels[0] = 0`.
    pub levels: Vec<f64>,
    /// Ground to first excited transition (GHz).
    pub f_ge: f64,
    /// First to second excited transition (GHz).
    pub f_ef: f64,
    /// Ground to second excited transition, f_ge + f_ef by construction
    /// (GHz; equals `levels[2]` to rounding).
    pub f_gf: f64,
    /// α = f_ef − f_ge (GHz), negative in the transmon regime.
    pub anharmonicity: f64,
}

impl Spectrum {
    /// Build from raw ascending eigenvalues (any offset); needs ≥ 3.
    pub fn from_eigenvalues(eigenvalues: &[f64]) -> Result<Self> {
        if eigenvalues.len() < 3 {
            return Err(Error::Arity(format!(
                "need at least 3 levels for transitions, got {}",
                eigenvalues.len()
            )));
        }
        if let Some(w) = eigenvalues.windows(2).find(|w| w[1] < w[0]) {
            return Err(Error::Parameter(format!(
                "eigenvalues must be ascending, found {} after {}",
                w[1], w[0]
            )));
        }
        let ground = eigenvalues[0];
        let levels: Vec<f64> = eigenvalues.iter().map(|e| e - ground).collect();
        let f_ge = levels[1];
        let f_ef = levels[2] - levels[1];
        Ok(Self {
            levels,
            f_ge,
            f_ef,
            f_gf: f_ge + f_ef,
            anharmonicity: f_ef - f_ge,
        })
    }
}

/// Transition frequencies (f_ge, f_ef, f_gf, anharmonicity) of a
/// spectrum, all GHz.
pub fn transitions(spectrum: &Spectrum) -> (f64, f64, f64, f64) {
    (
        spectrum.f_ge,
        spectrum.f_ef,
        spectrum.f_gf,
        spectrum.anharmonicity,
    )
}

/// Upper-triangle triplets of the double-junction charge-basis
/// Hamiltonian. Index layout: (n1, n2) ↦ (n1 + n_max)·(2·n_max+1) + (n2 + n_max).
fn charge_hamiltonian_triplets(
    params: &DoubleJunctionParams,
    gate: &GateCharge,
    trunc: &TruncationSpec,
) -> Vec<(usize, usize, f64)> {
    let n_max = trunc.n_max() as i64;
    let width = (2 * n_max + 1) as usize;
    let ec_s = params.ec_sigma();
    let ec_d = params.ec_delta();
    let (e_j1, e_j2) = params.e_j();
    let mut triplets = Vec::with_capacity(3 * width * width);
    for n1 in -n_max..=n_max {
        for n2 in -n_max..=n_max {
            let idx = ((n1 + n_max) as usize) * width + (n2 + n_max) as usize;
            let minus = (n2 - n1) as f64 - gate.n_g_minus;
            let plus = (n2 + n1) as f64 - gate.n_g_plus;
            triplets.push((idx, idx, 4.0 * ec_s * minus * minus + 4.0 * ec_d * plus * plus));
            if n1 < n_max {
                triplets.push((idx, idx + width, -e_j1 / 2.0));
            }
            if n2 < n_max {
                triplets.push((idx, idx + 1, -e_j2 / 2.0));
            }
        }
    }
    triplets
}

/// Dense double-junction Hamiltonian in the per-node charge basis (GHz).
///
/// Diagonal: 4·(e²/2hC_Σ)(n2−n1−n_g−)² + 4·(e²/2hC_Δ)(n2+n1−n_g+)².
/// Off-diagonal: −E_J1/2 coupling n1 → n1±1 and −E_J2/2 coupling
/// n2 → n2±1 (for identical junctions this per-node form equals the ±
/// form, since 2·cos φ_+ cos φ_− = cos φ1 + cos φ2). Real symmetric.
///
/// The factor of 4 on the charging terms is the Cooper-pair charge:
/// n pairs on capacitance C store (2e·n)²/2C = 4·(e²/2C)·n². Charging
/// energies are quoted throughout in the bare e²/2hC scale, so this
/// builder is the one place the factor enters.
pub fn build_charge_hamiltonian(
    params: &DoubleJunctionParams,
    gate: &GateCharge,
    trunc: &TruncationSpec,
) -> DMatrix<f64> {
    let dim = trunc.dimension();
    let mut h = DMatrix::zeros(dim, dim);
    for (i, j, v) in charge_hamiltonian_triplets(params, gate, trunc) {
        h[(i, j)] += v;
        if i != j {
            h[(j, i)] += v;
        }
    }
    h
}

/// Sparse variant of [`build_charge_hamiltonian`], for k-lowest solves
/// on gate-grid sweeps.
pub fn build_charge_hamiltonian_sparse(
    params: &DoubleJunctionParams,
    gate: &GateCharge,
    trunc: &TruncationSpec,
) -> SparseSym {
    let triplets = charge_hamiltonian_triplets(params, gate, trunc);
    SparseSym::from_upper_triplets(trunc.dimension(), &triplets)
        .expect("builder emits valid upper triplets")
}

/// The k lowest levels of a Hermitian (real-symmetric) matrix as a
/// [`Spectrum`].
pub fn eigenspectrum(h: &DMatrix<f64>, k: usize) -> Result<Spectrum> {
    if k < 3 {
        return Err(Error::Arity(format!("need k ≥ 3 levels, got k={k}")));
    }
    if k > h.nrows() {
        return Err(Error::Parameter(format!(
            "k={k} exceeds matrix dimension {}",
            h.nrows()
        )));
    }
    let vals = linalg::eigenvalues_dense(h)?;
    Spectrum::from_eigenvalues(&vals[..k])
}

/// Absolute Lanczos residual tolerance (GHz) for gate-sweep f_ge solves.
/// Eigenvalue error ≲ tol²/f_ge, i.e. millihertz, below the dense-solver
/// precision floor of these matrices.
const SWEEP_RESIDUAL_TOL_GHZ: f64 = 3.0e-6;

/// f_ge at one gate point via the sparse path (two lowest levels).
fn f_ge_sparse(
    params: &DoubleJunctionParams,
    gate: &GateCharge,
    n_max: usize,
    tol_hz: f64,
) -> Result<f64> {
    let trunc = TruncationSpec::new(n_max, tol_hz)?;
    let h = build_charge_hamiltonian_sparse(params, gate, &trunc);
    let vals = linalg::lanczos_lowest_with_tol(&h, 2, SWEEP_RESIDUAL_TOL_GHZ)?;
    Ok(vals[1] - vals[0])
}

/// Double-junction spectrum with automatic truncation growth.
///
/// Computes f_ge at n_max and n_max + 4 (sparse path); if they differ by
/// more than the truncation's convergence tolerance the cutoff doubles,
/// at most twice, before the converged spectrum is computed. Returns the
/// spectrum and the per-node cutoff actually used.
pub fn spectrum(
    params: &DoubleJunctionParams,
    gate: &GateCharge,
    trunc: &TruncationSpec,
    k: usize,
) -> Result<(Spectrum, usize)> {
    let tol_hz = trunc.convergence_tol_hz();
    let mut n_max = trunc.n_max();
    for _ in 0..3 {
        let f0 = f_ge_sparse(params, gate, n_max, tol_hz)?;
        let f1 = f_ge_sparse(params, gate, n_max + 4, tol_hz)?;
        if (f1 - f0).abs() * 1.0e9 <= tol_hz {
            let used = TruncationSpec::new(n_max, tol_hz)?;
            let spec = if used.dimension() <= 1_200 {
                eigenspectrum(&build_charge_hamiltonian(params, gate, &used), k)?
            } else {
                if k < 3 {
                    return Err(Error::Arity(format!("need k ≥ 3 levels, got k={k}")));
                }
                let h = build_charge_hamiltonian_sparse(params, gate, &used);
                let vals = linalg::lanczos_lowest_with_tol(&h, k, SWEEP_RESIDUAL_TOL_GHZ)?;
                Spectrum::from_eigenvalues(&vals)?
            };
            return Ok((spec, n_max));
        }
        n_max *= 2;
    }
    Err(Error::Convergence(format!(
        "f_ge still moving more than {tol_hz} Hz between n_max and n_max+4 \
         after growing the cutoff to {n_max}"
    )))
}

/// How a dispersion sweep samples the (n_g−, n_g+) plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispersionGrid {
    /// `resolution` points per axis over [0, 0.5] plus the corners
    /// (0,1), (1,0), (1,1) of the unit square. Band extrema of
    /// transmon-like spectra sit at these symmetry points; the corners
    /// are the parity-distinct ones a [0, 0.5]² grid misses.
    SymmetryPoints,
    /// `resolution` points per axis over the full closed [0, 1]².
    Full,
}

/// Result of a charge-dispersion sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionReport {
    /// max f_ge − min f_ge over the gate grid (Hz).
    pub peak_to_peak_hz: f64,
    /// Estimated eigensolver precision floor, dim·ε·‖H‖ (Hz).
    pub precision_floor_hz: f64,
    /// True when the dispersion is within 100× of the floor; the value
    /// then mostly measures solver noise, not physics.
    pub near_precision_floor: bool,
    /// Per-node cutoff the sweep converged at.
    pub n_max_used: usize,
}

/// Peak-to-peak variation of f_ge over a gate-charge grid.
///
/// The sweep runs at the truncation's n_max and again at n_max + 4; if
/// the two dispersions disagree by more than 50% (and the value is
/// meaningfully above the precision floor) the cutoff doubles, at most
/// twice, then the disagreement is a convergence error. The returned
/// value is the better-converged (n_max + 4) sweep.
pub fn charge_dispersion(
    params: &DoubleJunctionParams,
    trunc: &TruncationSpec,
    grid_resolution: usize,
    grid: DispersionGrid,
) -> Result<DispersionReport> {
    if grid_resolution < 3 {
        return Err(Error::Parameter(format!(
            "grid resolution must be ≥ 3, got {grid_resolution}"
        )));
    }
    let points = dispersion_grid_points(grid_resolution, grid);
    let tol_hz = trunc.convergence_tol_hz();

    let mut n_max = trunc.n_max();
    for _ in 0..3 {
        let coarse = sweep_peak_to_peak(params, &points, n_max, tol_hz)?;
        let fine = sweep_peak_to_peak(params, &points, n_max + 4, tol_hz)?;

        let probe = build_charge_hamiltonian_sparse(
            params,
            &GateCharge::zero(),
            &TruncationSpec::new(n_max + 4, tol_hz)?,
        );
        // Eigenvalue rounding error grows with the accumulation length:
        // dim·ε·‖H‖, about 1 Hz at the default truncation.
        let floor_hz = f64::EPSILON * probe.dim() as f64 * probe.gershgorin_norm() * 1.0e9;
        let near_floor = fine <= 100.0 * floor_hz;

        if near_floor || (fine - coarse).abs() <= 0.5 * coarse.max(fine) {
            return Ok(DispersionReport {
                peak_to_peak_hz: fine,
                precision_floor_hz: floor_hz,
                near_precision_floor: near_floor,
                n_max_used: n_max + 4,
            });
        }
        n_max *= 2;
    }
    Err(Error::Convergence(format!(
        "dispersion changed by more than 50% between n_max and n_max+4 \
         even at cutoff {n_max}; spectrum not truncation-converged"
    )))
}

fn dispersion_grid_points(resolution: usize, grid: DispersionGrid) -> Vec<GateCharge> {
    let axis = |hi: f64| -> Vec<f64> {
        (0..resolution)
            .map(|i| hi * i as f64 / (resolution - 1) as f64)
            .collect()
    };
    let mut points = Vec::new();
    match grid {
        DispersionGrid::SymmetryPoints => {
            let ax = axis(0.5);
            for &a in &ax {
                for &b in &ax {
                    points.push(GateCharge::new(a, b));
                }
            }
            points.push(GateCharge::new(0.0, 1.0));
            points.push(GateCharge::new(1.0, 0.0));
            points.push(GateCharge::new(1.0, 1.0));
        }
        DispersionGrid::Full => {
            let ax = axis(1.0);
            for &a in &ax {
                for &b in &ax {
                    points.push(GateCharge::new(a, b));
                }
            }
        }
    }
    points
}

fn sweep_peak_to_peak(
    params: &DoubleJunctionParams,
    points: &[GateCharge],
    n_max: usize,
    tol_hz: f64,
) -> Result<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for gate in points {
        let f = f_ge_sparse(params, gate, n_max, tol_hz)?;
        lo = lo.min(f);
        hi = hi.max(f);
    }
    Ok((hi - lo) * 1.0e9)
}

/// Eigenstate amplitudes on a regular (φ1, φ2) grid over [−π, π)².
#[derive(Debug, Clone)]
pub struct PhaseWavefunction {
    /// Points per axis.
    pub grid_points: usize,
    /// Axis values, shared by φ1 (rows) and φ2 (columns).
    pub phi: Vec<f64>,
    /// Row-major amplitudes ψ(φ1_i, φ2_j).
    pub amplitudes: Vec<Complex<f64>>,
    /// Which eigenstate this is (0 = ground).
    pub level_index: usize,
}

impl PhaseWavefunction {
    /// |ψ|² at grid indices (i, j).
    pub fn density(&self, i: usize, j: usize) -> f64 {
        self.amplitudes[i * self.grid_points + j].norm_sqr()
    }

    /// Derived coordinates φ_± = (φ2 ± φ1)/2 at grid indices (i, j).
    pub fn phi_pm(&self, i: usize, j: usize) -> (f64, f64) {
        let p1 = self.phi[i];
        let p2 = self.phi[j];
        ((p2 + p1) / 2.0, (p2 - p1) / 2.0)
    }

    /// Riemann sum of |ψ|² over the grid (1 within discretization error).
    pub fn norm_integral(&self) -> f64 {
        let d_phi = 2.0 * std::f64::consts::PI / self.grid_points as f64;
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * d_phi * d_phi
    }
}

/// Phase-basis wavefunction of one eigenstate:
/// ψ(φ1, φ2) = (1/2π) Σ c_{n1,n2} exp(i·n1·φ1 + i·n2·φ2).
///
/// The grid must have ≥ 32 points per axis; the Riemann normalization is
/// exact (to rounding) once grid_points ≥ 4·n_max + 2, since the basis
/// functions then remain orthogonal on the grid.
pub fn phase_wavefunction(
    params: &DoubleJunctionParams,
    gate: &GateCharge,
    trunc: &TruncationSpec,
    level_index: usize,
    grid_points: usize,
) -> Result<PhaseWavefunction> {
    if grid_points < 32 {
        return Err(Error::Resolution(format!(
            "need at least 32 grid points per axis, got {grid_points}"
        )));
    }
    let dim = trunc.dimension();
    if level_index >= dim {
        return Err(Error::Parameter(format!(
            "level index {level_index} outside the {dim}-dimensional basis"
        )));
    }
    let h = build_charge_hamiltonian(params, gate, trunc);
    let (_, vecs) = linalg::eigenpairs_dense(&h)?;
    let coeffs = vecs.column(level_index);

    let n_max = trunc.n_max() as i64;
    let width = (2 * n_max + 1) as usize;
    let phi: Vec<f64> = (0..grid_points)
        .map(|i| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / grid_points as f64)
        .collect();

    // Separable evaluation: ψ = (1/2π) Σ_{n1} e^{i n1 φ1} Σ_{n2} c e^{i n2 φ2}.
    let mut partial = vec![Complex::new(0.0, 0.0); width * grid_points];
    for n1 in 0..width {
        for (j, &p2) in phi.iter().enumerate() {
            let mut acc = Complex::new(0.0, 0.0);
            for n2 in 0..width {
                let n2_val = n2 as i64 - n_max;
                let c = coeffs[n1 * width + n2];
                acc += Complex::from_polar(c, n2_val as f64 * p2);
            }
            partial[n1 * grid_points + j] = acc;
        }
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI);
    let mut amplitudes = vec![Complex::new(0.0, 0.0); grid_points * grid_points];
    for (i, &p1) in phi.iter().enumerate() {
        for j in 0..grid_points {
            let mut acc = Complex::new(0.0, 0.0);
            for n1 in 0..width {
                let n1_val = n1 as i64 - n_max;
                let phase = Complex::from_polar(1.0, n1_val as f64 * p1);
                acc += phase * partial[n1 * grid_points + j];
            }
            amplitudes[i * grid_points + j] = acc * norm;
        }
    }
    Ok(PhaseWavefunction {
        grid_points,
        phi,
        amplitudes,
        level_index,
    })
}

/// Single-junction transmon parameters: E_J, E_C in GHz (E_C in the
/// e²/2hC scale), gate offset dimensionless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmonParams {
    e_j: f64,
    e_c: f64,
    n_g: f64,
}

impl TransmonParams {
    /// Validate and build: E_J > 0, E_C > 0.
    pub fn new(e_j: f64, e_c: f64, n_g: f64) -> Result<Self> {
        if !(e_j > 0.0) || !e_j.is_finite() {
            return Err(Error::Parameter(format!(
                "E_J must be positive and finite, got {e_j} GHz"
            )));
        }
        if !(e_c > 0.0) || !e_c.is_finite() {
            return Err(Error::Parameter(format!(
                "E_C must be positive and finite, got {e_c} GHz"
            )));
        }
        if !n_g.is_finite() {
            return Err(Error::Parameter(format!("n_g must be finite, got {n_g}")));
        }
        Ok(Self { e_j, e_c, n_g })
    }

    /// Josephson energy (GHz).
    pub fn e_j(&self) -> f64 {
        self.e_j
    }

    /// Charging energy (GHz, e²/2hC scale).
    pub fn e_c(&self) -> f64 {
        self.e_c
    }

    /// Gate offset.
    pub fn n_g(&self) -> f64 {
        self.n_g
    }
}

/// Spectrum of the 1-D transmon H = 4·E_C·(n − n_g)² − E_J cos φ in the
/// integer charge basis, lowest `k` levels.
///
/// Same Cooper-pair factor-4 convention as
/// [`build_charge_hamiltonian`]: E_C is the bare e²/2hC scale.
pub fn transmon_spectrum(p: &TransmonParams, trunc: &TruncationSpec, k: usize) -> Result<Spectrum> {
    let n_max = trunc.n_max() as i64;
    let width = (2 * n_max + 1) as usize;
    let mut h = DMatrix::zeros(width, width);
    for n in -n_max..=n_max {
        let i = (n + n_max) as usize;
        let d = n as f64 - p.n_g();
        h[(i, i)] = 4.0 * p.e_c() * d * d;
        if n < n_max {
            h[(i, i + 1)] = -p.e_j() / 2.0;
            h[(i + 1, i)] = -p.e_j() / 2.0;
        }
    }
    eigenspectrum(&h, k.min(width))
}

/// Effective single-transmon picture of the symmetric double-junction
/// circuit: (E_J_eff, E_C_eff, f_estimate) with E_J_eff = 2·E_J1,
/// E_C_eff = (e²/2hC_S)/4 and f_estimate = √(8·E_J_eff·E_C_eff).
///
/// Valid for near-identical junctions; beyond 1% asymmetry the ± modes
/// mix and the picture is refused.
pub fn effective_transmon_mapping(params: &DoubleJunctionParams) -> Result<(f64, f64, f64)> {
    let (e_j1, e_j2) = params.e_j();
    let asymmetry = (e_j1 - e_j2).abs() / e_j1.max(e_j2);
    if asymmetry > 0.01 {
        return Err(Error::UnsupportedRegime(format!(
            "junction asymmetry {:.1}% exceeds the 1% the effective-transmon \
             picture supports",
            asymmetry * 100.0
        )));
    }
    let e_j_eff = 2.0 * e_j1;
    let e_c_eff = E2_OVER_2H_GHZ_FF / params.c_s() / 4.0;
    let f_estimate = (8.0 * e_j_eff * e_c_eff).sqrt();
    Ok((e_j_eff, e_c_eff, f_estimate))
}

/// Truncation used for 1-D transmon solves inside the inverter; ±30
/// Cooper pairs covers E_J/E_C up to a few thousand.
const INVERSION_N_MAX: usize = 30;

/// Match tolerance of the inverter (GHz): 0.1 MHz on both targets.
const INVERSION_TOL_GHZ: f64 = 1.0e-4;

/// Find (E_J, E_C) whose transmon spectrum reproduces a measured
/// (f_ge, anharmonicity) at zero gate, both within 0.1 MHz.
///
/// Newton iteration with a finite-difference Jacobian from the starting
/// point E_C = −α, E_J = (f_ge − α)²/(8·E_C). Unique in the transmon
/// regime E_J/E_C > 10; solutions outside it are refused.
pub fn invert_charging_energy(f_ge: f64, anharmonicity: f64) -> Result<(f64, f64)> {
    if !(f_ge > 0.0) || !f_ge.is_finite() {
        return Err(Error::Parameter(format!(
            "f_ge must be positive, got {f_ge} GHz"
        )));
    }
    if !(anharmonicity < 0.0) || !anharmonicity.is_finite() {
        return Err(Error::Parameter(format!(
            "anharmonicity must be negative, got {anharmonicity} GHz"
        )));
    }
    let trunc = TruncationSpec::new(INVERSION_N_MAX, 1.0)?;
    let simulate = |e_j: f64, e_c: f64| -> Result<(f64, f64)> {
        let p = TransmonParams::new(e_j, e_c, 0.0)?;
        let s = transmon_spectrum(&p, &trunc, 3)?;
        Ok((s.f_ge, s.anharmonicity))
    };

    let mut e_c = -anharmonicity;
    let mut e_j = (f_ge - anharmonicity).powi(2) / (8.0 * e_c);
    let mut last = (f64::NAN, f64::NAN);
    for _ in 0..60 {
        let (f0, a0) = simulate(e_j, e_c)?;
        last = (f0, a0);
        let rf = f0 - f_ge;
        let ra = a0 - anharmonicity;
        if rf.abs() < INVERSION_TOL_GHZ && ra.abs() < INVERSION_TOL_GHZ {
            if e_j / e_c <= 10.0 {
                return Err(Error::Inversion(format!(
                    "solution E_J={e_j:.4} GHz, E_C={e_c:.4} GHz has E_J/E_C = \
                     {:.1} ≤ 10, outside the transmon regime the inversion trusts",
                    e_j / e_c
                )));
            }
            return Ok((e_j, e_c));
        }
        // Finite-difference Jacobian in relative steps.
        let dj = 1.0e-6 * e_j.max(1.0);
        let dc = 1.0e-6 * e_c.max(1.0e-3);
        let (fj, aj) = simulate(e_j + dj, e_c)?;
        let (fc, ac) = simulate(e_j, e_c + dc)?;
        let j00 = (fj - f0) / dj;
        let j01 = (fc - f0) / dc;
        let j10 = (aj - a0) / dj;
        let j11 = (ac - a0) / dc;
        let det = j00 * j11 - j01 * j10;
        if det.abs() < 1.0e-14 {
            return Err(Error::Inversion(format!(
                "singular sensitivity matrix at E_J={e_j:.4}, E_C={e_c:.4}"
            )));
        }
        let step_j = (rf * j11 - ra * j01) / det;
        let step_c = (ra * j00 - rf * j10) / det;
        e_j -= step_j;
        e_c -= step_c;
        if !(e_j > 0.0) || !(e_c > 0.0) || !e_j.is_finite() || !e_c.is_finite() {
            return Err(Error::Inversion(format!(
                "iteration left the physical region (E_J={e_j}, E_C={e_c}); \
                 targets f_ge={f_ge} GHz, α={anharmonicity} GHz may be \
                 inconsistent with a transmon spectrum"
            )));
        }
    }
    Err(Error::Inversion(format!(
        "no convergence in 60 steps; last simulated (f_ge, α) = \
         ({:.6}, {:.6}) GHz vs targets ({f_ge}, {anharmonicity})",
        last.0, last.1
    )))
}

/// Total island capacitance implied by a charging energy, minus the
/// simulated shunt: C_J = (e²/2h)/E_C − C_shunt_sim, both fF.
pub fn junction_capacitance_from_ec(e_c: f64, c_shunt_sim: f64) -> Result<f64> {
    if !(e_c > 0.0) || !e_c.is_finite() {
        return Err(Error::Parameter(format!(
            "E_C must be positive, got {e_c} GHz"
        )));
    }
    if !(c_shunt_sim >= 0.0) || !c_shunt_sim.is_finite() {
        return Err(Error::Parameter(format!(
            "shunt capacitance must be non-negative, got {c_shunt_sim} fF"
        )));
    }
    let c_total = E2_OVER_2H_GHZ_FF / e_c;
    let c_j = c_total - c_shunt_sim;
    if c_j < 0.0 {
        return Err(Error::InconsistentInputs(format!(
            "E_C = {e_c} GHz implies total capacitance {c_total:.2} fF, less \
             than the simulated shunt {c_shunt_sim} fF"
        )));
    }
    Ok(c_j)
}
