//! Acceptance gate: one test per numbered requirement, so the harness
//! prints exactly one pass/fail line for each. Sub-checks accumulate
//! into a single failure message naming every miss with its measured
//! value, instead of stopping at the first bad assert.

use std::time::{Duration, Instant};

use junctionlab::circuit::{
    build_charge_hamiltonian, charge_dispersion, effective_transmon_mapping, eigenspectrum,
    invert_charging_energy, junction_capacitance_from_ec, spectrum, DispersionGrid,
    DoubleJunctionParams, GateCharge, TruncationSpec,
};
use junctionlab::fits::{
    fit_echo, fit_ramsey, fit_resistance_area, fit_t1, quality_factor, DecayingCosine,
    ExponentialDecay, FitModel, WaferResistancePoint,
};
use junctionlab::loss::{
    barrier_sidewall_ratio, junction_participation, loss_budget, loss_tangent_bound,
    subgap_q_limit, JunctionGeometry, LossContribution,
};
use junctionlab::trace::{SampledTrace, XUnit, YUnit};
use junctionlab::tunneling::{
    bcs_gap, dynes_dos, dynes_gamma_estimate, extract_gaps_vs_temperature, iv_curve,
    junction_at_temperature, onset_voltage, subgap_linear_fit, tunnel_current, JunctionDC,
    SuperconductorModel,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Collects sub-check failures; `finish` turns them into one panic.
struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn new() -> Self {
        Gate {
            failures: Vec::new(),
        }
    }

    /// |value − expect| ≤ tol, with NaN counting as a miss.
    fn within(&mut self, what: &str, value: f64, expect: f64, tol: f64) {
        if !((value - expect).abs() <= tol) {
            self.failures
                .push(format!("{what}: {value} outside {expect} ± {tol}"));
        }
    }

    fn is_true(&mut self, what: impl Into<String>, ok: bool) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn runtime(&mut self, start: Instant, budget: Duration) {
        let elapsed = start.elapsed();
        self.is_true(
            format!("runtime {elapsed:.1?} over the {budget:?} budget"),
            elapsed <= budget,
        );
    }

    fn finish(self) {
        assert!(
            self.failures.is_empty(),
            "{} sub-check(s) failed:\n  - {}",
            self.failures.len(),
            self.failures.join("\n  - ")
        );
    }
}

fn reference_params() -> DoubleJunctionParams {
    DoubleJunctionParams::symmetric(100.0, 10.0, 40.0).unwrap()
}

fn scaled_params() -> DoubleJunctionParams {
    DoubleJunctionParams::symmetric(55.0, 10.0, 22.0).unwrap()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect()
}

fn time_trace(x: Vec<f64>, y: Vec<f64>) -> SampledTrace {
    SampledTrace::new(x, y, XUnit::Microseconds, YUnit::Population).unwrap()
}

fn noisy_decay(a: f64, tau: f64, c: f64, step: f64, n: usize, sigma: f64, seed: u64) -> SampledTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let x: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&t| a * (-t / tau).exp() + c + noise.sample(&mut rng))
        .collect();
    time_trace(x, y)
}

fn noisy_ramsey(a: f64, tau: f64, f: f64, phi: f64, c: f64, sigma: f64, seed: u64) -> SampledTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let x: Vec<f64> = (0..161).map(|i| i as f64 * 0.25).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&t| {
            a * (-t / tau).exp() * (2.0 * std::f64::consts::PI * f * t + phi).cos()
                + c
                + noise.sample(&mut rng)
        })
        .collect();
    time_trace(x, y)
}

#[test]
fn acceptance_1_reference_circuit_spectrum() {
    let start = Instant::now();
    let mut gate = Gate::new();

    let (s, _) = spectrum(
        &reference_params(),
        &GateCharge::zero(),
        &TruncationSpec::default(),
        6,
    )
    .unwrap();
    let expected_ghz = [5.165, 10.276, 15.331, 20.331, 23.436];
    for (i, &e) in expected_ghz.iter().enumerate() {
        gate.within(
            &format!("transition {} from ground (GHz)", i + 1),
            s.levels[i + 1],
            e,
            5.0e-3,
        );
    }
    gate.within("anharmonicity (MHz)", s.anharmonicity * 1.0e3, -54.0, 2.0);

    gate.runtime(start, Duration::from_secs(5));
    gate.finish();
}

#[test]
fn acceptance_2_charge_dispersion_reference_and_scaled() {
    let start = Instant::now();
    let mut gate = Gate::new();

    // Reference circuit: the dispersion sits at the hertz scale, at or
    // below the solver's own repeatability floor; the report must both
    // land within a factor of 5 of 2 Hz and carry the floor caveat.
    let d_ref = charge_dispersion(
        &reference_params(),
        &TruncationSpec::default(),
        3,
        DispersionGrid::SymmetryPoints,
    )
    .unwrap();
    gate.is_true(
        format!(
            "reference dispersion {} Hz outside [0.4, 10] Hz",
            d_ref.peak_to_peak_hz
        ),
        (0.4..=10.0).contains(&d_ref.peak_to_peak_hz),
    );
    gate.is_true(
        "reference dispersion not flagged near the precision floor",
        d_ref.near_precision_floor,
    );
    gate.is_true(
        "precision floor not reported",
        d_ref.precision_floor_hz > 0.0,
    );

    // 0.55-scaled variant: kilohertz dispersion, doubled anharmonicity.
    let (s, _) = spectrum(
        &scaled_params(),
        &GateCharge::zero(),
        &TruncationSpec::default(),
        5,
    )
    .unwrap();
    gate.within("scaled f_ge (GHz)", s.f_ge, 4.94, 0.03);
    gate.within("scaled anharmonicity (MHz)", s.anharmonicity * 1.0e3, -102.0, 3.0);
    gate.within("scaled fourth excited level (GHz)", s.levels[4], 16.957, 0.020);

    let d = charge_dispersion(
        &scaled_params(),
        &TruncationSpec::new(12, 1.0e3).unwrap(),
        3,
        DispersionGrid::SymmetryPoints,
    )
    .unwrap();
    gate.within("scaled dispersion (Hz)", d.peak_to_peak_hz, 4.0e3, 0.3 * 4.0e3);
    gate.is_true(
        "scaled dispersion spuriously flagged near the floor",
        !d.near_precision_floor,
    );

    gate.runtime(start, Duration::from_secs(60));
    gate.finish();
}

#[test]
fn acceptance_3_effective_single_junction_estimate() {
    let mut gate = Gate::new();
    let (_, _, f_est) = effective_transmon_mapping(&reference_params()).unwrap();
    gate.within("effective-circuit frequency estimate (GHz)", f_est, 5.57, 0.01);
    gate.finish();
}

#[test]
fn acceptance_4_charging_energy_inversion() {
    let mut gate = Gate::new();

    let (_, e_c_a) = invert_charging_energy(4.848, -0.208).unwrap();
    gate.within("E_C from (4.848 GHz, -208 MHz) (MHz)", e_c_a * 1.0e3, 185.0, 3.0);
    let c_j_a = junction_capacitance_from_ec(e_c_a, 100.0).unwrap();
    gate.within("junction capacitance from first pair (fF)", c_j_a, 7.0, 4.0);

    let (_, e_c_b) = invert_charging_energy(4.389, -0.176).unwrap();
    gate.within("E_C from (4.389 GHz, -176 MHz) (MHz)", e_c_b * 1.0e3, 162.0, 3.0);
    let c_j_b = junction_capacitance_from_ec(e_c_b, 100.0).unwrap();
    gate.within("junction capacitance from second pair (fF)", c_j_b, 22.0, 4.0);

    gate.finish();
}

#[test]
fn acceptance_5_tunneling_onsets_subgap_and_gamma() {
    let mut gate = Gate::new();

    // Normal/superconductor junction at 1.3 K: thermally smeared onset.
    let nis = JunctionDC::new(
        10.0,
        SuperconductorModel::normal_metal(),
        SuperconductorModel::new(1.42, 4.0e-3, 9.2).unwrap(),
    )
    .unwrap();
    let jt = junction_at_temperature(&nis, 1.3).unwrap();
    let iv = iv_curve(&jt, 1.3, &linspace(-2.5, 2.5, 441)).unwrap();
    gate.within(
        "NIS onset at 1.3 K (mV)",
        onset_voltage(&iv, 10.0).unwrap(),
        1.4,
        0.05,
    );

    // Superconductor pair at 40 mK: current rise at the gap sum.
    let sis = JunctionDC::new(
        10.0,
        SuperconductorModel::new(1.42, 4.0e-3, 9.2).unwrap(),
        SuperconductorModel::new(0.2, 4.0e-3, 1.4).unwrap(),
    )
    .unwrap();
    let jt = junction_at_temperature(&sis, 0.04).unwrap();
    let iv = iv_curve(&jt, 0.04, &linspace(-2.5, 2.5, 441)).unwrap();
    gate.within(
        "SIS sum-gap rise at 40 mK (mV)",
        onset_voltage(&iv, 10.0).unwrap(),
        1.6,
        0.05,
    );

    // Low-temperature subgap slope: R_subgap ≈ R_N/γ in closed form.
    let jt = junction_at_temperature(&nis, 0.1).unwrap();
    let iv = iv_curve(&jt, 0.1, &linspace(-0.5, 0.5, 21)).unwrap();
    let fit = subgap_linear_fit(&iv, (-0.3, 0.3)).unwrap();
    gate.within("subgap resistance (MΩ)", fit.r_subgap_mohm, 2.5, 0.05 * 2.5);
    gate.within(
        "γ recovered from the fitted slope",
        dynes_gamma_estimate(10.0, fit.r_subgap_mohm).unwrap(),
        4.0e-3,
        0.05 * 4.0e-3,
    );

    // The two device pairs: 10 kΩ/2.5 MΩ and 20 kΩ/3.5 MΩ.
    gate.within(
        "γ estimate for the 10 kΩ device",
        dynes_gamma_estimate(10.0, 2.5).unwrap(),
        4.0e-3,
        1.0e-12,
    );
    gate.within(
        "γ estimate for the 20 kΩ device",
        dynes_gamma_estimate(20.0, 3.5).unwrap(),
        6.0e-3,
        5.0e-4,
    );

    gate.finish();
}

#[test]
fn acceptance_6_gap_extraction_round_trip() {
    let start = Instant::now();
    let mut gate = Gate::new();

    let big = SuperconductorModel::new(1.4, 1.0e-3, 9.2).unwrap();
    let small = SuperconductorModel::new(0.2, 1.0e-3, 1.4).unwrap();
    let j0 = JunctionDC::new(10.0, big.clone(), small.clone()).unwrap();
    let temps = [0.05, 0.2, 0.35, 0.45, 0.6, 0.8, 1.0, 1.15, 1.3];
    let traces: Vec<SampledTrace> = temps
        .iter()
        .map(|&t| {
            let jt = junction_at_temperature(&j0, t).unwrap();
            iv_curve(&jt, t, &linspace(-2.2, 2.2, 881)).unwrap()
        })
        .collect();
    let r = extract_gaps_vs_temperature(&traces).unwrap();

    // Budgets are 2% of the planted zero-temperature gaps: the peak
    // read is voltage-grid limited, so a budget tied to the shrinking
    // Δ(T) would demand sub-µV resolution near Tc.
    for (i, &t) in r.temperatures_k.iter().enumerate() {
        if t < 0.4 {
            continue;
        }
        let true_big = bcs_gap(&big, t).unwrap();
        let true_small = bcs_gap(&small, t).unwrap();
        gate.within(
            &format!("large gap at {t} K (meV)"),
            r.delta_nb_mev[i],
            true_big,
            0.02 * 1.4,
        );
        gate.within(
            &format!("small gap at {t} K (meV)"),
            r.delta_al_mev[i],
            true_small,
            0.02 * 0.2,
        );
    }
    gate.within(
        "small gap at the lowest temperature via the plateau rule (µeV)",
        r.delta_al_mev[0] * 1.0e3,
        200.0,
        5.0,
    );

    gate.runtime(start, Duration::from_secs(120));
    gate.finish();
}

#[test]
fn acceptance_7_coherence_and_wafer_fits() {
    let mut gate = Gate::new();

    let t1 = fit_t1(&noisy_decay(0.9, 36.0, 0.05, 3.0, 61, 0.01, 11))
        .unwrap()
        .value("T1_us")
        .unwrap();
    gate.within("fitted T1 (µs)", t1, 36.0, 0.03 * 36.0);

    let t2s = fit_ramsey(&noisy_ramsey(0.4, 17.0, 0.25, 0.3, 0.5, 0.01, 5))
        .unwrap()
        .value("T2_star_us")
        .unwrap();
    gate.within("fitted T2* (µs)", t2s, 17.0, 0.03 * 17.0);

    let t2e = fit_echo(&noisy_decay(0.9, 42.0, 0.05, 3.5, 61, 0.01, 7))
        .unwrap()
        .value("T2_echo_us")
        .unwrap();
    gate.within("fitted echo T2 (µs)", t2e, 42.0, 0.03 * 42.0);

    // Q = 2π·f·T1 gives 974522.05 for 5.17 GHz and 30 µs, which is
    // 9.7e5 at the two significant figures the target is quoted to.
    // A literal 9.7e5 ± 1e3 band contradicts the defining formula, so
    // the gate checks the formula value and the quoted rounding.
    let q = quality_factor(5.17, 30.0).unwrap();
    let formula = 2.0 * std::f64::consts::PI * 5.17 * 30.0 * 1.0e3;
    gate.within("quality factor vs its defining formula", q, formula, 1.0e3);
    gate.is_true(
        format!("quality factor {q} does not round to 9.7e5"),
        (q / 1.0e4).round() == 97.0,
    );

    // Wafer map: R = RA·10⁶/(d − l)² with 1% resistance scatter.
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let points: Vec<WaferResistancePoint> = (0..12)
        .map(|i| {
            let d = 350.0 + 50.0 * i as f64;
            let w = (d - 90.0) / 1.0e3;
            let r = 1100.0 / (w * w) * (1.0 + noise.sample(&mut rng));
            WaferResistancePoint::new(d, r).unwrap()
        })
        .collect();
    let ra_fit = fit_resistance_area(&points).unwrap();
    let ra = ra_fit.value("ra_ohm_um2").unwrap();
    let l = ra_fit.value("l_nm").unwrap();
    gate.within("fitted resistance-area product (Ω·µm²)", ra, 1100.0, 0.02 * 1100.0);
    gate.within("fitted size offset (nm)", l, 90.0, 0.02 * 90.0);

    gate.finish();
}

#[test]
fn acceptance_8_loss_budget_numbers() {
    let mut gate = Gate::new();

    let geometry = JunctionGeometry::new(600.0, 1.5, 2.0, 100.0).unwrap();
    let ratio = barrier_sidewall_ratio(&geometry);
    gate.is_true(
        format!("barrier/sidewall capacitance ratio {ratio} is not exactly 4"),
        ratio == 4.0,
    );

    let p_j = junction_participation(10.0, 100.0).unwrap();
    gate.is_true(
        format!("junction participation {p_j} is not exactly 0.05"),
        p_j == 0.05,
    );

    let swaps = loss_budget(
        &[LossContribution::new("junction", 0.05, 2.0e-5).unwrap()],
        1.0e-6,
    )
    .unwrap();
    gate.within("single-term 1/Q budget", swaps.total_inv_q, 1.0e-6, 1.0e-18);

    let q_bound = subgap_q_limit(2.5, 320.0).unwrap();
    gate.within("subgap quality-factor bound", q_bound, 7812.5, 1.0e-9);
    gate.is_true(
        format!("subgap bound {q_bound} does not round to 7.8e3"),
        (q_bound / 1.0e2).round() == 78.0,
    );

    let bound = loss_tangent_bound(1.0e-6, 0.05).unwrap();
    gate.within("effective junction tanδ bound", bound, 2.0e-5, 1.0e-17);
    gate.is_true(
        format!("tanδ bound {bound} is not of order 1e-5"),
        (1.0e-5..1.0e-4).contains(&bound),
    );

    gate.finish();
}

#[test]
fn acceptance_9_invariant_battery() {
    let mut gate = Gate::new();

    // Hermiticity of the charge-basis operator.
    let p = scaled_params();
    let trunc = TruncationSpec::new(6, 1.0e3).unwrap();
    let h = build_charge_hamiltonian(&p, &GateCharge::new(0.21, 0.37), &trunc);
    let asym = (&h - h.transpose()).abs().max();
    gate.is_true(format!("Hamiltonian asymmetry {asym}"), asym == 0.0);

    // Gate symmetries: simultaneous integer shift and global sign flip
    // leave the spectrum unchanged to solver precision.
    let t10 = TruncationSpec::new(10, 1.0e3).unwrap();
    let base = eigenspectrum(&build_charge_hamiltonian(&p, &GateCharge::new(0.13, 0.41), &t10), 4)
        .unwrap();
    let shifted =
        eigenspectrum(&build_charge_hamiltonian(&p, &GateCharge::new(1.13, 1.41), &t10), 4)
            .unwrap();
    let flipped =
        eigenspectrum(&build_charge_hamiltonian(&p, &GateCharge::new(-0.13, -0.41), &t10), 4)
            .unwrap();
    for k in 0..4 {
        gate.within(
            &format!("level {k} under simultaneous gate shift (GHz)"),
            shifted.levels[k],
            base.levels[k],
            5.0e-9,
        );
        gate.within(
            &format!("level {k} under gate sign flip (GHz)"),
            flipped.levels[k],
            base.levels[k],
            1.0e-9,
        );
    }

    // Transition identity f_gf = f_ge + f_ef.
    gate.within(
        "f_gf minus (f_ge + f_ef) (GHz)",
        base.f_gf - (base.f_ge + base.f_ef),
        0.0,
        1.0e-12,
    );

    // Ohmic reduction: a junction between two normal metals is a
    // resistor at any bias and temperature.
    let ohmic = JunctionDC::new(
        10.0,
        SuperconductorModel::normal_metal(),
        SuperconductorModel::normal_metal(),
    )
    .unwrap();
    for v in [0.3, 0.9, 1.7] {
        let i = tunnel_current(v, &ohmic, 0.3).unwrap();
        gate.within(
            &format!("ohmic current at {v} mV (nA)"),
            i,
            v * 100.0,
            1.0e-9 * v * 100.0,
        );
    }

    // Density-of-states limits: γ/√(1+γ²) at zero energy, 1 far above
    // the gap.
    let sc = SuperconductorModel::new(1.42, 4.0e-3, 9.2).unwrap();
    let g: f64 = 4.0e-3;
    gate.within(
        "zero-energy DOS",
        dynes_dos(0.0, &sc),
        g / (1.0 + g * g).sqrt(),
        1.0e-12,
    );
    gate.within("high-energy DOS", dynes_dos(142.0, &sc), 1.0, 1.0e-3);

    // Zero-bias conductance law at a second broadening value.
    let nis = JunctionDC::new(
        10.0,
        SuperconductorModel::normal_metal(),
        SuperconductorModel::new(1.42, 6.0e-3, 9.2).unwrap(),
    )
    .unwrap();
    let jt = junction_at_temperature(&nis, 0.1).unwrap();
    let iv = iv_curve(&jt, 0.1, &linspace(-0.5, 0.5, 21)).unwrap();
    let fit = subgap_linear_fit(&iv, (-0.3, 0.3)).unwrap();
    let expected_mohm = 10.0 * f64::sqrt(1.0 + 36.0e-6) / 6.0e-3 / 1.0e3;
    gate.within(
        "subgap resistance at γ = 6e-3 (MΩ)",
        fit.r_subgap_mohm,
        expected_mohm,
        0.05 * expected_mohm,
    );

    // Decay-fit round trip across 100 noise seeds: ≥ 95 recover the
    // planted lifetime within 3 standard errors.
    let hits = (0..100)
        .filter(|&seed| {
            let trace = noisy_decay(0.45, 36.0, 0.5, 2.0, 76, 0.01, 1000 + seed);
            fit_t1(&trace).ok().is_some_and(|r| {
                r.converged
                    && r.value("T1_us")
                        .zip(r.std_error("T1_us"))
                        .is_some_and(|(t, se)| (t - 36.0).abs() <= 3.0 * se)
            })
        })
        .count();
    gate.is_true(
        format!("only {hits}/100 decay round trips covered the planted value"),
        hits >= 95,
    );

    // Analytic gradients against central differences.
    let exp_err = grad_fd_mismatch(&ExponentialDecay, &[0.9, 36.0, 0.05], &[0.0, 7.3, 41.0]);
    gate.is_true(
        format!("exponential-decay gradient mismatch {exp_err}"),
        exp_err < 1.0e-6,
    );
    let cos_err = grad_fd_mismatch(
        &DecayingCosine,
        &[0.4, 17.0, 0.25, 0.3, 0.5],
        &[0.0, 7.3, 23.0],
    );
    gate.is_true(
        format!("decaying-cosine gradient mismatch {cos_err}"),
        cos_err < 1.0e-6,
    );

    gate.finish();
}

/// Worst relative disagreement between `grad` and a central difference
/// over the given sample points.
fn grad_fd_mismatch<M: FitModel>(model: &M, p: &[f64], xs: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for &x in xs {
        let mut g = vec![0.0; p.len()];
        model.grad(p, x, &mut g);
        for i in 0..p.len() {
            let h = 1.0e-6 * (1.0 + p[i].abs());
            let mut hi = p.to_vec();
            hi[i] += h;
            let mut lo = p.to_vec();
            lo[i] -= h;
            let fd = (model.eval(&hi, x) - model.eval(&lo, x)) / (2.0 * h);
            let scale = g[i].abs().max(fd.abs()).max(1.0);
            worst = worst.max((g[i] - fd).abs() / scale);
        }
    }
    worst
}
