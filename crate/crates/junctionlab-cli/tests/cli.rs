//! End-to-end tests spawning the built binary. Every test works in its
//! own temp directory; nothing touches the ambient environment and the
//! `JUNCTIONLAB_CONFIG` variable is scrubbed unless a test sets it.

use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_junctionlab"));
    cmd.env_remove("JUNCTIONLAB_CONFIG");
    cmd
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary spawns")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "expected exit 0, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON report")
}

fn run_ok(dir: &Path, args: &[&str]) -> Value {
    stdout_json(&run_in(dir, args))
}

fn run_err(dir: &Path, args: &[&str], code: i32) -> String {
    let out = run_in(dir, args);
    assert_eq!(
        out.status.code(),
        Some(code),
        "stderr: {}\nstdout: {}",
        String::from_utf8_lossy(&out.stderr),
        String::from_utf8_lossy(&out.stdout)
    );
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn results(report: &Value) -> &Value {
    &report["results"]
}

fn warnings(report: &Value) -> Vec<String> {
    report["warnings"]
        .as_array()
        .expect("warnings array")
        .iter()
        .map(|w| w.as_str().unwrap().to_string())
        .collect()
}

fn param(report: &Value, fit_param: &str) -> f64 {
    report["results"]["fit"]["params"][fit_param]["value"]
        .as_f64()
        .unwrap_or_else(|| panic!("missing fit param {fit_param}"))
}

fn csv_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap_or_else(|_| panic!("missing {}", path.display()))
        .lines()
        .map(str::to_string)
        .collect()
}

fn write_rows(path: &Path, header: &str, rows: &[(f64, f64)]) {
    let mut text = String::from(header);
    text.push('\n');
    for (x, y) in rows {
        writeln!(text, "{x},{y}").unwrap();
    }
    std::fs::write(path, text).unwrap();
}

fn exp_decay_rows(a: f64, tau: f64, c: f64, step: f64, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let t = i as f64 * step;
            (t, a * (-t / tau).exp() + c)
        })
        .collect()
}

// ================== spectrum ==================

#[test]
fn spectrum_report_matches_reference_circuit() {
    let dir = TempDir::new().unwrap();
    let report = run_ok(
        dir.path(),
        &[
            "simulate-spectrum",
            "--c-shunt-ff",
            "100",
            "--c-j-ff",
            "10",
            "--e-j-ghz",
            "40",
        ],
    );
    let r = results(&report);
    assert_eq!(r["levels_ghz"][0].as_f64().unwrap(), 0.0);
    let f_ge = r["f_ge_ghz"].as_f64().unwrap();
    assert!((f_ge - 5.164846568).abs() < 1.0e-6, "f_ge {f_ge}");
    let alpha = r["anharmonicity_mhz"].as_f64().unwrap();
    assert!((alpha + 53.803639).abs() < 1.0e-3, "alpha {alpha}");
    assert_eq!(r["levels_ghz"].as_array().unwrap().len(), 6);

    // Six levels plus a header line in the plot CSV.
    let lines = csv_lines(&dir.path().join("simulate-spectrum.levels.csv"));
    assert_eq!(lines[0], "level_index,frequency_GHz");
    assert_eq!(lines.len(), 7);
}

#[test]
fn spectrum_without_josephson_energy_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let err = run_err(
        dir.path(),
        &["simulate-spectrum", "--c-shunt-ff", "100", "--c-j-ff", "10"],
        2,
    );
    assert!(err.contains("missing Josephson energy"), "stderr: {err}");
}

#[test]
fn reports_are_byte_identical_across_runs() {
    // Same invocation from two different working directories; the report
    // carries no timestamps or absolute paths, so the bytes must agree.
    let args = [
        "simulate-spectrum",
        "--c-shunt-ff",
        "55",
        "--c-j-ff",
        "10",
        "--e-j-ghz",
        "22",
        "--out-dir",
        "out",
    ];
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let out_a = run_in(a.path(), &args);
    let out_b = run_in(b.path(), &args);
    assert!(out_a.status.success() && out_b.status.success());
    assert_eq!(out_a.stdout, out_b.stdout);

    let file_a = std::fs::read(a.path().join("out/simulate-spectrum.report.json")).unwrap();
    let file_b = std::fs::read(b.path().join("out/simulate-spectrum.report.json")).unwrap();
    assert_eq!(file_a, file_b);
    assert_eq!(file_a, out_a.stdout);
}

#[test]
fn sweep_dispersion_writes_line_cut() {
    let dir = TempDir::new().unwrap();
    // A loose convergence tolerance keeps the sweep cheap; the physics
    // accuracy of the dispersion itself is covered in the library.
    let report = run_ok(
        dir.path(),
        &[
            "sweep-dispersion",
            "--c-shunt-ff",
            "55",
            "--c-j-ff",
            "10",
            "--e-j-ghz",
            "22",
            "--n-max",
            "8",
            "--tol-hz",
            "1e6",
            "--line-points",
            "3",
        ],
    );
    let r = results(&report);
    assert!(r["peak_to_peak_hz"].as_f64().unwrap() > 0.0);
    assert!(r["precision_floor_hz"].as_f64().unwrap() >= 0.0);
    let lines = csv_lines(&dir.path().join("sweep-dispersion.fge_vs_ng.csv"));
    assert_eq!(lines[0], "n_g_minus,f_ge_GHz");
    assert_eq!(lines.len(), 4);
}

// ================== decay fits ==================

#[test]
fn fit_decay_recovers_lifetime_and_quality_factor() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("t1.csv");
    write_rows(
        &csv,
        "delay_us,population",
        &exp_decay_rows(0.92, 36.0, 0.04, 5.0, 61),
    );
    let report = run_ok(
        dir.path(),
        &["fit-decay", "t1.csv", "--f-ge-ghz", "5.17"],
    );
    let t1 = param(&report, "T1_us");
    assert!((t1 - 36.0).abs() < 1.0e-4, "T1 {t1}");
    let q = results(&report)["quality_factor"].as_f64().unwrap();
    let expected = 2.0 * std::f64::consts::PI * 5.17e9 * 36.0e-6;
    assert!((q - expected).abs() / expected < 1.0e-9, "Q {q}");
    assert!(dir.path().join("fit-decay.data.csv").exists());
    assert!(dir.path().join("fit-decay.fit.csv").exists());
}

#[test]
fn shuffled_rows_warn_and_fit_identically() {
    let dir = TempDir::new().unwrap();
    let rows = exp_decay_rows(0.9, 24.0, 0.05, 4.0, 31);
    write_rows(&dir.path().join("sorted.csv"), "delay_us,population", &rows);
    let mut shuffled = rows;
    shuffled.reverse();
    shuffled.swap(3, 17);
    write_rows(
        &dir.path().join("shuffled.csv"),
        "delay_us,population",
        &shuffled,
    );

    let a = run_ok(dir.path(), &["fit-decay", "sorted.csv", "--out-dir", "a"]);
    let b = run_ok(dir.path(), &["fit-decay", "shuffled.csv", "--out-dir", "b"]);
    assert!(warnings(&a).is_empty());
    let warns = warnings(&b);
    assert!(
        warns.iter().any(|w| w.contains("rows were not ordered")),
        "warnings: {warns:?}"
    );
    // Ingest order must not leak into the numbers.
    assert_eq!(results(&a)["fit"], results(&b)["fit"]);
}

#[test]
fn fit_echo_recovers_coherence_time() {
    let dir = TempDir::new().unwrap();
    write_rows(
        &dir.path().join("echo.csv"),
        "delay_us,population",
        &exp_decay_rows(0.9, 42.0, 0.05, 3.5, 61),
    );
    let report = run_ok(dir.path(), &["fit-echo", "echo.csv"]);
    let t2 = param(&report, "T2_echo_us");
    assert!((t2 - 42.0).abs() < 1.0e-4, "T2 echo {t2}");
}

#[test]
fn fit_ramsey_resolves_fringe() {
    let dir = TempDir::new().unwrap();
    let rows: Vec<(f64, f64)> = (0..121)
        .map(|i| {
            let t = i as f64 * 0.25;
            let y = 0.45
                * (-t / 17.0).exp()
                * (2.0 * std::f64::consts::PI * 0.8 * t + 0.3).cos()
                + 0.5;
            (t, y)
        })
        .collect();
    write_rows(&dir.path().join("ramsey.csv"), "delay_us,population", &rows);
    let report = run_ok(dir.path(), &["fit-ramsey", "ramsey.csv"]);
    assert_eq!(results(&report)["fringe_resolved"], Value::Bool(true));
    let t2 = param(&report, "T2_star_us");
    assert!((t2 - 17.0).abs() < 1.0e-3, "T2* {t2}");
    let f = param(&report, "f_mhz");
    assert!((f - 0.8).abs() < 1.0e-4, "detuning {f}");
}

#[test]
fn fit_ramsey_falls_back_on_pure_decay() {
    let dir = TempDir::new().unwrap();
    // Broadband noise keeps the residual spectrum featureless, so the
    // fringe detector must decline and fit a plain decay instead.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rows: Vec<(f64, f64)> = (0..121)
        .map(|i| {
            let t = i as f64 * 0.25;
            let y = 0.5 * (-t / 17.0).exp() + 0.25 + rng.gen_range(-0.01..0.01);
            (t, y)
        })
        .collect();
    write_rows(&dir.path().join("flat.csv"), "delay_us,population", &rows);
    let report = run_ok(dir.path(), &["fit-ramsey", "flat.csv"]);
    assert_eq!(results(&report)["fringe_resolved"], Value::Bool(false));
    let warns = warnings(&report);
    assert!(
        warns.iter().any(|w| w.contains("no fringe above the detection threshold")),
        "warnings: {warns:?}"
    );
    let t2 = param(&report, "T2_star_us");
    assert!((t2 - 17.0).abs() < 0.05 * 17.0, "fallback T2* {t2}");
}

// ================== ingest rejections ==================

#[test]
fn wrong_header_is_rejected_with_line_reference() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("prober.csv"),
        "die_x,die_y,d_nm,resistance_ohm\n0,0,600,4229\n",
    )
    .unwrap();
    let err = run_err(dir.path(), &["fit-decay", "prober.csv"], 2);
    assert!(err.contains("line 1: header"), "stderr: {err}");
    assert!(err.contains("delay_us,population"), "stderr: {err}");
}

#[test]
fn unparseable_field_is_rejected_with_line_number() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("bad.csv"),
        "delay_us,population\n0,0.9\n5,oops\n10,0.5\n15,0.4\n",
    )
    .unwrap();
    let err = run_err(dir.path(), &["fit-decay", "bad.csv"], 2);
    assert!(
        err.contains("line 3") && err.contains("`oops`"),
        "stderr: {err}"
    );
}

#[test]
fn duplicate_delay_is_rejected() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("dup.csv"),
        "delay_us,population\n0,0.9\n5,0.7\n5,0.69\n10,0.5\n",
    )
    .unwrap();
    let err = run_err(dir.path(), &["fit-decay", "dup.csv"], 2);
    assert!(err.contains("duplicate delay_us"), "stderr: {err}");
}

// ================== wafer fits ==================

#[test]
fn fit_ra_round_trips_through_emitted_data() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("die_x,die_y,d_nm,resistance_ohm\n");
    for (i, d) in (350..=750).step_by(50).enumerate() {
        let w = (d as f64 - 90.0) / 1.0e3;
        writeln!(text, "{},{},{},{}", i % 3, i / 3, d, 1100.0 / (w * w)).unwrap();
    }
    std::fs::write(dir.path().join("prober.csv"), &text).unwrap();

    let first = run_ok(dir.path(), &["fit-ra", "prober.csv", "--out-dir", "a"]);
    let ra = param(&first, "ra_ohm_um2");
    let l = param(&first, "l_nm");
    assert!((ra - 1100.0).abs() < 1.0e-3, "RA {ra}");
    assert!((l - 90.0).abs() < 1.0e-3, "offset {l}");

    // The emitted data CSV is a valid input; refitting it must agree.
    let again = run_ok(dir.path(), &["fit-ra", "a/fit-ra.data.csv", "--out-dir", "b"]);
    assert_eq!(results(&first)["fit"]["params"], results(&again)["fit"]["params"]);
}

#[test]
fn freq_trend_flags_planted_outlier() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("d_nm,f_ge_GHz\n");
    for (i, d) in (350..=750).step_by(50).enumerate() {
        let mut f = -0.004 * d as f64 + 7.2;
        if i == 4 {
            f += 0.5;
        }
        writeln!(text, "{d},{f}").unwrap();
    }
    std::fs::write(dir.path().join("freq.csv"), &text).unwrap();
    let report = run_ok(dir.path(), &["freq-trend", "freq.csv", "--band-ghz", "0.1"]);
    let r = results(&report);
    assert_eq!(r["n_points"].as_u64().unwrap(), 9);
    let outliers = r["outlier_indices"].as_array().unwrap();
    assert_eq!(outliers.len(), 1, "outliers: {outliers:?}");
    assert_eq!(outliers[0].as_u64().unwrap(), 4);
    assert!(dir.path().join("freq-trend.fit.csv").exists());
}

// ================== tunneling ==================

#[test]
fn simulate_iv_reports_subgap_resistance_and_gamma() {
    let dir = TempDir::new().unwrap();
    // Normal/superconductor pair: the subgap slope has the closed form
    // R_N/γ, so the fitted resistance and γ estimate are checkable.
    let report = run_ok(
        dir.path(),
        &[
            "simulate-iv",
            "--r-n-kohm",
            "10",
            "--t-k",
            "0.1",
            "--left-normal",
            "--right-delta0-mev",
            "1.42",
            "--right-gamma",
            "4e-3",
            "--right-tc-k",
            "9.2",
            "--points",
            "201",
            "--subgap-window-mv",
            "-0.3,0.3",
        ],
    );
    let r = results(&report);
    let onset = r["onset_mv"].as_f64().unwrap();
    assert!((onset - 1.42).abs() < 0.08, "onset {onset}");
    let r_sub = r["subgap"]["r_subgap_mohm"].as_f64().unwrap();
    assert!((r_sub - 2.5).abs() / 2.5 < 0.10, "R_subgap {r_sub}");
    let gamma = r["subgap"]["gamma_estimate"].as_f64().unwrap();
    assert!((gamma - 4.0e-3).abs() / 4.0e-3 < 0.15, "gamma {gamma}");

    // The emitted curve carries the bath temperature, so it can feed
    // extract-gaps directly.
    let lines = csv_lines(&dir.path().join("simulate-iv.iv.csv"));
    assert_eq!(lines[0], "voltage_mV,current_nA,temperature_K");
    assert_eq!(lines.len(), 202);
}

#[test]
fn extract_gaps_round_trips_simulated_curves() {
    let dir = TempDir::new().unwrap();
    for t in ["0.3", "1.1"] {
        let out = format!("iv_{t}");
        let status = run_in(
            dir.path(),
            &[
                "simulate-iv",
                "--r-n-kohm",
                "10",
                "--t-k",
                t,
                "--left-delta0-mev",
                "1.4",
                "--left-gamma",
                "1e-3",
                "--left-tc-k",
                "9.2",
                "--right-delta0-mev",
                "0.2",
                "--right-gamma",
                "1e-3",
                "--right-tc-k",
                "1.4",
                "--points",
                "221",
                "--out-dir",
                &out,
            ],
        );
        assert!(status.status.success());
        std::fs::copy(
            dir.path().join(format!("{out}/simulate-iv.iv.csv")),
            dir.path().join(format!("trace_{t}.csv")),
        )
        .unwrap();
    }
    let report = run_ok(
        dir.path(),
        &["extract-gaps", "trace_0.3.csv", "trace_1.1.csv"],
    );
    let r = results(&report);
    let temps: Vec<f64> = r["temperatures_k"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(temps, vec![0.3, 1.1]);
    for nb in r["delta_nb_mev"].as_array().unwrap() {
        let v = nb.as_f64().unwrap();
        assert!((v - 1.4).abs() < 0.05, "big gap {v}");
    }
    let al = r["delta_al_mev"][1].as_f64().unwrap();
    assert!((al - 0.185).abs() < 0.04, "small gap at 1.1 K {al}");
    // At 0.3 K the difference peak sits below the visibility threshold.
    let warns = warnings(&report);
    assert!(
        warns.iter().any(|w| w.contains("difference peak invisible")),
        "warnings: {warns:?}"
    );
    assert!(dir.path().join("extract-gaps.delta_al.csv").exists());
    assert!(dir.path().join("extract-gaps.delta_nb.csv").exists());
}

#[test]
fn extract_gaps_without_features_is_an_analysis_error() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("voltage_mV,conductance_per_kohm\n");
    for i in 0..21 {
        writeln!(text, "{},0.1", -2.0 + 0.2 * i as f64).unwrap();
    }
    std::fs::write(dir.path().join("flat.csv"), text).unwrap();
    let err = run_err(
        dir.path(),
        &["extract-gaps", "flat.csv", "--temperature-k", "0.3"],
        1,
    );
    assert!(err.contains("no sum-gap conductance peak"), "stderr: {err}");
}

// ================== loss budget ==================

#[test]
fn loss_budget_flags_overcommitted_target_but_exits_zero() {
    let dir = TempDir::new().unwrap();
    let report = run_ok(
        dir.path(),
        &[
            "loss-budget",
            "--term",
            "junction:0.05:2e-5",
            "--target-inv-q",
            "1e-7",
        ],
    );
    let r = results(&report);
    let total = r["total_inv_q"].as_f64().unwrap();
    assert!((total - 1.0e-6).abs() < 1.0e-18, "total {total}");
    assert_eq!(r["within_target"], Value::Bool(false));
    assert!(r["margin_inv_q"].as_f64().unwrap() < 0.0);
    let warns = warnings(&report);
    assert!(
        warns.iter().any(|w| w.contains("exceeds the target")),
        "warnings: {warns:?}"
    );
    let lines = csv_lines(&dir.path().join("loss-budget.terms.csv"));
    assert_eq!(lines[0], "term,inv_q");
    assert_eq!(lines.len(), 2);
}

#[test]
fn loss_budget_reports_derived_circuit_quantities() {
    let dir = TempDir::new().unwrap();
    let report = run_ok(
        dir.path(),
        &[
            "loss-budget",
            "--term",
            "junction:0.05:2e-5",
            "--target-inv-q",
            "2e-6",
            "--geometry",
            "600,1.5,2,100",
            "--e-j-ghz",
            "40",
            "--z-c-ohm",
            "320",
            "--r-subgap-mohm",
            "2.5",
        ],
    );
    let r = results(&report);
    assert_eq!(r["within_target"], Value::Bool(true));
    let ratio = r["geometry"]["barrier_sidewall_ratio"].as_f64().unwrap();
    assert_eq!(ratio, 4.0);
    let l_j = r["josephson_inductance_nh"].as_f64().unwrap();
    assert!((l_j - 4.0865).abs() < 5.0e-4, "L_J {l_j}");
    let q = r["subgap_q_limit"]["q_bound"].as_f64().unwrap();
    assert_eq!(q, 2.5e6 / 320.0);
    assert!(r["subgap_q_limit"]["caveat"].as_str().unwrap().contains("tunnel"));
}

// ================== config plumbing ==================

#[test]
fn config_env_var_applies_and_flag_overrides_output_dir() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"truncation": {"n_max": 9}, "output_dir": "from_cfg"}"#,
    )
    .unwrap();
    let args = [
        "simulate-spectrum",
        "--c-shunt-ff",
        "100",
        "--c-j-ff",
        "10",
        "--e-j-ghz",
        "40",
    ];

    let out = bin()
        .current_dir(dir.path())
        .env("JUNCTIONLAB_CONFIG", &cfg)
        .args(args)
        .output()
        .unwrap();
    let report = stdout_json(&out);
    assert_eq!(report["config"]["truncation"]["n_max"].as_u64().unwrap(), 9);
    assert!(dir
        .path()
        .join("from_cfg/simulate-spectrum.report.json")
        .exists());

    // An explicit flag wins over the config file.
    let out = bin()
        .current_dir(dir.path())
        .env("JUNCTIONLAB_CONFIG", &cfg)
        .args(args)
        .args(["--out-dir", "from_flag"])
        .output()
        .unwrap();
    stdout_json(&out);
    assert!(dir
        .path()
        .join("from_flag/simulate-spectrum.report.json")
        .exists());
}

#[test]
fn pinned_constants_cannot_be_overridden() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"constants": {"e_C": 1.7e-19}}"#,
    )
    .unwrap();
    let err = run_err(
        dir.path(),
        &[
            "simulate-spectrum",
            "--c-shunt-ff",
            "100",
            "--c-j-ff",
            "10",
            "--e-j-ghz",
            "40",
            "--config",
            "cfg.json",
        ],
        2,
    );
    assert!(err.contains("pinned at build time"), "stderr: {err}");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"truncatoin": {"n_max": 9}}"#).unwrap();
    run_err(
        dir.path(),
        &[
            "simulate-spectrum",
            "--c-shunt-ff",
            "100",
            "--c-j-ff",
            "10",
            "--e-j-ghz",
            "40",
            "--config",
            "cfg.json",
        ],
        2,
    );
}
