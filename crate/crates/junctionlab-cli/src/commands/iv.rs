//! Tunnel-junction commands: `simulate-iv` computes one finite-temperature
//! IV curve, `extract-gaps` turns a temperature series of traces into a
//! gap-versus-temperature table.

use std::path::PathBuf;

use clap::Args;
use junctionlab::tunneling::{
    dynes_gamma_estimate, extract_gaps_vs_temperature, iv_curve, junction_at_temperature,
    onset_voltage, subgap_linear_fit, JunctionDC, SuperconductorModel,
};
use serde_json::{json, Value};

use super::{linspace, Ctx};
use crate::errors::{CliError, CliResult};
use crate::ingest::{load_didv_csv, load_iv_csv, sniff_trace_kind, TraceKind};
use crate::report::{emit, float_array, write_csv, ReportBuilder};

/// One electrode's flags; `--<side>-normal` or the full superconducting
/// triple (zero-temperature gap, Dynes broadening, critical temperature).
#[derive(Debug, Args)]
pub struct ElectrodeArgs {
    /// Zero-temperature gap Δ₀ of the left electrode (meV).
    #[arg(long, value_name = "MEV")]
    pub left_delta0_mev: Option<f64>,
    /// Dynes broadening γ of the left electrode.
    #[arg(long, value_name = "GAMMA")]
    pub left_gamma: Option<f64>,
    /// Critical temperature of the left electrode (K).
    #[arg(long, value_name = "K")]
    pub left_tc_k: Option<f64>,
    /// Left electrode is a normal metal.
    #[arg(long)]
    pub left_normal: bool,
    /// Zero-temperature gap Δ₀ of the right electrode (meV).
    #[arg(long, value_name = "MEV")]
    pub right_delta0_mev: Option<f64>,
    /// Dynes broadening γ of the right electrode.
    #[arg(long, value_name = "GAMMA")]
    pub right_gamma: Option<f64>,
    /// Critical temperature of the right electrode (K).
    #[arg(long, value_name = "K")]
    pub right_tc_k: Option<f64>,
    /// Right electrode is a normal metal.
    #[arg(long)]
    pub right_normal: bool,
}

fn resolve_electrode(
    side: &str,
    normal: bool,
    delta0: Option<f64>,
    gamma: Option<f64>,
    tc: Option<f64>,
) -> CliResult<SuperconductorModel> {
    if normal {
        if delta0.is_some() || gamma.is_some() || tc.is_some() {
            return Err(CliError::Usage(format!(
                "--{side}-normal conflicts with the superconducting {side}-electrode flags"
            )));
        }
        return Ok(SuperconductorModel::normal_metal());
    }
    match (delta0, gamma, tc) {
        (Some(d), Some(g), Some(t)) => {
            SuperconductorModel::new(d, g, t).map_err(|e| CliError::Usage(e.to_string()))
        }
        _ => Err(CliError::Usage(format!(
            "{side} electrode needs --{side}-delta0-mev, --{side}-gamma and \
             --{side}-tc-k (or --{side}-normal)"
        ))),
    }
}

impl ElectrodeArgs {
    fn resolve(&self) -> CliResult<(SuperconductorModel, SuperconductorModel)> {
        let left = resolve_electrode(
            "left",
            self.left_normal,
            self.left_delta0_mev,
            self.left_gamma,
            self.left_tc_k,
        )?;
        let right = resolve_electrode(
            "right",
            self.right_normal,
            self.right_delta0_mev,
            self.right_gamma,
            self.right_tc_k,
        )?;
        Ok((left, right))
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SimulateIvArgs {
    /// Normal-state resistance R_N (kΩ).
    #[arg(long, value_name = "KOHM")]
    pub r_n_kohm: f64,
    /// Bath temperature (K); gaps are rescaled to it before integrating.
    #[arg(long, value_name = "K")]
    pub t_k: f64,
    #[command(flatten)]
    pub electrodes: ElectrodeArgs,
    /// Lowest bias of the sweep (mV).
    #[arg(long, value_name = "MV", default_value_t = -2.5)]
    pub v_min_mv: f64,
    /// Highest bias of the sweep (mV).
    #[arg(long, value_name = "MV", default_value_t = 2.5)]
    pub v_max_mv: f64,
    /// Number of bias points.
    #[arg(long, value_name = "N", default_value_t = 501)]
    pub points: usize,
    /// Also fit the subgap slope inside this window and estimate γ
    /// (format `LO,HI` in mV). Hyphen values are legal; windows usually
    /// straddle zero bias.
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true)]
    pub subgap_window_mv: Option<String>,
}

fn parse_pair(flag: &str, text: &str) -> CliResult<(f64, f64)> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!(
            "{flag} expects `LO,HI`, got `{text}`"
        )));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{flag}: cannot parse `{}`", parts[0])))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{flag}: cannot parse `{}`", parts[1])))?;
    Ok((lo, hi))
}

pub fn simulate_iv(args: &SimulateIvArgs, ctx: &Ctx) -> CliResult<u8> {
    if args.points < 4 {
        return Err(CliError::Usage(format!(
            "--points must be at least 4, got {}",
            args.points
        )));
    }
    if !(args.v_min_mv < args.v_max_mv) {
        return Err(CliError::Usage(format!(
            "bias window must satisfy v_min < v_max, got ({}, {})",
            args.v_min_mv, args.v_max_mv
        )));
    }
    let (left, right) = args.electrodes.resolve()?;
    let junction = JunctionDC::new(args.r_n_kohm, left, right)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let mut rb = ReportBuilder::new("simulate-iv", ctx.config.echo());
    rb.param("r_n_kohm", args.r_n_kohm)
        .param("t_k", args.t_k)
        .param("left", electrode_echo(&left))
        .param("right", electrode_echo(&right))
        .param("v_min_mv", args.v_min_mv)
        .param("v_max_mv", args.v_max_mv)
        .param("points", args.points);

    let at_t = junction_at_temperature(&junction, args.t_k)?;
    let grid = linspace(args.v_min_mv, args.v_max_mv, args.points);
    let iv = iv_curve(&at_t, args.t_k, &grid)?;

    let (left_t, right_t) = at_t.electrodes();
    rb.result("delta_left_mev_at_t", left_t.delta0_mev())
        .result("delta_right_mev_at_t", right_t.delta0_mev());
    match onset_voltage(&iv, args.r_n_kohm) {
        Ok(v) => {
            rb.result("onset_mv", v);
        }
        Err(e) => {
            rb.warn(format!("no current onset reported: {e}"));
        }
    }
    if let Some(window) = &args.subgap_window_mv {
        let window = parse_pair("--subgap-window-mv", window)?;
        let fit = subgap_linear_fit(&iv, window)?;
        let gamma = dynes_gamma_estimate(args.r_n_kohm, fit.r_subgap_mohm)?;
        rb.result(
            "subgap",
            json!({
                "window_mv": [window.0, window.1],
                "r_subgap_mohm": fit.r_subgap_mohm,
                "std_err_mohm": fit.std_err_mohm,
                "points_used": fit.points_used,
                "gamma_estimate": gamma,
            }),
        );
    }

    write_csv(
        &ctx.out_dir,
        "simulate-iv.iv.csv",
        "voltage_mV,current_nA,temperature_K",
        iv.x()
            .iter()
            .zip(iv.y())
            .map(|(v, i)| format!("{v},{i},{}", args.t_k)),
    )?;
    emit(&rb.finish(), &ctx.out_dir, "simulate-iv")?;
    Ok(0)
}

fn electrode_echo(sc: &SuperconductorModel) -> Value {
    if sc.delta0_mev() == 0.0 {
        json!({"normal": true})
    } else {
        json!({
            "delta0_mev": sc.delta0_mev(),
            "gamma": sc.gamma(),
            "tc_k": sc.tc_k(),
        })
    }
}

#[derive(Debug, Args)]
pub struct ExtractGapsArgs {
    /// IV or conductance CSVs, or directories of them (expanded in
    /// file-name order).
    #[arg(value_name = "PATH", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Bath temperature for a single input that carries none.
    #[arg(long, value_name = "K")]
    pub temperature_k: Option<f64>,
}

fn expand_inputs(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for path in inputs {
        if path.is_dir() {
            let mut found = Vec::new();
            let entries = std::fs::read_dir(path).map_err(|e| {
                CliError::Usage(format!("cannot list {}: {e}", path.display()))
            })?;
            for entry in entries {
                let entry = entry.map_err(|e| {
                    CliError::Usage(format!("cannot list {}: {e}", path.display()))
                })?;
                let p = entry.path();
                if p.extension().is_some_and(|x| x == "csv") {
                    found.push(p);
                }
            }
            if found.is_empty() {
                return Err(CliError::Usage(format!(
                    "{}: directory holds no .csv files",
                    path.display()
                )));
            }
            found.sort();
            files.extend(found);
        } else {
            files.push(path.clone());
        }
    }
    Ok(files)
}

pub fn extract_gaps(args: &ExtractGapsArgs, ctx: &Ctx) -> CliResult<u8> {
    let files = expand_inputs(&args.inputs)?;
    let mut rb = ReportBuilder::new("extract-gaps", ctx.config.echo());
    rb.param(
        "inputs",
        Value::Array(
            files
                .iter()
                .map(|p| Value::from(p.to_string_lossy()))
                .collect(),
        ),
    );
    if let Some(t) = args.temperature_k {
        rb.param("temperature_k", t);
    }
    rb.digest_files(&files)?;

    let mut traces = Vec::with_capacity(files.len());
    for path in &files {
        let loaded = match sniff_trace_kind(path)? {
            TraceKind::Iv => load_iv_csv(path)?,
            TraceKind::Didv => load_didv_csv(path)?,
        };
        rb.warn_all(loaded.warnings);
        let mut trace = loaded.trace;
        match (trace.temperature_k, args.temperature_k) {
            (Some(embedded), Some(flag)) if embedded != flag => {
                return Err(CliError::Usage(format!(
                    "{}: embedded temperature {embedded} K conflicts with \
                     --temperature-k {flag}",
                    path.display()
                )));
            }
            (None, Some(flag)) => {
                if files.len() > 1 {
                    return Err(CliError::Usage(
                        "--temperature-k applies to a single input; tag multi-file \
                         series through the temperature_K column"
                            .into(),
                    ));
                }
                trace = trace
                    .with_temperature(flag)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
            }
            (None, None) => {
                return Err(CliError::Usage(format!(
                    "{}: no temperature_K column and no --temperature-k flag",
                    path.display()
                )));
            }
            _ => {}
        }
        traces.push(trace);
    }

    let r = extract_gaps_vs_temperature(&traces)?;
    rb.result("temperatures_k", float_array(&r.temperatures_k))
        .result("delta_nb_mev", float_array(&r.delta_nb_mev))
        .result("delta_al_mev", float_array(&r.delta_al_mev))
        .result("v_sum_mv", float_array(&r.v_sum_mv))
        .result(
            "v_diff_mv",
            Value::Array(
                r.v_diff_mv
                    .iter()
                    .map(|o| o.map_or(Value::Null, Value::from))
                    .collect(),
            ),
        );
    let held = r.v_diff_mv.iter().filter(|o| o.is_none()).count();
    if held > 0 {
        rb.warn(format!(
            "difference peak invisible in {held} trace(s); Δ_big held at its \
             low-temperature plateau there"
        ));
    }

    write_gap_csv(ctx, "extract-gaps.delta_nb.csv", "delta_nb_meV", &r.temperatures_k, &r.delta_nb_mev)?;
    write_gap_csv(ctx, "extract-gaps.delta_al.csv", "delta_al_meV", &r.temperatures_k, &r.delta_al_mev)?;
    emit(&rb.finish(), &ctx.out_dir, "extract-gaps")?;
    Ok(0)
}

fn write_gap_csv(
    ctx: &Ctx,
    filename: &str,
    column: &str,
    temps: &[f64],
    gaps: &[f64],
) -> CliResult<PathBuf> {
    write_csv(
        &ctx.out_dir,
        filename,
        &format!("temperature_K,{column}"),
        temps
            .iter()
            .zip(gaps)
            .map(|(t, g)| format!("{t},{g}")),
    )
}
