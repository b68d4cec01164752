//! Fit commands: coherence decays (`fit-decay`, `fit-ramsey`,
//! `fit-echo`), the wafer resistance-area law (`fit-ra`), and the
//! qubit-frequency size trend (`freq-trend`).
//!
//! Each emits the normalized input data and a model curve as plot CSVs.
//! A fit that does not converge still writes its report (with the
//! engine's warnings) and exits 1.

use std::path::PathBuf;

use clap::Args;
use junctionlab::fits::{
    fit_echo, fit_ramsey, fit_resistance_area, fit_t1, frequency_size_trend, quality_factor,
    DecayingCosine, ExponentialDecay, FitModel, FitReport, ResistanceAreaLaw,
};
use junctionlab::trace::SampledTrace;
use serde_json::{json, Map, Value};

use super::{linspace, Ctx};
use crate::errors::{CliError, CliResult};
use crate::ingest::{
    load_decay_csv, load_freq_csv, load_prober_csv, DECAY_HEADER, FREQ_HEADER, PROBER_HEADER,
};
use crate::report::{emit, float_array, write_csv, ReportBuilder};

/// Points of every dense model-curve CSV.
const CURVE_POINTS: usize = 200;

fn fit_results(report: &FitReport) -> Value {
    let mut params = Map::new();
    for (i, (name, value)) in report.params.iter().enumerate() {
        let std_error = report
            .std_errors
            .as_ref()
            .map_or(Value::Null, |s| s[i].into());
        params.insert(
            name.clone(),
            json!({"value": value, "std_error": std_error}),
        );
    }
    json!({
        "params": params,
        "converged": report.converged,
        "iterations": report.iterations,
        "residual_norm": report.residual_norm,
    })
}

fn param_values(report: &FitReport) -> Vec<f64> {
    report.params.iter().map(|(_, v)| *v).collect()
}

fn write_decay_data_csv(ctx: &Ctx, command: &str, trace: &SampledTrace) -> CliResult<()> {
    write_csv(
        &ctx.out_dir,
        &format!("{command}.data.csv"),
        DECAY_HEADER,
        trace
            .x()
            .iter()
            .zip(trace.y())
            .map(|(t, p)| format!("{t},{p}")),
    )?;
    Ok(())
}

fn write_model_curve_csv(
    ctx: &Ctx,
    command: &str,
    header: &str,
    model: &dyn FitModel,
    params: &[f64],
    span: (f64, f64),
) -> CliResult<()> {
    write_csv(
        &ctx.out_dir,
        &format!("{command}.fit.csv"),
        header,
        linspace(span.0, span.1, CURVE_POINTS)
            .into_iter()
            .map(|x| format!("{x},{}", model.eval(params, x))),
    )?;
    Ok(())
}

fn exit_code(report: &FitReport) -> u8 {
    if report.converged {
        0
    } else {
        1
    }
}

#[derive(Debug, Args)]
pub struct FitDecayArgs {
    /// Relaxation trace CSV (`delay_us,population`).
    #[arg(value_name = "CSV")]
    pub input: PathBuf,
    /// Qubit frequency for the quality factor Q = ω·T1 (GHz).
    #[arg(long, value_name = "GHZ")]
    pub f_ge_ghz: Option<f64>,
}

pub fn fit_decay(args: &FitDecayArgs, ctx: &Ctx) -> CliResult<u8> {
    let mut rb = ReportBuilder::new("fit-decay", ctx.config.echo());
    rb.param("input", args.input.to_string_lossy());
    if let Some(f) = args.f_ge_ghz {
        rb.param("f_ge_ghz", f);
    }
    rb.digest_files(std::slice::from_ref(&args.input))?;

    let loaded = load_decay_csv(&args.input)?;
    rb.warn_all(loaded.warnings);
    let report = fit_t1(&loaded.trace)?;
    rb.warn_all(report.warnings.clone());
    rb.result("fit", fit_results(&report));

    if let Some(f) = args.f_ge_ghz {
        if report.converged {
            let t1 = report
                .value("T1_us")
                .expect("decay fit always reports T1_us");
            rb.result("quality_factor", quality_factor(f, t1)?);
        } else {
            rb.warn("quality factor skipped: fit did not converge");
        }
    }

    write_decay_data_csv(ctx, "fit-decay", &loaded.trace)?;
    let x = loaded.trace.x();
    write_model_curve_csv(
        ctx,
        "fit-decay",
        "delay_us,population_model",
        &ExponentialDecay,
        &param_values(&report),
        (x[0], x[x.len() - 1]),
    )?;
    emit(&rb.finish(), &ctx.out_dir, "fit-decay")?;
    Ok(exit_code(&report))
}

#[derive(Debug, Args)]
pub struct FitEchoArgs {
    /// Echo-decay trace CSV (`delay_us,population`).
    #[arg(value_name = "CSV")]
    pub input: PathBuf,
}

pub fn fit_echo_cmd(args: &FitEchoArgs, ctx: &Ctx) -> CliResult<u8> {
    let mut rb = ReportBuilder::new("fit-echo", ctx.config.echo());
    rb.param("input", args.input.to_string_lossy());
    rb.digest_files(std::slice::from_ref(&args.input))?;

    let loaded = load_decay_csv(&args.input)?;
    rb.warn_all(loaded.warnings);
    let report = fit_echo(&loaded.trace)?;
    rb.warn_all(report.warnings.clone());
    rb.result("fit", fit_results(&report));

    write_decay_data_csv(ctx, "fit-echo", &loaded.trace)?;
    let x = loaded.trace.x();
    write_model_curve_csv(
        ctx,
        "fit-echo",
        "delay_us,population_model",
        &ExponentialDecay,
        &param_values(&report),
        (x[0], x[x.len() - 1]),
    )?;
    emit(&rb.finish(), &ctx.out_dir, "fit-echo")?;
    Ok(exit_code(&report))
}

#[derive(Debug, Args)]
pub struct FitRamseyArgs {
    /// Ramsey fringe CSV (`delay_us,population`).
    #[arg(value_name = "CSV")]
    pub input: PathBuf,
}

pub fn fit_ramsey_cmd(args: &FitRamseyArgs, ctx: &Ctx) -> CliResult<u8> {
    let mut rb = ReportBuilder::new("fit-ramsey", ctx.config.echo());
    rb.param("input", args.input.to_string_lossy());
    rb.digest_files(std::slice::from_ref(&args.input))?;

    let loaded = load_decay_csv(&args.input)?;
    rb.warn_all(loaded.warnings);
    let report = fit_ramsey(&loaded.trace)?;
    rb.warn_all(report.warnings.clone());
    rb.result("fit", fit_results(&report));
    // Five parameters mean the fringe was resolved; three mean the
    // detector fell back to a pure decay.
    rb.result("fringe_resolved", report.params.len() == 5);

    write_decay_data_csv(ctx, "fit-ramsey", &loaded.trace)?;
    let x = loaded.trace.x();
    let span = (x[0], x[x.len() - 1]);
    let p = param_values(&report);
    if report.params.len() == 5 {
        write_model_curve_csv(
            ctx,
            "fit-ramsey",
            "delay_us,population_model",
            &DecayingCosine,
            &p,
            span,
        )?;
    } else {
        write_model_curve_csv(
            ctx,
            "fit-ramsey",
            "delay_us,population_model",
            &ExponentialDecay,
            &p,
            span,
        )?;
    }
    emit(&rb.finish(), &ctx.out_dir, "fit-ramsey")?;
    Ok(exit_code(&report))
}

#[derive(Debug, Args)]
pub struct FitRaArgs {
    /// Wafer prober CSV (`die_x,die_y,d_nm,resistance_ohm`).
    #[arg(value_name = "CSV")]
    pub input: PathBuf,
}

pub fn fit_ra(args: &FitRaArgs, ctx: &Ctx) -> CliResult<u8> {
    let mut rb = ReportBuilder::new("fit-ra", ctx.config.echo());
    rb.param("input", args.input.to_string_lossy());
    rb.digest_files(std::slice::from_ref(&args.input))?;

    let points = load_prober_csv(&args.input)?;
    let report = fit_resistance_area(&points)?;
    rb.warn_all(report.warnings.clone());
    rb.result("fit", fit_results(&report));
    rb.result("n_points", points.len());

    write_csv(
        &ctx.out_dir,
        "fit-ra.data.csv",
        PROBER_HEADER,
        points.iter().map(|p| {
            let (x, y) = p.die.unwrap_or((0, 0));
            format!("{x},{y},{},{}", p.d_nm, p.r_ohm)
        }),
    )?;
    let d_min = points.iter().map(|p| p.d_nm).fold(f64::INFINITY, f64::min);
    let d_max = points
        .iter()
        .map(|p| p.d_nm)
        .fold(f64::NEG_INFINITY, f64::max);
    write_model_curve_csv(
        ctx,
        "fit-ra",
        "d_nm,resistance_ohm_model",
        &ResistanceAreaLaw,
        &param_values(&report),
        (d_min, d_max),
    )?;
    emit(&rb.finish(), &ctx.out_dir, "fit-ra")?;
    Ok(exit_code(&report))
}

#[derive(Debug, Args)]
pub struct FreqTrendArgs {
    /// Frequency-versus-size CSV (`d_nm,f_ge_GHz`).
    #[arg(value_name = "CSV")]
    pub input: PathBuf,
    /// Residual band beyond which a device is flagged (GHz).
    #[arg(long, value_name = "GHZ", default_value_t = 0.1)]
    pub band_ghz: f64,
}

pub fn freq_trend(args: &FreqTrendArgs, ctx: &Ctx) -> CliResult<u8> {
    if !(args.band_ghz > 0.0 && args.band_ghz.is_finite()) {
        return Err(CliError::Usage(format!(
            "--band-ghz must be positive, got {}",
            args.band_ghz
        )));
    }
    let mut rb = ReportBuilder::new("freq-trend", ctx.config.echo());
    rb.param("input", args.input.to_string_lossy())
        .param("band_ghz", args.band_ghz);
    rb.digest_files(std::slice::from_ref(&args.input))?;

    let points = load_freq_csv(&args.input)?;
    let trend = frequency_size_trend(&points)?;
    let outliers = trend.outliers(args.band_ghz);
    rb.result("slope_ghz_per_nm", trend.slope_ghz_per_nm)
        .result("intercept_ghz", trend.intercept_ghz)
        .result("max_abs_residual_ghz", trend.max_abs_residual_ghz)
        .result("residuals_ghz", float_array(&trend.residuals_ghz))
        .result("n_points", points.len())
        .result(
            "outlier_indices",
            Value::Array(outliers.iter().map(|&i| Value::from(i)).collect()),
        )
        .result(
            "outlier_d_nm",
            Value::Array(outliers.iter().map(|&i| points[i].0.into()).collect()),
        );
    if !outliers.is_empty() {
        rb.warn(format!(
            "{} device(s) sit more than {} GHz off the size trend",
            outliers.len(),
            args.band_ghz
        ));
    }

    write_csv(
        &ctx.out_dir,
        "freq-trend.data.csv",
        FREQ_HEADER,
        points.iter().map(|(d, f)| format!("{d},{f}")),
    )?;
    let mut ds: Vec<f64> = points.iter().map(|(d, _)| *d).collect();
    ds.sort_by(f64::total_cmp);
    write_csv(
        &ctx.out_dir,
        "freq-trend.fit.csv",
        "d_nm,f_ge_model_GHz",
        ds.iter().map(|d| {
            format!(
                "{d},{}",
                trend.intercept_ghz + trend.slope_ghz_per_nm * d
            )
        }),
    )?;
    emit(&rb.finish(), &ctx.out_dir, "freq-trend")?;
    Ok(0)
}
