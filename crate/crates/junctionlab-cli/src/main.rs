//! `junctionlab`: command-line workbench for junction-based qubit
//! analysis. Each subcommand writes one deterministic JSON report (also
//! echoed to stdout) plus plot-data CSVs into the output directory.
//!
//! Exit codes: 0 success, 1 analysis failure (including fits that do
//! not converge), 2 usage or input-parse error.

// Validation sites use `!(a < b)` so NaN lands on the rejecting arm.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod errors;
mod ingest;
mod report;

use commands::{budget, fitcmd, iv, spectrum, Ctx};
use config::RunConfig;
use errors::CliResult;

#[derive(Parser)]
#[command(
    name = "junctionlab",
    version,
    about = "Workbench for double-junction qubit spectra, tunnel-junction IV \
             analysis, coherence fits, and loss budgets"
)]
struct Cli {
    /// JSON config file (default: $JUNCTIONLAB_CONFIG, then built-ins).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for reports and plot CSVs (default: config, then `.`).
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Diagonalize the double-junction circuit and report its spectrum.
    SimulateSpectrum(spectrum::SimulateSpectrumArgs),
    /// Peak-to-peak gate-charge dispersion of f_ge.
    SweepDispersion(spectrum::SweepDispersionArgs),
    /// Finite-temperature tunnel-junction IV curve.
    SimulateIv(iv::SimulateIvArgs),
    /// Superconducting gaps versus temperature from IV or conductance traces.
    ExtractGaps(iv::ExtractGapsArgs),
    /// Exponential relaxation fit (T1), optionally with Q.
    FitDecay(fitcmd::FitDecayArgs),
    /// Decaying-cosine Ramsey fit (T2*, detuning, phase).
    FitRamsey(fitcmd::FitRamseyArgs),
    /// Exponential echo-decay fit (T2_echo).
    FitEcho(fitcmd::FitEchoArgs),
    /// Resistance-area law fit of a wafer prober map.
    FitRa(fitcmd::FitRaArgs),
    /// Linear qubit-frequency versus junction-size trend with outlier flags.
    FreqTrend(fitcmd::FreqTrendArgs),
    /// p·tanδ loss budget against a 1/Q target.
    LossBudget(budget::LossBudgetArgs),
}

fn run(cli: Cli) -> CliResult<u8> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    if let Some(dir) = cli.out_dir {
        config.output_dir = dir;
    }
    let ctx = Ctx {
        out_dir: config.output_dir.clone(),
        config,
    };
    match &cli.command {
        Command::SimulateSpectrum(args) => spectrum::simulate_spectrum(args, &ctx),
        Command::SweepDispersion(args) => spectrum::sweep_dispersion(args, &ctx),
        Command::SimulateIv(args) => iv::simulate_iv(args, &ctx),
        Command::ExtractGaps(args) => iv::extract_gaps(args, &ctx),
        Command::FitDecay(args) => fitcmd::fit_decay(args, &ctx),
        Command::FitRamsey(args) => fitcmd::fit_ramsey_cmd(args, &ctx),
        Command::FitEcho(args) => fitcmd::fit_echo_cmd(args, &ctx),
        Command::FitRa(args) => fitcmd::fit_ra(args, &ctx),
        Command::FreqTrend(args) => fitcmd::freq_trend(args, &ctx),
        Command::LossBudget(args) => budget::run(args, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
