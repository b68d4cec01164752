//! Circuit-spectrum commands: `simulate-spectrum` diagonalizes the
//! double-junction circuit, `sweep-dispersion` measures the gate-charge
//! sensitivity of f_ge.

use clap::Args;
use junctionlab::circuit::{
    build_charge_hamiltonian_sparse, charge_dispersion, spectrum, DispersionGrid,
    DoubleJunctionParams, GateCharge, TruncationSpec,
};
use junctionlab::linalg::lanczos_lowest_with_tol;
use serde_json::json;

use super::{linspace, Ctx};
use crate::errors::{CliError, CliResult};
use crate::report::{emit, float_array, write_csv, ReportBuilder};

/// Ritz-residual tolerance for the f_ge line cut (GHz); matches the
/// tolerance of the library's dispersion sweeps.
const LINE_CUT_RESIDUAL_TOL_GHZ: f64 = 3.0e-6;

/// Circuit parameters shared by the spectrum commands. Symmetric flags
/// (`--c-j-ff`, `--e-j-ghz`) set both junctions; the per-junction flags
/// override one side.
#[derive(Debug, Args)]
pub struct CircuitArgs {
    /// Shunt capacitance C_S (fF).
    #[arg(long, value_name = "FF")]
    pub c_shunt_ff: f64,
    /// Junction capacitance C_J1 = C_J2 (fF).
    #[arg(long, value_name = "FF")]
    pub c_j_ff: Option<f64>,
    /// Junction capacitance C_J1 (fF).
    #[arg(long, value_name = "FF")]
    pub c_j1_ff: Option<f64>,
    /// Junction capacitance C_J2 (fF).
    #[arg(long, value_name = "FF")]
    pub c_j2_ff: Option<f64>,
    /// Josephson energy E_J1 = E_J2 (GHz).
    #[arg(long, value_name = "GHZ")]
    pub e_j_ghz: Option<f64>,
    /// Josephson energy E_J1 (GHz).
    #[arg(long, value_name = "GHZ")]
    pub e_j1_ghz: Option<f64>,
    /// Josephson energy E_J2 (GHz).
    #[arg(long, value_name = "GHZ")]
    pub e_j2_ghz: Option<f64>,
    /// Gate capacitance C_g1 (fF).
    #[arg(long, value_name = "FF", default_value_t = 0.0)]
    pub c_g1_ff: f64,
    /// Gate capacitance C_g2 (fF).
    #[arg(long, value_name = "FF", default_value_t = 0.0)]
    pub c_g2_ff: f64,
}

impl CircuitArgs {
    fn resolve(&self) -> CliResult<DoubleJunctionParams> {
        let c_j1 = self.c_j1_ff.or(self.c_j_ff).ok_or_else(|| {
            CliError::Usage("missing junction capacitance: pass --c-j-ff or --c-j1-ff/--c-j2-ff".into())
        })?;
        let c_j2 = self.c_j2_ff.or(self.c_j_ff).ok_or_else(|| {
            CliError::Usage("missing junction capacitance: pass --c-j-ff or --c-j1-ff/--c-j2-ff".into())
        })?;
        let e_j1 = self.e_j1_ghz.or(self.e_j_ghz).ok_or_else(|| {
            CliError::Usage("missing Josephson energy: pass --e-j-ghz or --e-j1-ghz/--e-j2-ghz".into())
        })?;
        let e_j2 = self.e_j2_ghz.or(self.e_j_ghz).ok_or_else(|| {
            CliError::Usage("missing Josephson energy: pass --e-j-ghz or --e-j1-ghz/--e-j2-ghz".into())
        })?;
        DoubleJunctionParams::new(
            self.c_shunt_ff,
            c_j1,
            c_j2,
            self.c_g1_ff,
            self.c_g2_ff,
            e_j1,
            e_j2,
        )
        .map_err(|e| CliError::Usage(e.to_string()))
    }

    fn echo(&self, rb: &mut ReportBuilder, p: &DoubleJunctionParams) {
        let (c_j1, c_j2) = p.c_j();
        let (c_g1, c_g2) = p.c_g();
        let (e_j1, e_j2) = p.e_j();
        rb.param("c_shunt_ff", p.c_s())
            .param("c_j1_ff", c_j1)
            .param("c_j2_ff", c_j2)
            .param("c_g1_ff", c_g1)
            .param("c_g2_ff", c_g2)
            .param("e_j1_ghz", e_j1)
            .param("e_j2_ghz", e_j2);
    }
}

/// Truncation overrides; defaults come from the run config.
#[derive(Debug, Args)]
pub struct TruncArgs {
    /// Per-node charge cutoff (basis spans −n_max..n_max per node).
    #[arg(long, value_name = "N")]
    pub n_max: Option<usize>,
    /// Truncation-convergence tolerance on f_ge (Hz).
    #[arg(long, value_name = "HZ")]
    pub tol_hz: Option<f64>,
}

impl TruncArgs {
    fn resolve(&self, ctx: &Ctx) -> CliResult<TruncationSpec> {
        let n_max = self.n_max.unwrap_or(ctx.config.n_max);
        let tol = self.tol_hz.unwrap_or(ctx.config.convergence_tol_hz);
        TruncationSpec::new(n_max, tol).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SimulateSpectrumArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[command(flatten)]
    pub trunc: TruncArgs,
    /// Differential gate charge n_g− (Cooper pairs).
    #[arg(long, value_name = "NG", default_value_t = 0.0)]
    pub n_g_minus: f64,
    /// Common-mode gate charge n_g+ (Cooper pairs).
    #[arg(long, value_name = "NG", default_value_t = 0.0)]
    pub n_g_plus: f64,
    /// Number of levels to report (≥ 3).
    #[arg(long, value_name = "K", default_value_t = 6)]
    pub levels: usize,
    /// Also sweep the gate plane and report the charge dispersion.
    #[arg(long)]
    pub sweep_n_g: bool,
}

pub fn simulate_spectrum(args: &SimulateSpectrumArgs, ctx: &Ctx) -> CliResult<u8> {
    if args.levels < 3 {
        return Err(CliError::Usage(format!(
            "--levels must be at least 3, got {}",
            args.levels
        )));
    }
    let params = args.circuit.resolve()?;
    let trunc = args.trunc.resolve(ctx)?;
    let gate = GateCharge::new(args.n_g_minus, args.n_g_plus);

    let mut rb = ReportBuilder::new("simulate-spectrum", ctx.config.echo());
    args.circuit.echo(&mut rb, &params);
    rb.param("n_g_minus", args.n_g_minus)
        .param("n_g_plus", args.n_g_plus)
        .param("n_max", trunc.n_max())
        .param("tol_hz", trunc.convergence_tol_hz())
        .param("levels", args.levels)
        .param("sweep_n_g", args.sweep_n_g);

    let (spec, n_max_used) = spectrum(&params, &gate, &trunc, args.levels)?;
    let used = TruncationSpec::new(n_max_used, trunc.convergence_tol_hz())?;
    rb.result("levels_ghz", float_array(&spec.levels))
        .result("f_ge_ghz", spec.f_ge)
        .result("f_ef_ghz", spec.f_ef)
        .result("f_gf_ghz", spec.f_gf)
        .result("anharmonicity_mhz", spec.anharmonicity * 1.0e3)
        .result("n_max_used", n_max_used)
        .result("dimension", used.dimension());

    if args.sweep_n_g {
        let d = charge_dispersion(&params, &trunc, 3, DispersionGrid::SymmetryPoints)?;
        rb.result(
            "dispersion",
            json!({
                "peak_to_peak_hz": d.peak_to_peak_hz,
                "precision_floor_hz": d.precision_floor_hz,
                "near_precision_floor": d.near_precision_floor,
                "n_max_used": d.n_max_used,
            }),
        );
        if d.near_precision_floor {
            rb.warn(
                "charge dispersion sits near the eigensolver precision floor; \
                 the value is an upper bound set by solver noise",
            );
        }
    }

    write_csv(
        &ctx.out_dir,
        "simulate-spectrum.levels.csv",
        "level_index,frequency_GHz",
        spec.levels
            .iter()
            .enumerate()
            .map(|(i, f)| format!("{i},{f}")),
    )?;
    emit(&rb.finish(), &ctx.out_dir, "simulate-spectrum")?;
    Ok(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GridChoice {
    /// Band-extremum symmetry points of the gate plane.
    Symmetry,
    /// Full closed [0, 1]² gate plane.
    Full,
}

#[derive(Debug, Args)]
pub struct SweepDispersionArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[command(flatten)]
    pub trunc: TruncArgs,
    /// Gate-grid resolution per axis (≥ 3).
    #[arg(long, value_name = "N", default_value_t = 3)]
    pub resolution: usize,
    /// Gate-plane sampling scheme.
    #[arg(long, value_enum, default_value_t = GridChoice::Symmetry)]
    pub grid: GridChoice,
    /// Points of the f_ge versus n_g− plot cut (0 skips the cut CSV rows).
    #[arg(long, value_name = "N", default_value_t = 21)]
    pub line_points: usize,
}

pub fn sweep_dispersion(args: &SweepDispersionArgs, ctx: &Ctx) -> CliResult<u8> {
    let params = args.circuit.resolve()?;
    let trunc = args.trunc.resolve(ctx)?;
    let grid = match args.grid {
        GridChoice::Symmetry => DispersionGrid::SymmetryPoints,
        GridChoice::Full => DispersionGrid::Full,
    };

    let mut rb = ReportBuilder::new("sweep-dispersion", ctx.config.echo());
    args.circuit.echo(&mut rb, &params);
    rb.param("n_max", trunc.n_max())
        .param("tol_hz", trunc.convergence_tol_hz())
        .param("resolution", args.resolution)
        .param(
            "grid",
            match args.grid {
                GridChoice::Symmetry => "symmetry",
                GridChoice::Full => "full",
            },
        )
        .param("line_points", args.line_points);

    let d = charge_dispersion(&params, &trunc, args.resolution, grid)?;
    rb.result("peak_to_peak_hz", d.peak_to_peak_hz)
        .result("precision_floor_hz", d.precision_floor_hz)
        .result("near_precision_floor", d.near_precision_floor)
        .result("n_max_used", d.n_max_used);
    if d.near_precision_floor {
        rb.warn(
            "charge dispersion sits near the eigensolver precision floor; \
             the value is an upper bound set by solver noise",
        );
    }

    // Plot cut: f_ge along the differential gate axis at the cutoff the
    // sweep converged at.
    let mut rows = Vec::new();
    if args.line_points > 0 {
        if args.line_points == 1 {
            return Err(CliError::Usage(
                "--line-points must be 0 or at least 2".into(),
            ));
        }
        let cut_trunc = TruncationSpec::new(d.n_max_used, trunc.convergence_tol_hz())?;
        for ng in linspace(0.0, 1.0, args.line_points) {
            let h = build_charge_hamiltonian_sparse(
                &params,
                &GateCharge::new(ng, 0.0),
                &cut_trunc,
            );
            let vals = lanczos_lowest_with_tol(&h, 2, LINE_CUT_RESIDUAL_TOL_GHZ)?;
            rows.push(format!("{ng},{}", vals[1] - vals[0]));
        }
    }
    write_csv(
        &ctx.out_dir,
        "sweep-dispersion.fge_vs_ng.csv",
        "n_g_minus,f_ge_GHz",
        rows,
    )?;
    emit(&rb.finish(), &ctx.out_dir, "sweep-dispersion")?;
    Ok(0)
}
