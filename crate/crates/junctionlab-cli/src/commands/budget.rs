//! `loss-budget`: p·tanδ terms against a 1/Q target, plus the optional
//! derived figures (capacitance ratio, junction participation, Josephson
//! inductance, characteristic impedance, subgap Q ceiling).

use clap::Args;
use junctionlab::loss::{
    barrier_sidewall_ratio, characteristic_impedance, josephson_inductance,
    junction_participation, loss_budget, loss_tangent_bound, parallel_plate_capacitance,
    subgap_q_limit, JunctionGeometry, LossContribution, DEFAULT_BARRIER_EPS_R,
    SUBGAP_QUASIPARTICLE_CAVEAT,
};
use serde_json::{json, Value};

use super::Ctx;
use crate::errors::{CliError, CliResult};
use crate::report::{emit, write_csv, ReportBuilder};

#[derive(Debug, Args)]
pub struct LossBudgetArgs {
    /// Budget term as `name:participation:tan_delta`; repeatable.
    #[arg(long = "term", value_name = "NAME:P:TAND", required = true)]
    pub terms: Vec<String>,
    /// Inverse quality factor the budget must stay under.
    #[arg(long, value_name = "INVQ")]
    pub target_inv_q: f64,
    /// Junction geometry `lateral,barrier,sidewall,electrode` (nm);
    /// reports the barrier/sidewall capacitance ratio.
    #[arg(long, value_name = "L,B,S,E")]
    pub geometry: Option<String>,
    /// Barrier relative permittivity for the geometry capacitances.
    #[arg(long, value_name = "EPSR", default_value_t = DEFAULT_BARRIER_EPS_R)]
    pub eps_r: f64,
    /// Junction capacitance for the participation ratio (fF).
    #[arg(long, value_name = "FF")]
    pub c_j_ff: Option<f64>,
    /// Shunt capacitance for the participation ratio (fF).
    #[arg(long, value_name = "FF")]
    pub c_shunt_ff: Option<f64>,
    /// Josephson energy; reports L_J (GHz).
    #[arg(long, value_name = "GHZ")]
    pub e_j_ghz: Option<f64>,
    /// Effective inductance for Z_c = √(L/C) (nH).
    #[arg(long, value_name = "NH")]
    pub l_eff_nh: Option<f64>,
    /// Effective capacitance for Z_c = √(L/C) (fF).
    #[arg(long, value_name = "FF")]
    pub c_eff_ff: Option<f64>,
    /// Characteristic impedance, given directly (Ω).
    #[arg(long, value_name = "OHM", conflicts_with_all = ["l_eff_nh", "c_eff_ff"])]
    pub z_c_ohm: Option<f64>,
    /// Subgap resistance; reports the Q ceiling R/Z_c (MΩ).
    #[arg(long, value_name = "MOHM")]
    pub r_subgap_mohm: Option<f64>,
}

fn parse_term(text: &str) -> CliResult<LossContribution> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "--term expects `name:participation:tan_delta`, got `{text}`"
        )));
    }
    let p: f64 = parts[1].trim().parse().map_err(|_| {
        CliError::Usage(format!("--term {text}: cannot parse participation `{}`", parts[1]))
    })?;
    let t: f64 = parts[2].trim().parse().map_err(|_| {
        CliError::Usage(format!("--term {text}: cannot parse tan_delta `{}`", parts[2]))
    })?;
    LossContribution::new(parts[0].trim(), p, t).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_geometry(text: &str) -> CliResult<JunctionGeometry> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(CliError::Usage(format!(
            "--geometry expects `lateral,barrier,sidewall,electrode` in nm, got `{text}`"
        )));
    }
    let mut v = [0.0; 4];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| {
            CliError::Usage(format!("--geometry: cannot parse `{part}` as a length"))
        })?;
    }
    JunctionGeometry::new(v[0], v[1], v[2], v[3]).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn run(args: &LossBudgetArgs, ctx: &Ctx) -> CliResult<u8> {
    let terms: Vec<LossContribution> = args
        .terms
        .iter()
        .map(|t| parse_term(t))
        .collect::<CliResult<_>>()?;

    let mut rb = ReportBuilder::new("loss-budget", ctx.config.echo());
    rb.param(
        "terms",
        Value::Array(args.terms.iter().map(|t| Value::from(t.as_str())).collect()),
    )
    .param("target_inv_q", args.target_inv_q);

    let budget =
        loss_budget(&terms, args.target_inv_q).map_err(|e| CliError::Usage(e.to_string()))?;
    rb.result(
        "terms",
        Value::Array(
            budget
                .terms
                .iter()
                .map(|t| {
                    json!({
                        "name": t.name,
                        "participation": t.participation,
                        "tan_delta": t.tan_delta,
                        "inv_q": t.inv_q,
                    })
                })
                .collect(),
        ),
    )
    .result("total_inv_q", budget.total_inv_q)
    .result("target_inv_q", budget.target_inv_q)
    .result("margin_inv_q", budget.margin_inv_q)
    .result("within_target", budget.within_target);
    if !budget.within_target {
        rb.warn(format!(
            "budget total {:.3e} exceeds the target 1/Q of {:.3e}",
            budget.total_inv_q, budget.target_inv_q
        ));
    }

    if let Some(text) = &args.geometry {
        let g = parse_geometry(text)?;
        rb.param("geometry_nm", text.as_str()).param("eps_r", args.eps_r);
        let c_barrier =
            parallel_plate_capacitance(g.barrier_area_nm2(), g.barrier_thickness_nm, args.eps_r)
                .map_err(|e| CliError::Usage(e.to_string()))?;
        let c_sidewall =
            parallel_plate_capacitance(g.sidewall_area_nm2(), g.sidewall_thickness_nm, args.eps_r)
                .map_err(|e| CliError::Usage(e.to_string()))?;
        rb.result(
            "geometry",
            json!({
                "barrier_sidewall_ratio": barrier_sidewall_ratio(&g),
                "barrier_capacitance_ff": c_barrier,
                "sidewall_capacitance_ff": c_sidewall,
                "eps_r": args.eps_r,
            }),
        );
    }

    match (args.c_j_ff, args.c_shunt_ff) {
        (Some(c_j), Some(c_s)) => {
            rb.param("c_j_ff", c_j).param("c_shunt_ff", c_s);
            let p_j = junction_participation(c_j, c_s)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            rb.result(
                "junction_participation",
                json!({
                    "p_j": p_j,
                    "tan_delta_bound": loss_tangent_bound(args.target_inv_q, p_j).ok(),
                }),
            );
        }
        (None, None) => {}
        _ => {
            return Err(CliError::Usage(
                "participation ratio needs both --c-j-ff and --c-shunt-ff".into(),
            ));
        }
    }

    if let Some(e_j) = args.e_j_ghz {
        rb.param("e_j_ghz", e_j);
        let l = josephson_inductance(e_j).map_err(|e| CliError::Usage(e.to_string()))?;
        rb.result("josephson_inductance_nh", l);
    }

    let z_c = match (args.z_c_ohm, args.l_eff_nh, args.c_eff_ff) {
        (Some(z), None, None) => {
            if !(z > 0.0 && z.is_finite()) {
                return Err(CliError::Usage(format!(
                    "--z-c-ohm must be positive, got {z}"
                )));
            }
            rb.param("z_c_ohm", z);
            Some(z)
        }
        (None, Some(l), Some(c)) => {
            rb.param("l_eff_nh", l).param("c_eff_ff", c);
            let z =
                characteristic_impedance(l, c).map_err(|e| CliError::Usage(e.to_string()))?;
            Some(z)
        }
        (None, None, None) => None,
        _ => {
            return Err(CliError::Usage(
                "characteristic impedance needs --z-c-ohm, or --l-eff-nh with --c-eff-ff".into(),
            ));
        }
    };
    if let Some(z) = z_c {
        rb.result("z_c_ohm", z);
    }

    if let Some(r) = args.r_subgap_mohm {
        rb.param("r_subgap_mohm", r);
        let Some(z) = z_c else {
            return Err(CliError::Usage(
                "the subgap Q ceiling needs a characteristic impedance: pass \
                 --z-c-ohm or --l-eff-nh/--c-eff-ff"
                    .into(),
            ));
        };
        let q = subgap_q_limit(r, z).map_err(|e| CliError::Usage(e.to_string()))?;
        rb.result(
            "subgap_q_limit",
            json!({
                "q_bound": q,
                "r_subgap_mohm": r,
                "z_c_ohm": z,
                "caveat": SUBGAP_QUASIPARTICLE_CAVEAT,
            }),
        );
    }

    write_csv(
        &ctx.out_dir,
        "loss-budget.terms.csv",
        "term,inv_q",
        budget
            .terms
            .iter()
            .map(|t| format!("{},{}", t.name, t.inv_q)),
    )?;
    emit(&rb.finish(), &ctx.out_dir, "loss-budget")?;
    Ok(0)
}
