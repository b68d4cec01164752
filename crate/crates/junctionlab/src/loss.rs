//! Dielectric loss budgeting for junction-based qubits.
//!
//! A lossy region removes energy at a rate set by the product of its
//! participation ratio p (fraction of electric-field energy it stores) and
//! its loss tangent tanδ. Each such product adds a term to 1/Q, so a budget
//! is a sum of p·tanδ terms compared against a target inverse quality
//! factor. This module provides the capacitance estimates feeding the
//! participation ratios (parallel-plate approximations of the barrier and
//! sidewall oxides), the budget arithmetic, and two derived figures: the
//! qubit's characteristic impedance Z_c = √(L_J/C) and the quality-factor
//! ceiling R_subgap/Z_c imposed by residual subgap conductance.

use crate::constants::{EPSILON_0_FF_PER_NM, LJ_NH_GHZ};
use crate::error::{Error, Result};

/// Default relative permittivity for thin-film AlOx barriers.
///
/// Used when no measured specific capacitance is available. Capacitance
/// ratios and loss-tangent bounds in this module are independent of it;
/// only absolute capacitance values move with an override.
pub const DEFAULT_BARRIER_EPS_R: f64 = 9.8;

/// Slack allowed on Σ participation before a budget is rejected as
/// double-counting energy (accommodates rounding in tabulated ratios).
pub const PARTICIPATION_SUM_SLACK: f64 = 1.0e-6;

/// Scope note attached to every subgap Q ceiling.
///
/// The R_subgap/Z_c ceiling assumes quasiparticle states exist at the qubit
/// energy. A qubit whose frequency lies below the gap edge of both
/// electrodes leaves electrons nothing to tunnel into, and the ceiling does
/// not apply.
pub const SUBGAP_QUASIPARTICLE_CAVEAT: &str = "bound assumes quasiparticle \
     states at the qubit energy; a qubit below both gap edges leaves \
     electrons nothing to tunnel into and is not limited by it";

/// One lossy region: a participation ratio paired with a loss tangent.
#[derive(Debug, Clone, PartialEq)]
pub struct LossContribution {
    /// Region label (carried into budget reports).
    pub name: String,
    /// Fraction of electric-field energy stored in the region, in [0, 1].
    pub participation: f64,
    /// Loss tangent of the region's dielectric, ≥ 0.
    pub tan_delta: f64,
}

impl LossContribution {
    /// Validated contribution: participation in [0, 1], loss tangent ≥ 0.
    pub fn new(name: impl Into<String>, participation: f64, tan_delta: f64) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::Parameter(
                "loss contribution needs a non-empty name".into(),
            ));
        }
        if !(0.0..=1.0).contains(&participation) {
            return Err(Error::Parameter(format!(
                "participation must lie in [0, 1], got {participation}"
            )));
        }
        if !(tan_delta >= 0.0 && tan_delta.is_finite()) {
            return Err(Error::Parameter(format!(
                "loss tangent must be finite and non-negative, got {tan_delta}"
            )));
        }
        Ok(Self {
            name,
            participation,
            tan_delta,
        })
    }

    /// This region's term in the 1/Q sum.
    pub fn inv_q(&self) -> f64 {
        self.participation * self.tan_delta
    }
}

/// Overlap-junction geometry for parallel-plate capacitance estimates.
///
/// The tunnel barrier is the plate pair lateral² / barrier_thickness. The
/// passivated sidewall is the pair formed where the counter-electrode
/// crosses the two exposed side faces of the base electrode:
/// 2·lateral·electrode_thickness / sidewall_thickness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionGeometry {
    /// Junction side length (nm).
    pub lateral_nm: f64,
    /// Tunnel-barrier oxide thickness (nm).
    pub barrier_thickness_nm: f64,
    /// Sidewall passivation oxide thickness (nm).
    pub sidewall_thickness_nm: f64,
    /// Base-electrode film thickness (nm).
    pub electrode_thickness_nm: f64,
}

impl JunctionGeometry {
    /// Validated geometry: every length strictly positive.
    pub fn new(
        lateral_nm: f64,
        barrier_thickness_nm: f64,
        sidewall_thickness_nm: f64,
        electrode_thickness_nm: f64,
    ) -> Result<Self> {
        for (label, v) in [
            ("lateral size", lateral_nm),
            ("barrier thickness", barrier_thickness_nm),
            ("sidewall thickness", sidewall_thickness_nm),
            ("electrode thickness", electrode_thickness_nm),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!(
                    "{label} must be positive, got {v} nm"
                )));
            }
        }
        Ok(Self {
            lateral_nm,
            barrier_thickness_nm,
            sidewall_thickness_nm,
            electrode_thickness_nm,
        })
    }

    /// Plate area of the tunnel barrier (nm²).
    pub fn barrier_area_nm2(&self) -> f64 {
        self.lateral_nm * self.lateral_nm
    }

    /// Plate area of the sidewall passivation (nm²): two side faces of the
    /// base electrode under the counter-electrode crossing.
    pub fn sidewall_area_nm2(&self) -> f64 {
        2.0 * self.lateral_nm * self.electrode_thickness_nm
    }
}

/// Parallel-plate capacitance ε₀·ε_r·A/d in fF (A in nm², d in nm).
pub fn parallel_plate_capacitance(area_nm2: f64, thickness_nm: f64, eps_r: f64) -> Result<f64> {
    for (label, v) in [
        ("area", area_nm2),
        ("thickness", thickness_nm),
        ("eps_r", eps_r),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Parameter(format!(
                "{label} must be positive, got {v}"
            )));
        }
    }
    Ok(EPSILON_0_FF_PER_NM * eps_r * area_nm2 / thickness_nm)
}

/// Capacitance ratio of tunnel barrier to sidewall passivation.
///
/// Both plates share the barrier oxide's permittivity, so ε_r cancels and
/// the ratio is pure geometry: (A_b/d_b)/(A_s/d_s). Scaling the lateral
/// size and electrode thickness together leaves it unchanged.
pub fn barrier_sidewall_ratio(g: &JunctionGeometry) -> f64 {
    (g.barrier_area_nm2() / g.barrier_thickness_nm)
        / (g.sidewall_area_nm2() / g.sidewall_thickness_nm)
}

/// Junction participation ratio p_J = C_J/(2·C_S).
///
/// The two junction capacitances sit in series across the shunt, so half
/// the junction charging energy participates per junction; C_J = 0 is
/// allowed and gives p_J = 0.
pub fn junction_participation(c_j_ff: f64, c_shunt_ff: f64) -> Result<f64> {
    if !(c_j_ff >= 0.0 && c_j_ff.is_finite()) {
        return Err(Error::Parameter(format!(
            "junction capacitance must be non-negative, got {c_j_ff} fF"
        )));
    }
    if !(c_shunt_ff > 0.0 && c_shunt_ff.is_finite()) {
        return Err(Error::Parameter(format!(
            "shunt capacitance must be positive, got {c_shunt_ff} fF"
        )));
    }
    Ok(c_j_ff / (2.0 * c_shunt_ff))
}

/// Largest loss tangent a region may carry before its p·tanδ term alone
/// exhausts an inverse-Q budget.
pub fn loss_tangent_bound(inv_q_budget: f64, participation: f64) -> Result<f64> {
    if !(inv_q_budget > 0.0 && inv_q_budget.is_finite()) {
        return Err(Error::Parameter(format!(
            "1/Q budget must be positive, got {inv_q_budget}"
        )));
    }
    if !(participation > 0.0 && participation <= 1.0) {
        return Err(Error::Parameter(format!(
            "participation must lie in (0, 1], got {participation}"
        )));
    }
    Ok(inv_q_budget / participation)
}

/// One row of a [`LossBudgetReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetTerm {
    /// Region label.
    pub name: String,
    /// Participation ratio.
    pub participation: f64,
    /// Loss tangent.
    pub tan_delta: f64,
    /// p·tanδ term in the 1/Q sum.
    pub inv_q: f64,
}

/// Sum of p·tanδ terms compared against a target inverse quality factor.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBudgetReport {
    /// Per-region terms, in input order.
    pub terms: Vec<BudgetTerm>,
    /// Σ p·tanδ over all regions.
    pub total_inv_q: f64,
    /// Target the total is judged against.
    pub target_inv_q: f64,
    /// target − total; positive means headroom remains.
    pub margin_inv_q: f64,
    /// Whether the total stays at or under the target.
    pub within_target: bool,
}

/// Build a loss budget: per-term p·tanδ, their total, and the margin
/// against `target_inv_q`.
///
/// Rejects an empty list and budgets whose participations sum past
/// 1 + [`PARTICIPATION_SUM_SLACK`] (regions would double-count energy).
pub fn loss_budget(
    contributions: &[LossContribution],
    target_inv_q: f64,
) -> Result<LossBudgetReport> {
    if contributions.is_empty() {
        return Err(Error::Arity("loss budget needs at least one term".into()));
    }
    if !(target_inv_q > 0.0 && target_inv_q.is_finite()) {
        return Err(Error::Parameter(format!(
            "target 1/Q must be positive, got {target_inv_q}"
        )));
    }
    let p_sum = sorted_sum(contributions.iter().map(|c| c.participation));
    if p_sum > 1.0 + PARTICIPATION_SUM_SLACK {
        return Err(Error::InconsistentInputs(format!(
            "participations sum to {p_sum}, exceeding unity"
        )));
    }
    let terms: Vec<BudgetTerm> = contributions
        .iter()
        .map(|c| BudgetTerm {
            name: c.name.clone(),
            participation: c.participation,
            tan_delta: c.tan_delta,
            inv_q: c.inv_q(),
        })
        .collect();
    // Summed in sorted order so the total is independent of input order.
    let total_inv_q = sorted_sum(terms.iter().map(|t| t.inv_q));
    Ok(LossBudgetReport {
        terms,
        total_inv_q,
        target_inv_q,
        margin_inv_q: target_inv_q - total_inv_q,
        within_target: total_inv_q <= target_inv_q,
    })
}

fn sorted_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

/// Josephson inductance L_J = (Φ₀/2π)²/E_J in nH, for E_J/h in GHz.
pub fn josephson_inductance(e_j_ghz: f64) -> Result<f64> {
    if !(e_j_ghz > 0.0 && e_j_ghz.is_finite()) {
        return Err(Error::Parameter(format!(
            "Josephson energy must be positive, got {e_j_ghz} GHz"
        )));
    }
    Ok(LJ_NH_GHZ / e_j_ghz)
}

/// Characteristic impedance Z_c = √(L/C) in Ω (L in nH, C in fF).
pub fn characteristic_impedance(l_eff_nh: f64, c_eff_ff: f64) -> Result<f64> {
    if !(l_eff_nh > 0.0 && l_eff_nh.is_finite()) {
        return Err(Error::Parameter(format!(
            "inductance must be positive, got {l_eff_nh} nH"
        )));
    }
    if !(c_eff_ff > 0.0 && c_eff_ff.is_finite()) {
        return Err(Error::Parameter(format!(
            "capacitance must be positive, got {c_eff_ff} fF"
        )));
    }
    // √(nH/fF) = √(1e-9/1e-15) Ω = 1e3 Ω.
    Ok(1.0e3 * (l_eff_nh / c_eff_ff).sqrt())
}

/// Quality-factor ceiling R_subgap/Z_c from residual subgap conductance.
///
/// A finite subgap resistance shunts the qubit and caps Q at R/Z_c. See
/// [`SUBGAP_QUASIPARTICLE_CAVEAT`] for when the ceiling does not bind;
/// report emitters should carry that note alongside the number.
pub fn subgap_q_limit(r_subgap_mohm: f64, z_c_ohm: f64) -> Result<f64> {
    if !(r_subgap_mohm > 0.0) || r_subgap_mohm.is_nan() {
        return Err(Error::Parameter(format!(
            "subgap resistance must be positive, got {r_subgap_mohm} MΩ"
        )));
    }
    if !(z_c_ohm > 0.0 && z_c_ohm.is_finite()) {
        return Err(Error::Parameter(format!(
            "characteristic impedance must be positive, got {z_c_ohm} Ω"
        )));
    }
    Ok(r_subgap_mohm * 1.0e6 / z_c_ohm)
}
