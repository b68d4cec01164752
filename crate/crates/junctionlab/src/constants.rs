//! Physical constants, pinned in one place.
//!
//! Exact SI defining constants (2019 redefinition):
//!   e   = 1.602176634e-19 C
//!   h   = 6.62607015e-34  J·s
//!   k_B = 1.380649e-23    J/K
//!
//! Everything else here is derived from these three at compile time, in
//! the mixed units the library works in (GHz, fF, mV, nA, K, nm, nH).

/// Elementary charge e (C). Exact.
pub const E_CHARGE: f64 = 1.602176634e-19;

/// Planck constant h (J·s). Exact.
pub const PLANCK_H: f64 = 6.62607015e-34;

/// Boltzmann constant k_B (J/K). Exact.
pub const BOLTZMANN_KB: f64 = 1.380649e-23;

/// Vacuum permittivity ε₀ (F/m). CODATA 2018.
pub const EPSILON_0_F_PER_M: f64 = 8.8541878128e-12;

/// e²/2h expressed in GHz·fF (≈ 19.3700).
///
/// Charging scale of a capacitance C: E_C/h = (e²/2h)/C gives GHz when C
/// is in fF. The factor-of-4 relation to the transmon literature is
/// documented once, on [`crate::circuit::build_charge_hamiltonian`].
pub const E2_OVER_2H_GHZ_FF: f64 = E_CHARGE * E_CHARGE / (2.0 * PLANCK_H) * 1.0e6;

/// k_B in meV/K (≈ 0.0861733). Thermal energy scale for tunneling integrals.
pub const KB_MEV_PER_K: f64 = BOLTZMANN_KB / E_CHARGE * 1.0e3;

/// Josephson inductance scale in nH·GHz (≈ 163.46).
///
/// L_J = (Φ₀/2π)²/E_J = h/(16π²e²·f_J); with E_J/h in GHz this constant
/// divided by E_J gives L_J in nH.
pub const LJ_NH_GHZ: f64 =
    PLANCK_H / (16.0 * core::f64::consts::PI * core::f64::consts::PI * E_CHARGE * E_CHARGE)
        / 1.0e9
        * 1.0e9;

/// ε₀ in fF/nm (≈ 8.854e-6). Parallel-plate C[fF] = ε₀·ε_r·A[nm²]/d[nm].
pub const EPSILON_0_FF_PER_NM: f64 = EPSILON_0_F_PER_M * 1.0e15 / 1.0e9;
