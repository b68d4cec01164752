//! Superconducting-junction device workbench.
//!
//! Four physics domains, one numerics layer:
//!
//! - [`circuit`] - charge-basis quantization of a double-junction qubit
//!   (two Josephson junctions in series with a small middle island) and of
//!   the standard single-junction transmon: energy spectra, transition
//!   frequencies, anharmonicity, charge dispersion, phase-space
//!   wavefunctions, and inversion from measured spectra back to circuit
//!   parameters.
//! - [`tunneling`] - BCS density of states with Dynes broadening,
//!   finite-temperature NIS/SIS tunnel-current integrals, numerical
//!   differential conductance, conductance-peak gap extraction over a
//!   temperature series, and subgap-leakage (R_subgap, Dynes gamma)
//!   estimates.
//! - [`fits`] - damped least-squares (Levenberg-Marquardt) engine with
//!   analytic Jacobians and the measurement models built on it:
//!   exponential decay (T1, echo), decaying cosine (Ramsey), and the
//!   resistance-area law R = RA/(d - l)^2 for wafer probe data.
//! - [`loss`] - parallel-plate and participation-ratio loss budgeting:
//!   junction participation, barrier/sidewall capacitance split, loss
//!   tangent bounds, and the subgap-resistance quality-factor ceiling.
//!
//! Shared infrastructure: [`constants`] (pinned CODATA-derived values),
//! [`linalg`] (dense and Lanczos symmetric eigensolvers), [`trace`]
//! (ordered sample series), and [`error`] (error taxonomy).
//!
//! All energies are stored as frequencies (E/h) in GHz unless a field says
//! otherwise; capacitances in fF, voltages in mV, currents in nA,
//! temperatures in K, times in microseconds.
//!
//! Every operation is a pure function of its inputs. All types are
//! immutable plain data, `Send + Sync`, and safe to share across threads;
//! sweeps over gate grids or temperature series are embarrassingly
//! parallel with deterministic reduction order.

// Validation sites use `!(x > 0.0)` so NaN lands on the rejecting arm.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod constants;
pub mod error;
pub mod fits;
pub mod linalg;
pub mod loss;
pub mod trace;
pub mod tunneling;

pub use error::{Error, Result};
