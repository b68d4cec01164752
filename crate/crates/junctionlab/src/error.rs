//! Error taxonomy shared by all modules.
//!
//! Every variant carries a human-readable description with the offending
//! values; callers branch on the variant, humans read the message.

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Physically invalid input (non-positive capacitance, negative gap, ...).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Malformed sample data (unsorted abscissa, length mismatch, too short).
    #[error("invalid data: {0}")]
    Data(String),

    /// A numerical routine failed to converge or lost precision
    /// (eigensolver iteration cap, quadrature refinement cap).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Result still changing under basis-truncation growth.
    #[error("truncation not converged: {0}")]
    Convergence(String),

    /// Too few levels or samples for the requested quantity.
    #[error("arity: {0}")]
    Arity(String),

    /// Requested grid too coarse to represent the result.
    #[error("resolution: {0}")]
    Resolution(String),

    /// Spectrum-to-parameters root-find failed or left the trusted regime.
    #[error("inversion failed: {0}")]
    Inversion(String),

    /// Inputs outside the regime the operation is valid in.
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    /// Inputs that are individually valid but mutually contradictory.
    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),

    /// Model cannot be distinguished from a simpler one on this data
    /// (singular Jacobian, zero-amplitude signal).
    #[error("degenerate model: {0}")]
    DegenerateModel(String),
}
