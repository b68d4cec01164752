//! Error-to-exit-code policy of the workbench.
//!
//! Exit 0: command ran and its analysis succeeded. Exit 1: inputs were
//! well-formed but the analysis failed (solver error, fit that did not
//! converge). Exit 2: the invocation itself was wrong (bad flags,
//! malformed input file, broken config).

use std::fmt;

/// Failure modes of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or unparseable input; exits 2.
    Usage(String),
    /// Well-formed request whose analysis failed; exits 1.
    Analysis(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Analysis(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Analysis(m) => write!(f, "{m}"),
        }
    }
}

impl From<junctionlab::Error> for CliError {
    fn from(e: junctionlab::Error) -> Self {
        CliError::Analysis(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
