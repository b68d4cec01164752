//! Run configuration: JSON file selected by `--config` or the
//! `JUNCTIONLAB_CONFIG` environment variable, overridden by flags.
//!
//! The file may pin the physical-constant block, the fit tolerances, the
//! default truncation, and the output directory. Constants and fit
//! tolerances are compile-time properties of the library; a config that
//! asks for different values is rejected rather than silently ignored.
//! Every effective value is echoed into each report so results are
//! self-describing.

use std::path::{Path, PathBuf};

use junctionlab::constants::{BOLTZMANN_KB, EPSILON_0_F_PER_M, E_CHARGE, PLANCK_H};
use junctionlab::fits::{GRADIENT_TOL, MAX_FIT_ITERATIONS, RESIDUAL_REL_TOL};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::errors::{CliError, CliResult};

/// Environment variable consulted when `--config` is absent.
pub const CONFIG_ENV_VAR: &str = "JUNCTIONLAB_CONFIG";

/// Relative mismatch tolerated between a config-supplied constant and
/// the pinned build value before the config is rejected.
const PIN_MATCH_REL: f64 = 1.0e-9;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    constants: Option<ConstantsBlock>,
    truncation: Option<TruncationBlock>,
    fit: Option<FitBlock>,
    output_dir: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantsBlock {
    #[serde(rename = "e_C")]
    e_c: Option<f64>,
    #[serde(rename = "h_Js")]
    h_js: Option<f64>,
    #[serde(rename = "k_B_J_per_K")]
    k_b: Option<f64>,
    #[serde(rename = "eps0_F_per_m")]
    eps0: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TruncationBlock {
    n_max: Option<usize>,
    convergence_tol_hz: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitBlock {
    max_iterations: Option<usize>,
    residual_rel_tol: Option<f64>,
    gradient_tol: Option<f64>,
}

/// Effective run configuration after file, environment, and defaults
/// are merged (flags override per command).
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Default per-node charge cutoff for spectrum commands.
    pub n_max: usize,
    /// Default truncation-convergence tolerance (Hz).
    pub convergence_tol_hz: f64,
    /// Directory reports and plot CSVs are written to.
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_max: 15,
            convergence_tol_hz: 1.0e3,
            output_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    /// Resolve the config: `--config` flag first, then the environment
    /// variable, then built-in defaults.
    pub fn load(flag_path: Option<&Path>) -> CliResult<Self> {
        let path = match flag_path {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from),
        };
        match path {
            Some(p) => Self::from_file(&p),
            None => Ok(Self::default()),
        }
    }

    fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        let file: FileConfig = serde_json::from_str(&text).map_err(|e| {
            CliError::Usage(format!("config {}: {e}", path.display()))
        })?;

        if let Some(c) = &file.constants {
            check_pinned(path, "constants.e_C", c.e_c, E_CHARGE)?;
            check_pinned(path, "constants.h_Js", c.h_js, PLANCK_H)?;
            check_pinned(path, "constants.k_B_J_per_K", c.k_b, BOLTZMANN_KB)?;
            check_pinned(path, "constants.eps0_F_per_m", c.eps0, EPSILON_0_F_PER_M)?;
        }
        if let Some(f) = &file.fit {
            if let Some(m) = f.max_iterations {
                if m != MAX_FIT_ITERATIONS {
                    return Err(pinned_error(path, "fit.max_iterations"));
                }
            }
            check_pinned(path, "fit.residual_rel_tol", f.residual_rel_tol, RESIDUAL_REL_TOL)?;
            check_pinned(path, "fit.gradient_tol", f.gradient_tol, GRADIENT_TOL)?;
        }

        let mut cfg = Self::default();
        if let Some(t) = &file.truncation {
            if let Some(n) = t.n_max {
                if n == 0 {
                    return Err(CliError::Usage(format!(
                        "config {}: truncation.n_max must be at least 1",
                        path.display()
                    )));
                }
                cfg.n_max = n;
            }
            if let Some(tol) = t.convergence_tol_hz {
                if !(tol > 0.0 && tol.is_finite()) {
                    return Err(CliError::Usage(format!(
                        "config {}: truncation.convergence_tol_hz must be positive, got {tol}",
                        path.display()
                    )));
                }
                cfg.convergence_tol_hz = tol;
            }
        }
        if let Some(dir) = file.output_dir {
            cfg.output_dir = PathBuf::from(dir);
        }
        Ok(cfg)
    }

    /// Effective values echoed into every report.
    pub fn echo(&self) -> Value {
        json!({
            "constants": {
                "e_C": E_CHARGE,
                "h_Js": PLANCK_H,
                "k_B_J_per_K": BOLTZMANN_KB,
                "eps0_F_per_m": EPSILON_0_F_PER_M,
            },
            "fit": {
                "max_iterations": MAX_FIT_ITERATIONS,
                "residual_rel_tol": RESIDUAL_REL_TOL,
                "gradient_tol": GRADIENT_TOL,
            },
            "truncation": {
                "n_max": self.n_max,
                "convergence_tol_hz": self.convergence_tol_hz,
            },
            "output_dir": self.output_dir.to_string_lossy(),
        })
    }
}

fn check_pinned(path: &Path, field: &str, given: Option<f64>, pinned: f64) -> CliResult<()> {
    let Some(v) = given else { return Ok(()) };
    if !(v > 0.0 && v.is_finite()) {
        return Err(CliError::Usage(format!(
            "config {}: {field} must be positive, got {v}",
            path.display()
        )));
    }
    if (v - pinned).abs() > PIN_MATCH_REL * pinned {
        return Err(pinned_error(path, field));
    }
    Ok(())
}

fn pinned_error(path: &Path, field: &str) -> CliError {
    CliError::Usage(format!(
        "config {}: {field} is pinned at build time and cannot be overridden; \
         remove the entry or set it to the built-in value",
        path.display()
    ))
}
