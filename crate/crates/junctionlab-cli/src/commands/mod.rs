//! One module per command family; each command builds a report, writes
//! its plot CSVs, and returns the process exit code.

use std::path::PathBuf;

use crate::config::RunConfig;

pub mod budget;
pub mod fitcmd;
pub mod iv;
pub mod spectrum;

/// Shared per-invocation state: effective config and output directory.
pub struct Ctx {
    pub config: RunConfig,
    pub out_dir: PathBuf,
}

/// Evenly spaced closed interval with `n ≥ 2` points.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}
