//! CSV ingestion with exact schemas and line-referenced errors.
//!
//! Headers are fixed and unit-suffixed so a file can never be read in
//! the wrong unit silently:
//!   IV trace   `voltage_mV,current_nA[,temperature_K]`
//!   dI/dV      `voltage_mV,conductance_per_kohm`
//!   decay      `delay_us,population`
//!   prober map `die_x,die_y,d_nm,resistance_ohm`
//!   freq map   `d_nm,f_ge_GHz`
//! Out-of-order trace rows are sorted with a warning; a duplicated
//! abscissa is a hard error naming both lines.

use std::path::Path;

use junctionlab::fits::WaferResistancePoint;
use junctionlab::trace::{SampledTrace, XUnit, YUnit};

use crate::errors::{CliError, CliResult};

pub const IV_HEADER: &str = "voltage_mV,current_nA";
pub const IV_HEADER_WITH_T: &str = "voltage_mV,current_nA,temperature_K";
pub const DIDV_HEADER: &str = "voltage_mV,conductance_per_kohm";
pub const DECAY_HEADER: &str = "delay_us,population";
pub const PROBER_HEADER: &str = "die_x,die_y,d_nm,resistance_ohm";
pub const FREQ_HEADER: &str = "d_nm,f_ge_GHz";

/// A parsed trace plus any normalization notices raised while loading.
pub struct LoadedTrace {
    pub trace: SampledTrace,
    pub warnings: Vec<String>,
}

/// Raw numeric rows with their source line numbers.
struct RawRows {
    columns: Vec<String>,
    rows: Vec<(u64, Vec<f64>)>,
}

fn usage(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{}: {msg}", path.display()))
}

/// Read and validate a numeric CSV whose header must match one of
/// `accepted` exactly (comma-joined column names).
fn read_numeric_csv(path: &Path, accepted: &[&str]) -> CliResult<RawRows> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)
        .map_err(|e| usage(path, format!("cannot open: {e}")))?;

    let headers = reader
        .headers()
        .map_err(|e| usage(path, format!("line 1: {e}")))?;
    let mut columns: Vec<String> = headers.iter().map(str::to_string).collect();
    // A UTF-8 BOM would otherwise hide inside the first column name.
    if let Some(first) = columns.first_mut() {
        *first = first.trim_start_matches('\u{feff}').to_string();
    }
    let header_line = columns.join(",");
    if !accepted.contains(&header_line.as_str()) {
        return Err(usage(
            path,
            format!(
                "line 1: header `{header_line}` does not match the expected \
                 schema `{}`",
                accepted.join("` or `")
            ),
        ));
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| usage(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let mut values = Vec::with_capacity(columns.len());
        for (name, field) in columns.iter().zip(record.iter()) {
            let v: f64 = field.parse().map_err(|_| {
                usage(
                    path,
                    format!("line {line}: column `{name}`: cannot parse `{field}` as a number"),
                )
            })?;
            if !v.is_finite() {
                return Err(usage(
                    path,
                    format!("line {line}: column `{name}`: non-finite value `{field}`"),
                ));
            }
            values.push(v);
        }
        rows.push((line, values));
    }
    if rows.is_empty() {
        return Err(usage(path, "no data rows"));
    }
    Ok(RawRows { columns, rows })
}

/// Sort trace rows by the abscissa when needed (warning), reject
/// duplicate abscissas (error naming both source lines).
fn normalize_order(
    path: &Path,
    raw: &mut RawRows,
    warnings: &mut Vec<String>,
) -> CliResult<()> {
    let x_name = raw.columns[0].clone();
    let sorted = raw.rows.windows(2).all(|w| w[0].1[0] <= w[1].1[0]);
    if !sorted {
        raw.rows.sort_by(|a, b| a.1[0].total_cmp(&b.1[0]));
        warnings.push(format!(
            "{}: rows were not ordered by {x_name}; sorted",
            path.display()
        ));
    }
    if let Some(w) = raw.rows.windows(2).find(|w| w[0].1[0] == w[1].1[0]) {
        return Err(usage(
            path,
            format!(
                "lines {} and {}: duplicate {x_name} value {}",
                w[0].0, w[1].0, w[0].1[0]
            ),
        ));
    }
    Ok(())
}

fn build_trace(
    path: &Path,
    raw: &RawRows,
    x_unit: XUnit,
    y_unit: YUnit,
) -> CliResult<SampledTrace> {
    if raw.rows.len() < 4 {
        return Err(usage(
            path,
            format!("only {} data rows; need at least 4", raw.rows.len()),
        ));
    }
    let x: Vec<f64> = raw.rows.iter().map(|(_, v)| v[0]).collect();
    let y: Vec<f64> = raw.rows.iter().map(|(_, v)| v[1]).collect();
    SampledTrace::new(x, y, x_unit, y_unit).map_err(|e| usage(path, e))
}

/// Load an IV trace; a `temperature_K` column must be constant and is
/// attached to the trace.
pub fn load_iv_csv(path: &Path) -> CliResult<LoadedTrace> {
    let mut raw = read_numeric_csv(path, &[IV_HEADER, IV_HEADER_WITH_T])?;
    let mut warnings = Vec::new();
    normalize_order(path, &mut raw, &mut warnings)?;
    let mut trace = build_trace(path, &raw, XUnit::Millivolts, YUnit::Nanoamps)?;
    if raw.columns.len() == 3 {
        let t0 = raw.rows[0].1[2];
        if let Some((line, v)) = raw
            .rows
            .iter()
            .find(|(_, v)| v[2] != t0)
            .map(|(l, v)| (*l, v[2]))
        {
            return Err(usage(
                path,
                format!(
                    "line {line}: temperature_K changes from {t0} to {v}; one file \
                     holds one temperature"
                ),
            ));
        }
        trace = trace.with_temperature(t0).map_err(|e| usage(path, e))?;
    }
    Ok(LoadedTrace { trace, warnings })
}

/// Load a differential-conductance trace (no temperature column; tag it
/// via flag where needed).
pub fn load_didv_csv(path: &Path) -> CliResult<LoadedTrace> {
    let mut raw = read_numeric_csv(path, &[DIDV_HEADER])?;
    let mut warnings = Vec::new();
    normalize_order(path, &mut raw, &mut warnings)?;
    let trace = build_trace(path, &raw, XUnit::Millivolts, YUnit::InverseKiloohms)?;
    Ok(LoadedTrace { trace, warnings })
}

/// Load a coherence-decay trace.
pub fn load_decay_csv(path: &Path) -> CliResult<LoadedTrace> {
    let mut raw = read_numeric_csv(path, &[DECAY_HEADER])?;
    let mut warnings = Vec::new();
    normalize_order(path, &mut raw, &mut warnings)?;
    let trace = build_trace(path, &raw, XUnit::Microseconds, YUnit::Population)?;
    Ok(LoadedTrace { trace, warnings })
}

/// Load a wafer prober map. Die coordinates must be integers; points
/// keep file order (the fit is order-independent).
pub fn load_prober_csv(path: &Path) -> CliResult<Vec<WaferResistancePoint>> {
    let raw = read_numeric_csv(path, &[PROBER_HEADER])?;
    let mut points = Vec::with_capacity(raw.rows.len());
    for (line, v) in &raw.rows {
        let as_die = |name: &str, val: f64| -> CliResult<i32> {
            if val.fract() != 0.0 || val.abs() > i32::MAX as f64 {
                return Err(usage(
                    path,
                    format!("line {line}: column `{name}` must be an integer, got {val}"),
                ));
            }
            Ok(val as i32)
        };
        let die_x = as_die("die_x", v[0])?;
        let die_y = as_die("die_y", v[1])?;
        let point = WaferResistancePoint::new(v[2], v[3])
            .map_err(|e| usage(path, format!("line {line}: {e}")))?
            .with_die(die_x, die_y);
        points.push(point);
    }
    Ok(points)
}

/// Load a qubit-frequency versus junction-size map, in file order.
pub fn load_freq_csv(path: &Path) -> CliResult<Vec<(f64, f64)>> {
    let raw = read_numeric_csv(path, &[FREQ_HEADER])?;
    Ok(raw.rows.iter().map(|(_, v)| (v[0], v[1])).collect())
}

/// Which trace schema a file's header announces; used where a command
/// accepts either IV or conductance input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Iv,
    Didv,
}

/// Decide the schema from the header line alone.
pub fn sniff_trace_kind(path: &Path) -> CliResult<TraceKind> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(path, format!("cannot open: {e}")))?;
    let first = text.lines().next().unwrap_or("");
    let cleaned: String = first
        .trim_start_matches('\u{feff}')
        .split(',')
        .map(str::trim)
        .collect::<Vec<_>>()
        .join(",");
    match cleaned.as_str() {
        IV_HEADER | IV_HEADER_WITH_T => Ok(TraceKind::Iv),
        DIDV_HEADER => Ok(TraceKind::Didv),
        other => Err(usage(
            path,
            format!(
                "line 1: header `{other}` is neither an IV trace \
                 (`{IV_HEADER}[,temperature_K]`) nor a conductance trace \
                 (`{DIDV_HEADER}`)"
            ),
        )),
    }
}
