//! Report assembly and deterministic emission.
//!
//! One JSON document per command: command name, effective config, input
//! digest, parameters, results, warnings, tool version. Maps serialize
//! with sorted keys and floats in shortest round-trip form, and nothing
//! time-dependent is recorded, so identical inputs and config produce
//! byte-identical reports. Files land via write-to-temp plus rename so a
//! crash never leaves a half-written report behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::errors::{CliError, CliResult};

/// Accumulates one command's report.
pub struct ReportBuilder {
    command: &'static str,
    config: Value,
    input_digest: Option<String>,
    parameters: Map<String, Value>,
    results: Map<String, Value>,
    warnings: Vec<String>,
}

impl ReportBuilder {
    pub fn new(command: &'static str, config_echo: Value) -> Self {
        Self {
            command,
            config: config_echo,
            input_digest: None,
            parameters: Map::new(),
            results: Map::new(),
            warnings: Vec::new(),
        }
    }

    /// Record an invocation parameter (echoed verbatim).
    pub fn param(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    /// Record a result.
    pub fn result(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.results.insert(key.to_string(), value.into());
        self
    }

    pub fn warn(&mut self, message: impl Into<String>) -> &mut Self {
        self.warnings.push(message.into());
        self
    }

    pub fn warn_all<I: IntoIterator<Item = String>>(&mut self, messages: I) -> &mut Self {
        self.warnings.extend(messages);
        self
    }

    /// Digest the raw bytes of the input files, in argument order.
    pub fn digest_files(&mut self, paths: &[PathBuf]) -> CliResult<&mut Self> {
        let mut hasher = Sha256::new();
        for p in paths {
            let bytes = std::fs::read(p).map_err(|e| {
                CliError::Usage(format!("cannot read {}: {e}", p.display()))
            })?;
            hasher.update(&bytes);
        }
        self.input_digest = Some(format!("sha256:{:x}", hasher.finalize()));
        Ok(self)
    }

    /// Assemble the report. Commands without file inputs digest their
    /// parameter block instead, so the digest always pins what was run.
    pub fn finish(mut self) -> Value {
        let digest = self.input_digest.take().unwrap_or_else(|| {
            let canonical = Value::Object(self.parameters.clone()).to_string();
            format!("sha256:{:x}", Sha256::digest(canonical.as_bytes()))
        });
        let mut top = Map::new();
        top.insert("command".into(), self.command.into());
        top.insert("config".into(), self.config);
        top.insert("input_digest".into(), digest.into());
        top.insert("parameters".into(), Value::Object(self.parameters));
        top.insert("results".into(), Value::Object(self.results));
        top.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        top.insert("warnings".into(), self.warnings.into());
        Value::Object(top)
    }
}

/// Write bytes to `path` atomically: temp file in the same directory,
/// flushed, then renamed over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(d) = dir {
        std::fs::create_dir_all(d).map_err(|e| {
            CliError::Analysis(format!("cannot create {}: {e}", d.display()))
        })?;
    }
    let mut tmp = path.as_os_str().to_os_string();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let write = |p: &Path| -> std::io::Result<()> {
        let mut f = std::fs::File::create(p)?;
        f.write_all(bytes)?;
        f.sync_all()
    };
    write(&tmp)
        .and_then(|_| std::fs::rename(&tmp, path))
        .map_err(|e| CliError::Analysis(format!("cannot write {}: {e}", path.display())))
}

/// Serialize the report, write `<out_dir>/<command>.report.json`, and
/// echo the exact same bytes to stdout.
pub fn emit(report: &Value, out_dir: &Path, command: &str) -> CliResult<PathBuf> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Analysis(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    let path = out_dir.join(format!("{command}.report.json"));
    write_atomic(&path, text.as_bytes())?;
    print!("{text}");
    Ok(path)
}

/// Write a plot-data CSV: header line plus one formatted row per entry.
pub fn write_csv<I>(out_dir: &Path, filename: &str, header: &str, rows: I) -> CliResult<PathBuf>
where
    I: IntoIterator<Item = String>,
{
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    let path = out_dir.join(filename);
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

/// f64 list into a JSON array value (NaN would become null; callers
/// only pass finite numbers).
pub fn float_array(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|&v| v.into()).collect())
}
