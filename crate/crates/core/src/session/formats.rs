//! On-disk formats: gaze logs, layouts, ground truth, sweep recordings.
//!
//! A gaze log is UTF-8 text with a `#gazelog v1 hz=<rate>` header followed
//! by one `t_us,x_px,y_px,valid,eye` record per line. Numbers are written
//! with Rust's shortest round-trip formatting, so `emit(parse(f)) == f` for
//! any file this module produced. Everything else is JSON.

use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::types::{Eye, GazeSample, Micros};

pub const GAZELOG_MAGIC: &str = "#gazelog";
pub const GAZELOG_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unsupported gaze log format {0:?}")]
    UnsupportedVersion(String),
    #[error("missing `#gazelog v1 hz=<rate>` header")]
    MissingHeader,
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GazeLog {
    pub hz: f64,
    pub samples: Vec<GazeSample>,
}

fn malformed(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Malformed { line, message: message.into() }
}

fn parse_float(field: &str, name: &str, line: usize) -> Result<f64, FormatError> {
    let v: f64 = field.trim().parse().map_err(|_| malformed(line, format!("bad {name} {field:?}")))?;
    if !v.is_finite() {
        return Err(malformed(line, format!("{name} is not finite")));
    }
    Ok(v)
}

fn parse_header(header: &str) -> Result<f64, FormatError> {
    let mut parts = header.split_whitespace();
    if parts.next() != Some(GAZELOG_MAGIC) {
        return Err(FormatError::MissingHeader);
    }
    match parts.next() {
        Some(GAZELOG_VERSION) => {}
        Some(other) => return Err(FormatError::UnsupportedVersion(other.to_string())),
        None => return Err(FormatError::MissingHeader),
    }
    let hz = parts.next().and_then(|p| p.strip_prefix("hz=")).ok_or(FormatError::MissingHeader)?;
    let hz = parse_float(hz, "rate", 1)?;
    if hz <= 0.0 {
        return Err(malformed(1, "rate must be positive"));
    }
    Ok(hz)
}

/// Parses one record; `line` is 1-based and only used for errors.
pub fn parse_record(record: &str, line: usize) -> Result<GazeSample, FormatError> {
    let fields: Vec<&str> = record.split(',').collect();
    let [t, x, y, valid, eye] = fields.as_slice() else {
        return Err(malformed(line, format!("expected 5 fields, found {}", fields.len())));
    };
    let t: Micros = t.trim().parse().map_err(|_| malformed(line, format!("bad timestamp {t:?}")))?;
    let x = parse_float(x, "x", line)?;
    let y = parse_float(y, "y", line)?;
    let valid = match valid.trim() {
        "1" => true,
        "0" => false,
        other => return Err(malformed(line, format!("validity must be 0 or 1, found {other:?}"))),
    };
    let eye =
        Eye::from_code(eye.trim()).ok_or_else(|| malformed(line, format!("eye must be L, R or A, found {eye:?}")))?;
    Ok(GazeSample { t, x, y, valid, eye })
}

pub fn parse_gaze_log(text: &str) -> Result<GazeLog, FormatError> {
    let mut lines = text.lines();
    let hz = parse_header(lines.next().ok_or(FormatError::MissingHeader)?)?;
    let mut samples = Vec::new();
    for (i, l) in lines.enumerate() {
        if l.trim().is_empty() {
            continue;
        }
        samples.push(parse_record(l, i + 2)?);
    }
    Ok(GazeLog { hz, samples })
}

pub fn emit_record(s: &GazeSample, out: &mut String) {
    let _ = writeln!(out, "{},{},{},{},{}", s.t, s.x, s.y, u8::from(s.valid), s.eye.code());
}

pub fn emit_gaze_log(log: &GazeLog) -> String {
    let mut out = format!("{GAZELOG_MAGIC} {GAZELOG_VERSION} hz={}\n", log.hz);
    for s in &log.samples {
        emit_record(s, &mut out);
    }
    out
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    std::fs::write(path, text).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

/// Reads any JSON document (layout, ground truth, sweep recordings, configs).
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FormatError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| FormatError::Json { path: path.display().to_string(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|source| FormatError::Json { path: path.display().to_string(), source })?;
    text.push('\n');
    write_text(path, &text)
}
