//! Trace files: CSV (fixed header, 17 significant digits) or JSON lines,
//! plus a small metadata sidecar.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnostics::TraceRow;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "iter,norm_v,norm_vx,norm_vy,mvi_total,mvi_x,mvi_y,avg_sq_norm,residual,dist_to_ref";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceFormat {
    #[default]
    Csv,
    Jsonl,
}

impl TraceFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TraceFormat::Csv => "csv",
            TraceFormat::Jsonl => "jsonl",
        }
    }
}

impl FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TraceFormat::Csv),
            "jsonl" => Ok(TraceFormat::Jsonl),
            other => Err(Error::InvalidArgument(format!(
                "unknown trace format `{other}`, expected csv or jsonl"
            ))),
        }
    }
}

/// Sidecar written next to every trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

impl TraceMeta {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Self {
            config_hash: config_hash.into(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

pub fn encode_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(32 + rows.len() * 230);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{}", r.iter);
        for v in [
            r.norm_v,
            r.norm_vx,
            r.norm_vy,
            r.mvi_total,
            r.mvi_x,
            r.mvi_y,
            r.avg_sq_norm,
            r.residual,
            r.dist_to_ref,
        ] {
            let _ = write!(out, ",{v:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn encode_jsonl(rows: &[TraceRow]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).expect("trace rows serialize"));
        out.push('\n');
    }
    out
}

pub fn decode_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(Error::InvalidArgument(format!(
                "unexpected CSV header {other:?}"
            )))
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let bad = || Error::InvalidArgument(format!("malformed CSV row {}: {line}", i + 2));
            let mut cells = line.split(',');
            let iter: u64 = cells.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let vals: Vec<f64> = cells
                .map(|c| c.parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            let [norm_v, norm_vx, norm_vy, mvi_total, mvi_x, mvi_y, avg_sq_norm, residual, dist_to_ref] =
                vals[..]
            else {
                return Err(bad());
            };
            Ok(TraceRow {
                iter,
                norm_v,
                norm_vx,
                norm_vy,
                mvi_total,
                mvi_x,
                mvi_y,
                avg_sq_norm,
                residual,
                dist_to_ref,
            })
        })
        .collect()
}

pub fn decode_jsonl(text: &str) -> Result<Vec<TraceRow>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l)
                .map_err(|e| Error::InvalidArgument(format!("malformed JSONL row: {e}")))
        })
        .collect()
}

/// Writes `rows` to `path` and `meta` to `<path>.meta.json`.
pub fn write_trace(rows: &[TraceRow], path: &Path, format: TraceFormat, meta: &TraceMeta) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("refusing to write an empty trace".into()));
    }
    let body = match format {
        TraceFormat::Csv => encode_csv(rows),
        TraceFormat::Jsonl => encode_jsonl(rows),
    };
    fs::write(path, body).map_err(|e| Error::io(path, e))?;
    let meta_path = meta_path(path);
    let meta = serde_json::to_string_pretty(meta).expect("metadata serializes");
    fs::write(&meta_path, meta).map_err(|e| Error::io(meta_path, e))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => decode_jsonl(&text),
        _ => decode_csv(&text),
    }
}

pub fn meta_path(trace: &Path) -> PathBuf {
    let mut name = trace.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    trace.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(i: u64, x: f64) -> TraceRow {
        TraceRow {
            iter: i,
            norm_v: x,
            norm_vx: x / 3.0,
            norm_vy: -x * 1e-300,
            mvi_total: 0.1 + x,
            mvi_x: f64::MIN_POSITIVE,
            mvi_y: -0.0,
            avg_sq_norm: x * x,
            residual: 1e300,
            dist_to_ref: std::f64::consts::PI,
        }
    }

    #[test]
    fn one_row_is_two_lines() {
        let text = encode_csv(&[row(0, 1.0)]);
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next(), Some(CSV_HEADER));
    }

    #[test]
    fn files_roundtrip_and_meta_is_written() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<_> = (0..5).map(|i| row(i, 0.7 * i as f64 + 1.0 / 3.0)).collect();
        let meta = TraceMeta::new("abc", 4);
        for fmt in [TraceFormat::Csv, TraceFormat::Jsonl] {
            let path = dir.path().join(format!("t.{}", fmt.extension()));
            write_trace(&rows, &path, fmt, &meta).unwrap();
            assert_eq!(read_trace(&path).unwrap(), rows);
            let m: TraceMeta =
                serde_json::from_str(&fs::read_to_string(meta_path(&path)).unwrap()).unwrap();
            assert_eq!(m, meta);
        }
        let empty = dir.path().join("empty.csv");
        assert!(write_trace(&[], &empty, TraceFormat::Csv, &meta).is_err());
        assert!(!empty.exists());
    }

    #[test]
    fn decode_rejects_garbage() {
        assert!(decode_csv("iter,norm_v\n1,2\n").is_err());
        assert!(decode_csv(&format!("{CSV_HEADER}\n1,2,3\n")).is_err());
        assert!(decode_jsonl("{\"iter\": 1}\n").is_err());
        assert!("xml".parse::<TraceFormat>().is_err());
    }

    proptest! {
        #[test]
        fn csv_and_jsonl_roundtrip_bitwise(
            vals in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::ZERO | proptest::num::f64::SUBNORMAL, 9),
            iter in 0u64..1_000_000,
        ) {
            let r = TraceRow {
                iter,
                norm_v: vals[0],
                norm_vx: vals[1],
                norm_vy: vals[2],
                mvi_total: vals[3],
                mvi_x: vals[4],
                mvi_y: vals[5],
                avg_sq_norm: vals[6],
                residual: vals[7],
                dist_to_ref: vals[8],
            };
            let from_csv = decode_csv(&encode_csv(&[r])).unwrap();
            let from_jsonl = decode_jsonl(&encode_jsonl(&[r])).unwrap();
            let bits = |t: &TraceRow| [t.norm_v, t.norm_vx, t.norm_vy, t.mvi_total, t.mvi_x, t.mvi_y,
                t.avg_sq_norm, t.residual, t.dist_to_ref].map(f64::to_bits);
            prop_assert_eq!(bits(&from_csv[0]), bits(&r));
            prop_assert_eq!(bits(&from_jsonl[0]), bits(&r));
            prop_assert_eq!(from_csv[0].iter, iter);
        }
    }
}
