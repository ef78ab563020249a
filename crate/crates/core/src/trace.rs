//! Trace and schedule serialization.
//!
//! CSV: fixed header, empty field for an absent distance, floats with nine
//! significant digits (`%.9g` style), `\n` line endings.
//! JSON: one object per line with keys in column order; absent distance is
//! `null`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::engine::BlockTrace;
use crate::error::{Error, Result};
use crate::window::PhaseState;

pub const TRACE_COLUMNS: [&str; 10] = [
    "block_index",
    "first_frame",
    "segment_index",
    "age",
    "distance",
    "window",
    "read_budget",
    "bridge_norm",
    "switch_flag",
    "anchors_count",
];

pub const SCHEDULE_COLUMNS: [&str; 8] = ["t", "segment", "age", "distance", "w_post", "w_pre", "w", "window"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Json,
}

impl FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::config("format", format!("expected csv or json, got `{other}`"))),
        }
    }
}

/// Formats `x` with nine significant digits, like C's `%.9g`.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (8 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(d: Option<usize>) -> String {
    d.map(|d| d.to_string()).unwrap_or_default()
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Serialize(format!("{other:?}")),
    }
}

pub fn write_trace_csv<W: Write>(traces: &[BlockTrace], out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(TRACE_COLUMNS).map_err(csv_err)?;
    for t in traces {
        w.write_record([
            t.block_index.to_string(),
            t.first_frame.to_string(),
            t.segment_index.to_string(),
            t.age.to_string(),
            opt(t.distance),
            t.window.to_string(),
            t.read_budget.to_string(),
            format_sig9(t.bridge_norm),
            t.switch_flag.to_string(),
            t.anchors_count.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json_lines<W: Write, T: Serialize>(rows: &[T], mut out: W) -> Result<()> {
    for row in rows {
        serde_json::to_writer(&mut out, row).map_err(|e| Error::Serialize(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_trace_json<W: Write>(traces: &[BlockTrace], out: W) -> Result<()> {
    write_json_lines(traces, out)
}

pub fn write_trace<W: Write>(traces: &[BlockTrace], format: TraceFormat, out: W) -> Result<()> {
    match format {
        TraceFormat::Csv => write_trace_csv(traces, out),
        TraceFormat::Json => write_trace_json(traces, out),
    }
}

pub fn write_trace_file(traces: &[BlockTrace], format: TraceFormat, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    write_trace(traces, format, BufWriter::new(file))
}

pub fn trace_to_string(traces: &[BlockTrace], format: TraceFormat) -> Result<String> {
    let mut buf = Vec::new();
    write_trace(traces, format, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Serialize(e.to_string()))
}

pub fn write_schedule_csv<W: Write>(rows: &[PhaseState], out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(SCHEDULE_COLUMNS).map_err(csv_err)?;
    for p in rows {
        w.write_record([
            p.t.to_string(),
            p.segment_index.to_string(),
            p.age.to_string(),
            opt(p.distance),
            format_sig9(p.w_post),
            format_sig9(p.w_pre),
            format_sig9(p.w),
            p.window.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_schedule_json<W: Write>(rows: &[PhaseState], out: W) -> Result<()> {
    write_json_lines(rows, out)
}
