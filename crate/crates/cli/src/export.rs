//! Result export: CSV and JSON with round-trip-exact float formatting.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

use crate::runner::{ResultFrame, ResultRow};

/// Output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => anyhow::bail!("unknown format '{other}' (expected csv or json)"),
        }
    }
}

/// 17 significant digits: enough to reproduce any f64 bit-exactly.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Writes the frame as CSV with header `xi,fx_true,fy_true,est_mean,est_sd`.
pub fn write_csv<W: Write>(frame: &ResultFrame, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["xi", "fx_true", "fy_true", "est_mean", "est_sd"])?;
    for row in &frame.rows {
        w.write_record([
            fmt_float(row.xi),
            fmt_opt(row.fx_true),
            fmt_opt(row.fy_true),
            fmt_float(row.est_mean),
            fmt_float(row.est_sd),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a frame back from CSV (round-trip companion of [`write_csv`]).
pub fn read_csv<R: std::io::Read>(input: R) -> Result<ResultFrame> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    anyhow::ensure!(
        headers.iter().collect::<Vec<_>>() == ["xi", "fx_true", "fy_true", "est_mean", "est_sd"],
        "unexpected CSV header {headers:?}"
    );
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .with_context(|| format!("bad float in column {i}"))
        };
        let parse_opt = |i: usize| -> Result<Option<f64>> {
            if record[i].is_empty() {
                Ok(None)
            } else {
                parse(i).map(Some)
            }
        };
        rows.push(ResultRow {
            xi: parse(0)?,
            fx_true: parse_opt(1)?,
            fy_true: parse_opt(2)?,
            est_mean: parse(3)?,
            est_sd: parse(4)?,
        });
    }
    Ok(ResultFrame {
        rows,
        replication_curves: None,
    })
}

/// Writes the frame as JSON (`{"rows": [...]}` mirroring the CSV fields).
pub fn write_json<W: Write>(frame: &ResultFrame, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, frame)?;
    Ok(())
}

/// Writes to `path` in the chosen format; failures carry the path context.
pub fn export(frame: &ResultFrame, path: &Path, format: Format) -> Result<()> {
    let file = File::create(path)
        .with_context(|| format!("cannot create output file {}", path.display()))?;
    let w = BufWriter::new(file);
    match format {
        Format::Csv => write_csv(frame, w),
        Format::Json => write_json(frame, w),
    }
    .with_context(|| format!("while writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame() -> ResultFrame {
        ResultFrame {
            rows: vec![
                ResultRow {
                    xi: 0.1,
                    fx_true: Some(1.0 / 3.0),
                    fy_true: None,
                    est_mean: 0.333_333_333_333_333_37,
                    est_sd: 1e-300,
                },
                ResultRow {
                    xi: -2.5,
                    fx_true: None,
                    fy_true: Some(f64::MIN_POSITIVE),
                    est_mean: std::f64::consts::PI,
                    est_sd: 0.0,
                },
            ],
            replication_curves: None,
        }
    }

    #[test]
    fn empty_frame_writes_header_only() {
        let mut buf = Vec::new();
        write_csv(
            &ResultFrame {
                rows: vec![],
                replication_curves: None,
            },
            &mut buf,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.trim(), "xi,fx_true,fy_true,est_mean,est_sd");
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let f = frame();
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let back = read_csv(&buf[..]).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let f = frame();
        let mut buf = Vec::new();
        write_json(&f, &mut buf).unwrap();
        let back: ResultFrame = serde_json::from_slice(&buf).unwrap();
        assert_eq!(f, back);
    }
}
