//! Trace CSV reading and writing.
//!
//! Accepted headers are `t_s,temp_c` (position rebuilt from the belt speed) and
//! `t_s,x_cm,temp_c`. Lines starting with `#` are comments.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::{ThermalTrace, TraceSample};

/// Allowed deviation of a time stamp from the uniform grid (s).
pub const SPACING_TOLERANCE_S: f64 = 1e-6;

/// Fractional digits written for every trace column.
pub const TRACE_DECIMALS: usize = 6;

/// Loads a trace from `path`. `belt_speed` (cm/min) is required for the
/// two-column schema; for the three-column schema it overrides the speed
/// inferred from the position column.
pub fn load_trace_csv(path: impl AsRef<Path>, belt_speed: Option<f64>) -> Result<ThermalTrace> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_trace_csv(file, &path.display().to_string(), belt_speed)
}

pub fn read_trace_csv(
    reader: impl Read,
    source: &str,
    belt_speed: Option<f64>,
) -> Result<ThermalTrace> {
    let err = |line: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);

    let header = rdr
        .headers()
        .map_err(|e| err(line_of(&e), e.to_string()))?
        .clone();
    let header_line = header.position().map_or(1, |p| p.line() as usize);
    let cols: Vec<&str> = header.iter().collect();
    let has_x = match cols.as_slice() {
        ["t_s", "temp_c"] => false,
        ["t_s", "x_cm", "temp_c"] => true,
        _ => {
            return Err(err(
                header_line,
                format!(
                    "expected header 't_s,temp_c' or 't_s,x_cm,temp_c', found '{}'",
                    cols.join(",")
                ),
            ))
        }
    };
    if !has_x && belt_speed.is_none() {
        return Err(err(
            header_line,
            "two-column trace needs a belt speed to rebuild positions".into(),
        ));
    }

    let mut rows: Vec<(usize, f64, Option<f64>, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| err(line_of(&e), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != cols.len() {
            return Err(err(
                line,
                format!("expected {} fields, found {}", cols.len(), rec.len()),
            ));
        }
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(line, format!("'{}' is not a number", &rec[i])))
        };
        let t = num(0)?;
        let (x, temp) = if has_x {
            (Some(num(1)?), num(2)?)
        } else {
            (None, num(1)?)
        };
        if let Some(&(_, prev, _, _)) = rows.last() {
            if !(t > prev) {
                return Err(err(
                    line,
                    format!("time {t} s does not increase (previous {prev} s)"),
                ));
            }
        }
        rows.push((line, t, x, temp));
    }
    if rows.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: rows.len(),
        });
    }

    let t0 = rows[0].1;
    let dt = rows[1].1 - t0;
    for (i, &(line, t, _, _)) in rows.iter().enumerate() {
        let expected = t0 + i as f64 * dt;
        if (t - expected).abs() > SPACING_TOLERANCE_S {
            return Err(err(
                line,
                format!("time {t} s is off the uniform {dt} s grid (expected {expected} s)"),
            ));
        }
    }

    let speed = match belt_speed {
        Some(v) => v,
        None => {
            let (first, last) = (rows[0], rows[rows.len() - 1]);
            let span_x = last.2.unwrap_or(0.0) - first.2.unwrap_or(0.0);
            60.0 * span_x / (last.1 - first.1)
        }
    };
    if !(speed > 0.0) {
        return Err(err(
            header_line,
            format!("belt speed must be positive, got {speed}"),
        ));
    }
    let samples = rows
        .into_iter()
        .map(|(_, t, x, temp)| TraceSample {
            t,
            x: x.unwrap_or(speed / 60.0 * t),
            temp,
        })
        .collect();
    ThermalTrace::from_samples(dt, speed, samples)
}

fn line_of(e: &csv::Error) -> usize {
    e.position().map_or(0, |p| p.line() as usize)
}

/// Writes `t_s,x_cm,temp_c` rows with fixed decimals.
pub fn write_trace_csv_to(trace: &ThermalTrace, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "t_s,x_cm,temp_c")?;
    for s in trace.samples() {
        writeln!(
            w,
            "{:.d$},{:.d$},{:.d$}",
            s.t,
            s.x,
            s.temp,
            d = TRACE_DECIMALS
        )?;
    }
    w.flush()
}

pub fn write_trace_csv(trace: &ThermalTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_trace_csv_to(trace, BufWriter::new(file)).map_err(io_err)
}
