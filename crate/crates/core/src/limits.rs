//! Process-window metrics and their limit checks.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Interval;
use crate::sim::ThermalTrace;
use crate::SOLDER_MELTING_POINT;

/// Lower level of the rise-time window (°C).
pub const RISE_FROM: f64 = 150.0;
/// Upper level of the rise-time window (°C).
pub const RISE_TO: f64 = 190.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProcessLimits {
    /// Largest allowed heating rate (°C/s).
    pub slope_max: f64,
    /// Largest allowed cooling rate, negative (°C/s).
    pub slope_min: f64,
    /// s
    pub rise_150_190: Interval,
    /// s
    pub time_above_217: Interval,
    /// °C
    pub peak: Interval,
}

impl Default for ProcessLimits {
    fn default() -> Self {
        Self {
            slope_max: 3.0,
            slope_min: -3.0,
            rise_150_190: Interval::new(60.0, 120.0),
            time_above_217: Interval::new(40.0, 90.0),
            peak: Interval::new(240.0, 250.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceMetrics {
    /// °C/s
    pub max_slope: f64,
    /// °C/s
    pub min_slope: f64,
    /// Time from the first upward 150 °C crossing to the first upward 190 °C
    /// crossing before the peak; `None` if either level is not reached.
    pub rise_time_150_190: Option<f64>,
    /// Total time spent above the melting point (s).
    pub duration_above_217: f64,
    pub peak_temp: f64,
    pub peak_time: f64,
}

/// Time of the first upward crossing of `level` among `(t, temp)` points.
/// A series that already starts at or above `level` crosses at its first time.
pub(crate) fn first_upward_crossing(points: &[(f64, f64)], level: f64) -> Option<f64> {
    let &(t0, y0) = points.first()?;
    if y0 >= level {
        return Some(t0);
    }
    points.windows(2).find_map(|w| {
        let ((ta, ya), (tb, yb)) = (w[0], w[1]);
        (ya < level && yb >= level).then(|| ta + (level - ya) / (yb - ya) * (tb - ta))
    })
}

/// Measure of `{t : f(t) > level}` for the piecewise-linear interpolant.
pub(crate) fn measure_above(points: &[(f64, f64)], level: f64) -> f64 {
    points
        .windows(2)
        .map(|w| {
            let ((ta, ya), (tb, yb)) = (w[0], w[1]);
            let (ga, gb) = (ya - level, yb - level);
            let span = tb - ta;
            match (ga > 0.0, gb > 0.0) {
                (true, true) => span,
                (false, false) => 0.0,
                (true, false) => span * ga / (ga - gb),
                (false, true) => span * gb / (gb - ga),
            }
        })
        .sum()
}

pub fn compute_metrics(trace: &ThermalTrace) -> Result<TraceMetrics> {
    let s = trace.samples();
    if s.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: s.len(),
        });
    }
    let (mut max_slope, mut min_slope) = (f64::NEG_INFINITY, f64::INFINITY);
    for w in s.windows(2) {
        let slope = (w[1].temp - w[0].temp) / (w[1].t - w[0].t);
        max_slope = max_slope.max(slope);
        min_slope = min_slope.min(slope);
    }

    let points: Vec<(f64, f64)> = s.iter().map(|p| (p.t, p.temp)).collect();
    let peak = trace.peak();
    let peak_idx = s.iter().position(|p| p.t == peak.t).unwrap_or(0);
    let rising = &points[..=peak_idx];
    let rise_time_150_190 = match (
        first_upward_crossing(rising, RISE_FROM),
        first_upward_crossing(rising, RISE_TO),
    ) {
        (Some(a), Some(b)) => Some(b - a),
        _ => None,
    };

    Ok(TraceMetrics {
        max_slope,
        min_slope,
        rise_time_150_190,
        duration_above_217: measure_above(&points, SOLDER_MELTING_POINT),
        peak_temp: peak.temp,
        peak_time: peak.t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    HeatingSlope,
    CoolingSlope,
    Rise150To190,
    TimeAbove217,
    PeakTemp,
}

impl LimitKind {
    pub const ALL: [LimitKind; 5] = [
        LimitKind::HeatingSlope,
        LimitKind::CoolingSlope,
        LimitKind::Rise150To190,
        LimitKind::TimeAbove217,
        LimitKind::PeakTemp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LimitKind::HeatingSlope => "heating_slope",
            LimitKind::CoolingSlope => "cooling_slope",
            LimitKind::Rise150To190 => "rise_150_190",
            LimitKind::TimeAbove217 => "time_above_217",
            LimitKind::PeakTemp => "peak_temp",
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            LimitKind::HeatingSlope | LimitKind::CoolingSlope => "°C/s",
            LimitKind::Rise150To190 | LimitKind::TimeAbove217 => "s",
            LimitKind::PeakTemp => "°C",
        }
    }
}

impl fmt::Display for LimitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One checked limit. A missing bound is unconstrained on that side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitRow {
    pub limit: LimitKind,
    pub measured: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitVerdict {
    pub rows: [LimitRow; 5],
}

impl LimitVerdict {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, kind: LimitKind) -> &LimitRow {
        self.rows
            .iter()
            .find(|r| r.limit == kind)
            .expect("every limit has a row")
    }

    pub fn failed(&self) -> impl Iterator<Item = LimitKind> + '_ {
        self.rows.iter().filter(|r| !r.pass).map(|r| r.limit)
    }

    /// `limit,measured,lo,hi,pass` with empty cells for absent values.
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_default();
        let mut out = String::from("limit,measured,lo,hi,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.limit,
                cell(r.measured),
                cell(r.lo),
                cell(r.hi),
                r.pass
            ));
        }
        out
    }
}

impl fmt::Display for LimitVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
        writeln!(
            f,
            "{:<16} {:>12} {:>10} {:>10} {:>6}",
            "limit", "measured", "lo", "hi", "pass"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<16} {:>12} {:>10} {:>10} {:>6}",
                r.limit.name(),
                cell(r.measured),
                cell(r.lo),
                cell(r.hi),
                if r.pass { "yes" } else { "NO" }
            )?;
        }
        write!(f, "overall: {}", if self.pass() { "pass" } else { "FAIL" })
    }
}

/// Checks every metric against its inclusive bound.
pub fn check_limits(m: &TraceMetrics, limits: &ProcessLimits) -> LimitVerdict {
    let within = |v: Option<f64>, lo: Option<f64>, hi: Option<f64>| match v {
        Some(v) => lo.map_or(true, |lo| v >= lo) && hi.map_or(true, |hi| v <= hi),
        None => false,
    };
    let row = |limit, measured: Option<f64>, lo: Option<f64>, hi: Option<f64>| LimitRow {
        limit,
        measured,
        lo,
        hi,
        pass: within(measured, lo, hi),
    };
    LimitVerdict {
        rows: [
            row(
                LimitKind::HeatingSlope,
                Some(m.max_slope),
                None,
                Some(limits.slope_max),
            ),
            row(
                LimitKind::CoolingSlope,
                Some(m.min_slope),
                Some(limits.slope_min),
                None,
            ),
            row(
                LimitKind::Rise150To190,
                m.rise_time_150_190,
                Some(limits.rise_150_190.lo),
                Some(limits.rise_150_190.hi),
            ),
            row(
                LimitKind::TimeAbove217,
                Some(m.duration_above_217),
                Some(limits.time_above_217.lo),
                Some(limits.time_above_217.hi),
            ),
            row(
                LimitKind::PeakTemp,
                Some(m.peak_temp),
                Some(limits.peak.lo),
                Some(limits.peak.hi),
            ),
        ],
    }
}
