//! Exhaustive parameter sweeps over simulated traces.
//!
//! Three searches share one evaluation path (simulate, measure, check limits):
//! the feasible belt-speed interval at fixed setpoints, the joint setting with
//! the smallest reflow area, and the joint setting whose above-melting section
//! is most symmetric. Every reduction uses a total order on
//! `(objective..., tt1, tt2, tt3, tt4, v)`, so the outcome does not depend on
//! the order in which candidates were evaluated.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::build_profile;
use crate::geometry::{Interval, OvenLayout, ParameterRanges, ProcessParameters};
use crate::limits::{check_limits, compute_metrics, LimitKind, ProcessLimits, TraceMetrics};
use crate::sim::{simulate, SimulationGrid, ThermalTrace, WeldingModel};
use crate::{with_workers, SOLDER_MELTING_POINT};

/// Offset between mirrored samples in the symmetry score (s).
pub const SYMMETRY_STEP_S: f64 = 0.5;

/// Integration variable for the reflow area.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AreaDomain {
    /// °C·cm
    #[default]
    Position,
    /// °C·s
    Time,
}

impl AreaDomain {
    pub fn unit(&self) -> &'static str {
        match self {
            AreaDomain::Position => "°C·cm",
            AreaDomain::Time => "°C·s",
        }
    }
}

impl fmt::Display for AreaDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AreaDomain::Position => "position",
            AreaDomain::Time => "time",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub grid: SimulationGrid,
    pub limits: ProcessLimits,
    pub area_domain: AreaDomain,
    /// Re-sweep around the incumbent at a fifth of the joint-grid steps.
    pub refine: bool,
    pub workers: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            grid: SimulationGrid::default(),
            limits: ProcessLimits::default(),
            area_domain: AreaDomain::Position,
            refine: false,
            workers: None,
        }
    }
}

/// Area between the trace and the melting line where the trace is above it,
/// by the trapezoid rule with interpolated crossing endpoints.
pub fn reflow_area(trace: &ThermalTrace, domain: AreaDomain) -> f64 {
    let level = SOLDER_MELTING_POINT;
    trace
        .samples()
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let span = match domain {
                AreaDomain::Position => b.x - a.x,
                AreaDomain::Time => b.t - a.t,
            };
            let (ga, gb) = (a.temp - level, b.temp - level);
            match (ga > 0.0, gb > 0.0) {
                (true, true) => 0.5 * (ga + gb) * span,
                (false, false) => 0.0,
                // Only the positive triangle of a crossing segment counts.
                (true, false) => 0.5 * ga * ga / (ga - gb) * span,
                (false, true) => 0.5 * gb * gb / (gb - ga) * span,
            }
        })
        .sum()
}

/// Start and end times of every maximal interval above `level`.
fn intervals_above(trace: &ThermalTrace, level: f64) -> Vec<(f64, f64)> {
    let s = trace.samples();
    let mut out = Vec::new();
    let mut open = (s[0].temp > level).then_some(s[0].t);
    for w in s.windows(2) {
        let (a, b) = (w[0], w[1]);
        let cross = || a.t + (level - a.temp) / (b.temp - a.temp) * (b.t - a.t);
        match (a.temp > level, b.temp > level) {
            (false, true) => open = Some(cross()),
            (true, false) => {
                if let Some(start) = open.take() {
                    out.push((start, cross()));
                }
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        out.push((start, trace.end_time()));
    }
    out
}

/// Sum of squared differences between trace values mirrored about the centre
/// of the above-melting interval, at 0.5 s offsets.
pub fn symmetry_score(trace: &ThermalTrace) -> Result<f64> {
    let level = SOLDER_MELTING_POINT;
    let spans = intervals_above(trace, level);
    let (t1, t2) = match spans.as_slice() {
        [] => return Err(Error::NoReflowInterval { level }),
        [one] => *one,
        many => {
            return Err(Error::DisjointReflow {
                level,
                count: many.len(),
            })
        }
    };
    let centre = 0.5 * (t1 + t2);
    let half = 0.5 * (t2 - t1);
    let mut sum = 0.0;
    let mut k = 1usize;
    loop {
        let d = k as f64 * SYMMETRY_STEP_S;
        if d > half + 1e-9 {
            break;
        }
        let d = d.min(half);
        let left = trace.temp_at(centre - d).expect("inside the trace");
        let right = trace.temp_at(centre + d).expect("inside the trace");
        sum += (left - right) * (left - right);
        k += 1;
    }
    Ok(sum)
}

/// One evaluated parameter point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCandidate {
    pub params: ProcessParameters,
    pub metrics: TraceMetrics,
    /// Reflow area in the sweep's area domain.
    pub area: f64,
    /// `None` when the above-melting set is empty or disconnected.
    pub symmetry: Option<f64>,
    pub feasible: bool,
}

/// Simulates one parameter point and scores it.
pub fn evaluate(
    layout: &OvenLayout,
    params: &ProcessParameters,
    p: f64,
    model: WeldingModel,
    options: &SweepOptions,
) -> Result<SweepCandidate> {
    let profile = build_profile(layout, params, p)?;
    let trace = simulate(&profile, params, model, options.grid)?;
    let metrics = compute_metrics(&trace)?;
    let feasible = check_limits(&metrics, &options.limits).pass();
    Ok(SweepCandidate {
        params: *params,
        metrics,
        area: reflow_area(&trace, options.area_domain),
        symmetry: symmetry_score(&trace).ok(),
        feasible,
    })
}

/// Evaluates `points` concurrently; the output keeps the input order.
pub fn evaluate_points(
    layout: &OvenLayout,
    points: &[ProcessParameters],
    p: f64,
    model: WeldingModel,
    options: &SweepOptions,
) -> Result<Vec<SweepCandidate>> {
    with_workers(options.workers, || {
        points
            .par_iter()
            .map(|pt| evaluate(layout, pt, p, model, options))
            .collect()
    })
}

fn tuple(p: &ProcessParameters) -> [f64; 5] {
    [p.tt1, p.tt2, p.tt3, p.tt4, p.belt_speed]
}

fn cmp_tuple(a: &ProcessParameters, b: &ProcessParameters) -> Ordering {
    tuple(a)
        .iter()
        .zip(tuple(b).iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Smallest reflow area; ties by parameter tuple.
    MinArea,
    /// Smallest symmetry score, then smallest area, then parameter tuple.
    MostSymmetric,
}

impl Objective {
    pub fn describe(&self) -> &'static str {
        match self {
            Objective::MinArea => "minimize reflow area above 217 °C",
            Objective::MostSymmetric => {
                "minimize symmetry score about the above-217 °C centre, then reflow area"
            }
        }
    }

    pub fn tie_break(&self) -> &'static str {
        match self {
            Objective::MinArea => "(area, tt1, tt2, tt3, tt4, v) ascending",
            Objective::MostSymmetric => "(symmetry, area, tt1, tt2, tt3, tt4, v) ascending",
        }
    }

    fn eligible(&self, c: &SweepCandidate) -> bool {
        c.feasible && (*self == Objective::MinArea || c.symmetry.is_some())
    }

    fn cmp(&self, a: &SweepCandidate, b: &SweepCandidate) -> Ordering {
        let head = match self {
            Objective::MinArea => Ordering::Equal,
            Objective::MostSymmetric => a
                .symmetry
                .unwrap_or(f64::INFINITY)
                .total_cmp(&b.symmetry.unwrap_or(f64::INFINITY)),
        };
        head.then(a.area.total_cmp(&b.area))
            .then_with(|| cmp_tuple(&a.params, &b.params))
    }

    /// The best eligible candidate under this objective's total order.
    pub fn select<'a>(
        &self,
        candidates: impl IntoIterator<Item = &'a SweepCandidate>,
    ) -> Option<&'a SweepCandidate> {
        candidates
            .into_iter()
            .filter(|c| self.eligible(c))
            .min_by(|a, b| self.cmp(a, b))
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::MinArea => "area",
            Objective::MostSymmetric => "symmetry",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub objective: Objective,
    pub best: Option<SweepCandidate>,
    pub candidates_evaluated: usize,
    /// Every evaluated point: the coarse grid in enumeration order, then any
    /// refinement points.
    pub candidates: Vec<SweepCandidate>,
    pub ranges: ParameterRanges,
    pub area_domain: AreaDomain,
    pub refined: bool,
}

/// Every `(tt1, tt2, tt3, tt4, v)` on the range grids, in lexicographic order.
pub fn joint_grid(ranges: &ParameterRanges) -> Vec<ProcessParameters> {
    let ts = ranges.temp_step;
    let (g1, g2, g3, g4) = (
        ranges.tt1.grid(ts),
        ranges.tt2.grid(ts),
        ranges.tt3.grid(ts),
        ranges.tt4.grid(ts),
    );
    let vs = ranges.belt_speed.grid(ranges.speed_step);
    let tt5 = ranges.tt5.lo;
    let mut out = Vec::with_capacity(g1.len() * g2.len() * g3.len() * g4.len() * vs.len());
    for &tt1 in &g1 {
        for &tt2 in &g2 {
            for &tt3 in &g3 {
                for &tt4 in &g4 {
                    for &belt_speed in &vs {
                        out.push(ProcessParameters {
                            tt1,
                            tt2,
                            tt3,
                            tt4,
                            tt5,
                            belt_speed,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Ranges of ±1 step around `centre`, clipped to `ranges`, at a fifth of the step.
fn refinement_ranges(ranges: &ParameterRanges, centre: &ProcessParameters) -> ParameterRanges {
    let around =
        |r: Interval, c: f64, step: f64| Interval::new((c - step).max(r.lo), (c + step).min(r.hi));
    ParameterRanges {
        tt1: around(ranges.tt1, centre.tt1, ranges.temp_step),
        tt2: around(ranges.tt2, centre.tt2, ranges.temp_step),
        tt3: around(ranges.tt3, centre.tt3, ranges.temp_step),
        tt4: around(ranges.tt4, centre.tt4, ranges.temp_step),
        tt5: ranges.tt5,
        belt_speed: around(ranges.belt_speed, centre.belt_speed, ranges.speed_step),
        temp_step: ranges.temp_step / 5.0,
        speed_step: ranges.speed_step / 5.0,
        speed_sweep_step: ranges.speed_sweep_step,
    }
}

fn optimize(
    objective: Objective,
    layout: &OvenLayout,
    ranges: &ParameterRanges,
    p: f64,
    model: WeldingModel,
    options: &SweepOptions,
) -> Result<OptimizationResult> {
    ranges.check()?;
    let points = joint_grid(ranges);
    let mut candidates = evaluate_points(layout, &points, p, model, options)?;
    let mut best = objective.select(&candidates).cloned();

    if options.refine {
        if let Some(incumbent) = best.as_ref().map(|b| b.params) {
            let seen: HashSet<[u64; 5]> =
                points.iter().map(|p| tuple(p).map(f64::to_bits)).collect();
            let extra: Vec<ProcessParameters> = joint_grid(&refinement_ranges(ranges, &incumbent))
                .into_iter()
                .filter(|p| !seen.contains(&tuple(p).map(f64::to_bits)))
                .collect();
            candidates.extend(evaluate_points(layout, &extra, p, model, options)?);
            best = objective.select(&candidates).cloned();
        }
    }

    Ok(OptimizationResult {
        objective,
        best,
        candidates_evaluated: candidates.len(),
        candidates,
        ranges: *ranges,
        area_domain: options.area_domain,
        refined: options.refine,
    })
}

/// The feasible joint setting with the smallest reflow area.
pub fn minimize_area(
    layout: &OvenLayout,
    ranges: &ParameterRanges,
    p: f64,
    model: WeldingModel,
    options: &SweepOptions,
) -> Result<OptimizationResult> {
    optimize(Objective::MinArea, layout, ranges, p, model, options)
}

/// The feasible joint setting with the most symmetric above-melting section.
/// Candidates whose above-melting set is disconnected are not eligible.
pub fn most_symmetric(
    layout: &OvenLayout,
    ranges: &ParameterRanges,
    p: f64,
    model: WeldingModel,
    options: &SweepOptions,
) -> Result<OptimizationResult> {
    optimize(Objective::MostSymmetric, layout, ranges, p, model, options)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedPoint {
    pub belt_speed: f64,
    pub pass: bool,
    pub failed: Vec<LimitKind>,
    pub metrics: TraceMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedSweepResult {
    /// Ascending.
    pub feasible_speeds: Vec<f64>,
    pub max_feasible: Option<f64>,
    pub points: Vec<SpeedPoint>,
    pub speed_range: Interval,
    pub step: f64,
}

/// Checks every belt speed on `v_range` (inclusive, `step` apart) at the
/// setpoints in `temps`; its `belt_speed` is ignored.
pub fn feasible_speed_interval(
    layout: &OvenLayout,
    temps: &ProcessParameters,
    p: f64,
    model: WeldingModel,
    v_range: Interval,
    step: f64,
    options: &SweepOptions,
) -> Result<SpeedSweepResult> {
    if !(step > 0.0) {
        return Err(Error::domain(
            "step",
            format!("must be positive, got {step}"),
        ));
    }
    if !(v_range.lo <= v_range.hi && v_range.lo > 0.0) {
        return Err(Error::domain(
            "speed range",
            format!(
                "[{}, {}] is not a positive interval",
                v_range.lo, v_range.hi
            ),
        ));
    }
    let profile = build_profile(layout, temps, p)?;
    let speeds = v_range.grid(step);
    let points = with_workers(options.workers, || {
        speeds
            .par_iter()
            .map(|&belt_speed| {
                let params = ProcessParameters {
                    belt_speed,
                    ..*temps
                };
                let trace = simulate(&profile, &params, model, options.grid)?;
                let metrics = compute_metrics(&trace)?;
                let verdict = check_limits(&metrics, &options.limits);
                Ok(SpeedPoint {
                    belt_speed,
                    pass: verdict.pass(),
                    failed: verdict.failed().collect(),
                    metrics,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let feasible_speeds: Vec<f64> = points
        .iter()
        .filter(|p| p.pass)
        .map(|p| p.belt_speed)
        .collect();
    Ok(SpeedSweepResult {
        max_feasible: feasible_speeds.last().copied(),
        feasible_speeds,
        points,
        speed_range: v_range,
        step,
    })
}
