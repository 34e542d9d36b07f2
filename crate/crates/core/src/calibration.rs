//! Scoring simulated traces against sensor data and fitting the welding
//! coefficient by grid search.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::build_profile;
use crate::geometry::{OvenLayout, ProcessParameters};
use crate::sim::{simulate, SimulationGrid, ThermalTrace, WeldingModel};
use crate::with_workers;

/// Welding-coefficient grid used when none is configured (1/s).
pub const DEFAULT_Q_CANDIDATES: [f64; 5] = [0.0200, 0.0205, 0.0210, 0.0215, 0.0220];

/// Measured and simulated temperatures on common time stamps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignedPair {
    pub times: Vec<f64>,
    pub measured: Vec<f64>,
    pub simulated: Vec<f64>,
}

impl AlignedPair {
    pub fn new(times: Vec<f64>, measured: Vec<f64>, simulated: Vec<f64>) -> Result<Self> {
        if times.len() != measured.len() || times.len() != simulated.len() {
            return Err(Error::domain(
                "aligned pair",
                "series lengths differ".to_string(),
            ));
        }
        if times.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: times.len(),
            });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain(
                "aligned pair",
                "times must be strictly increasing".to_string(),
            ));
        }
        Ok(Self {
            times,
            measured,
            simulated,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Interpolates `simulated` onto the measured time stamps that fall inside
/// both traces' spans.
pub fn align(measured: &ThermalTrace, simulated: &ThermalTrace) -> Result<AlignedPair> {
    let lo = measured.start_time().max(simulated.start_time());
    let hi = measured.end_time().min(simulated.end_time());
    if lo > hi {
        return Err(Error::EmptyOverlap);
    }
    let (mut times, mut meas, mut sim) = (Vec::new(), Vec::new(), Vec::new());
    for s in measured.samples() {
        if let Some(v) = simulated.temp_at(s.t) {
            times.push(s.t);
            meas.push(s.temp);
            sim.push(v);
        }
    }
    if times.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    AlignedPair::new(times, meas, sim)
}

/// Mean squared difference (°C²).
pub fn discrepancy(pair: &AlignedPair) -> f64 {
    let sum: f64 = pair
        .measured
        .iter()
        .zip(&pair.simulated)
        .map(|(m, s)| (m - s) * (m - s))
        .sum();
    sum / pair.len() as f64
}

/// Sample Pearson correlation between the measured and simulated series.
pub fn pearson(pair: &AlignedPair) -> Result<f64> {
    let n = pair.len() as f64;
    let mean_m = pair.measured.iter().sum::<f64>() / n;
    let mean_s = pair.simulated.iter().sum::<f64>() / n;
    let (mut cov, mut var_m, mut var_s) = (0.0, 0.0, 0.0);
    for (m, s) in pair.measured.iter().zip(&pair.simulated) {
        let (dm, ds) = (m - mean_m, s - mean_s);
        cov += dm * ds;
        var_m += dm * dm;
        var_s += ds * ds;
    }
    if var_m == 0.0 || var_s == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((cov / (var_m.sqrt() * var_s.sqrt())).clamp(-1.0, 1.0))
}

/// Fit quality of one candidate coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QScore {
    pub q: f64,
    pub discrepancy: f64,
    pub pearson: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub best_q: f64,
    /// The configured grid, in input order.
    pub candidates: Vec<QScore>,
    /// One grid per refinement round, each centred on the incumbent.
    pub refinements: Vec<Vec<QScore>>,
}

impl CalibrationResult {
    pub fn best(&self) -> QScore {
        self.candidates
            .iter()
            .chain(self.refinements.iter().flatten())
            .copied()
            .find(|c| c.q == self.best_q)
            .expect("best_q comes from an evaluated candidate")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    pub grid: SimulationGrid,
    /// Rounds of ±1 step re-gridding at a tenth of the step.
    pub refine_rounds: usize,
    pub workers: Option<usize>,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            grid: SimulationGrid::default(),
            refine_rounds: 1,
            workers: None,
        }
    }
}

fn score_all(
    measured: &ThermalTrace,
    layout: &OvenLayout,
    params: &ProcessParameters,
    p: f64,
    grid: SimulationGrid,
    qs: &[f64],
) -> Result<Vec<QScore>> {
    let profile = build_profile(layout, params, p)?;
    qs.par_iter()
        .map(|&q| {
            let sim = simulate(&profile, params, WeldingModel::new(q)?, grid)?;
            let pair = align(measured, &sim)?;
            Ok(QScore {
                q,
                discrepancy: discrepancy(&pair),
                pearson: pearson(&pair)?,
            })
        })
        .collect()
}

fn argmin(scores: &[QScore]) -> QScore {
    *scores
        .iter()
        .min_by(|a, b| {
            a.discrepancy
                .total_cmp(&b.discrepancy)
                .then(a.q.total_cmp(&b.q))
        })
        .expect("non-empty")
}

/// Grid search over the welding coefficient.
///
/// Each candidate is simulated, aligned to `measured` and scored; the smallest
/// discrepancy wins, with ties going to the smaller coefficient. With
/// `refine_rounds > 0` the search then re-grids ±1 step around the incumbent
/// at a tenth of the step, once per round.
pub fn calibrate_q(
    measured: &ThermalTrace,
    layout: &OvenLayout,
    params: &ProcessParameters,
    p: f64,
    q_candidates: &[f64],
    options: &CalibrationOptions,
) -> Result<CalibrationResult> {
    if q_candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    with_workers(options.workers, || {
        let candidates = score_all(measured, layout, params, p, options.grid, q_candidates)?;
        let mut best = argmin(&candidates);

        let mut sorted: Vec<f64> = q_candidates.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut step = sorted
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|d| *d > 0.0)
            .fold(f64::INFINITY, f64::min);

        let mut refinements = Vec::new();
        if step.is_finite() {
            for _ in 0..options.refine_rounds {
                let fine = step / 10.0;
                let qs: Vec<f64> = (-10..=10)
                    .map(|j| {
                        if j == 0 {
                            best.q
                        } else {
                            best.q + j as f64 * fine
                        }
                    })
                    .filter(|q| *q > 0.0)
                    .collect();
                let round = score_all(measured, layout, params, p, options.grid, &qs)?;
                best = argmin(&[best, argmin(&round)]);
                refinements.push(round);
                step = fine;
            }
        }
        Ok(CalibrationResult {
            best_q: best.q,
            candidates,
            refinements,
        })
    })
}
