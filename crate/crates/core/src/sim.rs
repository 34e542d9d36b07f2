//! Weld-center heating response along the conveyor.
//!
//! The board temperature `y` relaxes toward the ambient field at the board's
//! current position: `dy/dt = q·(T(x(t)) − y)`, `x(t) = v·t`. Integration runs
//! in the time domain with classical fourth-order Runge–Kutta.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::AmbientProfile;
use crate::geometry::ProcessParameters;

/// Default welding coefficient (1/s).
pub const DEFAULT_Q: f64 = 0.021;

/// Lumped relaxation rate of the weld-area center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeldingModel {
    q: f64,
}

impl WeldingModel {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::domain("q", format!("must be positive, got {q}")));
        }
        Ok(Self { q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

impl Default for WeldingModel {
    fn default() -> Self {
        Self { q: DEFAULT_Q }
    }
}

/// Integration step and output sampling interval (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationGrid {
    dt: f64,
    dt_out: f64,
    stride: usize,
}

impl SimulationGrid {
    /// `dt_out` must be a positive integer multiple of `dt`.
    pub fn new(dt: f64, dt_out: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain("dt", format!("must be positive, got {dt}")));
        }
        if !(dt_out > 0.0 && dt_out.is_finite()) {
            return Err(Error::domain(
                "dt_out",
                format!("must be positive, got {dt_out}"),
            ));
        }
        let ratio = dt_out / dt;
        let stride = ratio.round();
        if stride < 1.0 || (ratio - stride).abs() > 1e-9 * ratio {
            return Err(Error::domain(
                "dt_out",
                format!("{dt_out} s is not an integer multiple of dt = {dt} s"),
            ));
        }
        Ok(Self {
            dt,
            dt_out,
            stride: stride as usize,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dt_out(&self) -> f64 {
        self.dt_out
    }
}

impl Default for SimulationGrid {
    fn default() -> Self {
        Self {
            dt: 0.1,
            dt_out: 0.5,
            stride: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSample {
    /// s
    pub t: f64,
    /// cm
    pub x: f64,
    /// °C
    pub temp: f64,
}

/// Uniformly sampled weld-center temperature series.
///
/// Sample `i` sits at `t = t0 + i·dt` and `x = v/60 · t`. Simulated traces
/// start at `t0 = 0`; measured traces may start later.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermalTrace {
    dt: f64,
    belt_speed: f64,
    samples: Vec<TraceSample>,
}

impl ThermalTrace {
    /// Builds a trace from temperatures sampled every `dt` starting at `t0`.
    pub fn from_temps(t0: f64, dt: f64, belt_speed: f64, temps: &[f64]) -> Result<Self> {
        let v = belt_speed / 60.0;
        let samples = temps
            .iter()
            .enumerate()
            .map(|(i, &temp)| {
                let t = t0 + i as f64 * dt;
                TraceSample { t, x: v * t, temp }
            })
            .collect();
        Self::from_samples(dt, belt_speed, samples)
    }

    /// Wraps pre-built samples, checking non-emptiness and a positive step.
    pub fn from_samples(dt: f64, belt_speed: f64, samples: Vec<TraceSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        if !(dt > 0.0) {
            return Err(Error::domain("dt", format!("must be positive, got {dt}")));
        }
        if !(belt_speed > 0.0) {
            return Err(Error::domain(
                "belt_speed",
                format!("must be positive, got {belt_speed}"),
            ));
        }
        Ok(Self {
            dt,
            belt_speed,
            samples,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// cm/min
    pub fn belt_speed(&self) -> f64 {
        self.belt_speed
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn temps(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.temp)
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    /// Linear interpolation of the temperature at time `t`; `None` outside
    /// the sampled range. A time within 1e-9·dt of a node returns that node's
    /// value exactly.
    pub fn temp_at(&self, t: f64) -> Option<f64> {
        let tol = 1e-9 * self.dt;
        if t < self.start_time() - tol || t > self.end_time() + tol {
            return None;
        }
        let idx = self.samples.partition_point(|s| s.t <= t);
        if idx > 0 && (t - self.samples[idx - 1].t).abs() <= tol {
            return Some(self.samples[idx - 1].temp);
        }
        if idx < self.samples.len() && (self.samples[idx].t - t).abs() <= tol {
            return Some(self.samples[idx].temp);
        }
        if idx == 0 || idx == self.samples.len() {
            return None;
        }
        let (a, b) = (self.samples[idx - 1], self.samples[idx]);
        let w = (t - a.t) / (b.t - a.t);
        Some(a.temp + w * (b.temp - a.temp))
    }

    /// Sample with the highest temperature, earliest on ties.
    pub fn peak(&self) -> TraceSample {
        self.samples
            .iter()
            .copied()
            .reduce(|best, s| if s.temp > best.temp { s } else { best })
            .expect("trace is non-empty")
    }
}

fn check_run(profile: &AmbientProfile, belt_speed: f64) -> Result<()> {
    if !(belt_speed > 0.0 && belt_speed.is_finite()) {
        return Err(Error::domain(
            "belt_speed",
            format!("must be positive, got {belt_speed}"),
        ));
    }
    if !(profile.total_length() > 0.0) {
        return Err(Error::Layout("profile has zero length".into()));
    }
    Ok(())
}

/// Fixed-step integration from the furnace entry to the last node at or before
/// the exit. `step` advances `(n, y)` over one step of `dt`; every `stride`-th
/// node is kept.
fn integrate(
    profile: &AmbientProfile,
    belt_speed: f64,
    y0: f64,
    dt: f64,
    stride: usize,
    step: impl Fn(&dyn Fn(f64) -> f64, f64, f64) -> f64,
) -> Result<ThermalTrace> {
    check_run(profile, belt_speed)?;
    let v = belt_speed / 60.0;
    let t_end = profile.total_length() / v;
    let n_steps = (t_end / dt * (1.0 + 1e-12)).floor() as usize;
    let out_dt = dt * stride as f64;

    let ambient = |t: f64| profile.eval_clamped(v * t);
    let mut samples = Vec::with_capacity(n_steps / stride + 1);
    let mut y = y0;
    samples.push(TraceSample {
        t: 0.0,
        x: 0.0,
        temp: y,
    });
    for n in 0..n_steps {
        y = step(&ambient, n as f64 * dt, y);
        let k = n + 1;
        if k % stride == 0 {
            let t = (k / stride) as f64 * out_dt;
            samples.push(TraceSample {
                t,
                x: v * t,
                temp: y,
            });
        }
    }
    ThermalTrace::from_samples(out_dt, belt_speed, samples)
}

/// RK4 integration starting from `y0` at the furnace entry.
pub fn simulate_from(
    profile: &AmbientProfile,
    belt_speed: f64,
    model: WeldingModel,
    grid: SimulationGrid,
    y0: f64,
) -> Result<ThermalTrace> {
    let q = model.q;
    let h = grid.dt;
    integrate(profile, belt_speed, y0, h, grid.stride, |amb, t, y| {
        let a0 = amb(t);
        let a_mid = amb(t + 0.5 * h);
        let a1 = amb(t + h);
        let k1 = q * (a0 - y);
        let k2 = q * (a_mid - (y + 0.5 * h * k1));
        let k3 = q * (a_mid - (y + 0.5 * h * k2));
        let k4 = q * (a1 - (y + h * k3));
        y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    })
}

/// Simulates a board entering at the exterior temperature TT5.
pub fn simulate(
    profile: &AmbientProfile,
    params: &ProcessParameters,
    model: WeldingModel,
    grid: SimulationGrid,
) -> Result<ThermalTrace> {
    simulate_from(profile, params.belt_speed, model, grid, params.tt5)
}

/// Forward-Euler integration of the same problem, sampled at every step.
/// Only meant as an independent check on [`simulate`].
pub fn euler_reference(
    profile: &AmbientProfile,
    params: &ProcessParameters,
    model: WeldingModel,
    dt: f64,
) -> Result<ThermalTrace> {
    euler_from(profile, params.belt_speed, model, dt, params.tt5)
}

pub fn euler_from(
    profile: &AmbientProfile,
    belt_speed: f64,
    model: WeldingModel,
    dt: f64,
    y0: f64,
) -> Result<ThermalTrace> {
    if !(dt > 0.0) {
        return Err(Error::domain("dt", format!("must be positive, got {dt}")));
    }
    let q = model.q;
    integrate(profile, belt_speed, y0, dt, 1, |amb, t, y| {
        y + dt * q * (amb(t) - y)
    })
}

/// Linear interpolation of `trace` onto a `dt_out` grid over the same span.
pub fn resample(trace: &ThermalTrace, dt_out: f64) -> Result<ThermalTrace> {
    if trace.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if !(dt_out > 0.0) {
        return Err(Error::domain(
            "dt_out",
            format!("must be positive, got {dt_out}"),
        ));
    }
    let t0 = trace.start_time();
    let span = trace.end_time() - t0;
    let n = (span / dt_out + 1e-9).floor() as usize;
    let temps: Vec<f64> = (0..=n)
        .map(|i| {
            let t = (t0 + i as f64 * dt_out).min(trace.end_time());
            trace.temp_at(t).expect("inside trace span")
        })
        .collect();
    ThermalTrace::from_temps(t0, dt_out, trace.belt_speed, &temps)
}
