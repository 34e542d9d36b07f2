//! Reflow-soldering thermal profile simulation.
//!
//! The crate models a conveyor reflow oven as a piecewise ambient temperature
//! field, integrates the first-order heating response of the weld-area center
//! as a board travels through it, and builds calibration, process-limit
//! checking and exhaustive parameter search on top of that simulator.
//!
//! Units throughout: positions in cm, times in s, temperatures in °C, belt
//! speed in cm/min (converted to cm/s once, at the point of use).

pub mod calibration;
pub mod config;
mod error;
pub mod field;
pub mod geometry;
pub mod limits;
pub mod optimizer;
pub mod sim;
pub mod trace_io;

pub use calibration::{
    align, calibrate_q, discrepancy, pearson, AlignedPair, CalibrationOptions, CalibrationResult,
    QScore,
};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use field::{
    ambient_at, build_profile, fit_blend_weight, AmbientProfile, BlendFit, CoolingBlend, Segment,
    SegmentForm, DEFAULT_BLEND_WEIGHT,
};
pub use geometry::{
    default_layout, position_at_time, validate_parameters, Interval, OvenLayout, Param,
    ParameterRanges, ProcessParameters, RangeViolation, SetpointSlot, ZoneKind, ZoneSpec,
};
pub use limits::{
    check_limits, compute_metrics, LimitKind, LimitRow, LimitVerdict, ProcessLimits, TraceMetrics,
};
pub use optimizer::{
    feasible_speed_interval, minimize_area, most_symmetric, reflow_area, symmetry_score,
    AreaDomain, Objective, OptimizationResult, SpeedSweepResult, SweepCandidate, SweepOptions,
};
pub use sim::{
    euler_reference, resample, simulate, simulate_from, SimulationGrid, ThermalTrace, TraceSample,
    WeldingModel, DEFAULT_Q,
};
pub use trace_io::{load_trace_csv, read_trace_csv, write_trace_csv, write_trace_csv_to};

/// Melting point of the solder paste (°C).
pub const SOLDER_MELTING_POINT: f64 = 217.0;

/// Runs `f` on a rayon pool with `workers` threads, or on the global pool when
/// `workers` is `None` or zero.
pub(crate) fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}
