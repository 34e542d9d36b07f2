//! Fixtures shared by the benchmarks.

use reflow_core::{
    build_profile, default_layout, AmbientProfile, OvenLayout, ParameterRanges, ProcessParameters,
    SweepOptions, WeldingModel, DEFAULT_BLEND_WEIGHT, DEFAULT_Q,
};

pub struct Scenario {
    pub layout: OvenLayout,
    pub params: ProcessParameters,
    pub profile: AmbientProfile,
    pub model: WeldingModel,
    pub options: SweepOptions,
}

/// The reference oven at its default setpoints.
pub fn default_scenario() -> Scenario {
    let layout = default_layout();
    let params = ProcessParameters::default();
    let profile = build_profile(&layout, &params, DEFAULT_BLEND_WEIGHT).expect("default profile");
    Scenario {
        layout,
        params,
        profile,
        model: WeldingModel::new(DEFAULT_Q).expect("default q"),
        options: SweepOptions::default(),
    }
}

/// A 2x2x2x2x5 joint grid (80 points) around the best feasible region.
pub fn small_ranges() -> ParameterRanges {
    let mut r = ParameterRanges::default();
    r.tt1.hi = 170.0;
    r.tt2.hi = 190.0;
    r.tt3.hi = 230.0;
    r.tt4.lo = 260.0;
    r.belt_speed.lo = 80.0;
    r.belt_speed.hi = 84.0;
    r
}
