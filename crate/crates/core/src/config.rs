//! Run configuration: a TOML document of nested sections.
//!
//! Every key is optional and defaults to the reference oven and the default
//! model, so an empty file describes the standard 70 cm/min scenario. Unknown
//! keys are rejected.
//!
//! ```toml
//! enforce_ranges = true
//!
//! [process]
//! tt1 = 175.0
//! belt_speed = 70.0
//!
//! [model]
//! q = 0.021
//! p = 0.8
//!
//! [ranges]
//! tt4 = [245.0, 265.0]
//! temp_step = 5.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibration::{CalibrationOptions, DEFAULT_Q_CANDIDATES};
use crate::error::{Error, Result};
use crate::field::DEFAULT_BLEND_WEIGHT;
use crate::geometry::{
    default_layout, validate_parameters, OvenLayout, ParameterRanges, ProcessParameters,
};
use crate::limits::ProcessLimits;
use crate::optimizer::{AreaDomain, SweepOptions};
use crate::sim::{SimulationGrid, WeldingModel, DEFAULT_Q};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    /// Welding coefficient (1/s).
    pub q: f64,
    /// Linear weight of the cooling blend.
    pub p: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            q: DEFAULT_Q,
            p: DEFAULT_BLEND_WEIGHT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub dt: f64,
    pub dt_out: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            dt: 0.1,
            dt_out: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    pub q_candidates: Vec<f64>,
    pub refine_rounds: usize,
    /// Also fit the blend weight after the coefficient.
    pub fit_p: bool,
    pub p_candidates: Vec<f64>,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            q_candidates: DEFAULT_Q_CANDIDATES.to_vec(),
            refine_rounds: 1,
            fit_p: false,
            p_candidates: vec![0.6, 0.7, 0.8, 0.9, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeSection {
    pub area_domain: AreaDomain,
    pub refine: bool,
    /// Worker threads for sweeps; 0 uses all available cores.
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldSection {
    /// Sampling step of the field dump (cm).
    pub dx: f64,
}

impl Default for FieldSection {
    fn default() -> Self {
        Self { dx: 0.1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    /// Measured trace for calibration, or trace to check.
    pub measured: Option<PathBuf>,
    /// Main output (CSV or report); standard output when absent.
    pub output: Option<PathBuf>,
    /// Per-candidate CSV of a sweep.
    pub candidates: Option<PathBuf>,
    /// Limit verdict CSV.
    pub verdict: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Reject process parameters outside `ranges`.
    pub enforce_ranges: bool,
    /// Replaces the reference furnace when present.
    pub oven: Option<OvenLayout>,
    pub process: ProcessParameters,
    pub model: ModelSection,
    pub grid: GridSection,
    pub ranges: ParameterRanges,
    pub limits: ProcessLimits,
    pub calibration: CalibrationSection,
    pub optimize: OptimizeSection,
    pub field: FieldSection,
    pub paths: PathsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            enforce_ranges: true,
            oven: None,
            process: ProcessParameters::default(),
            model: ModelSection::default(),
            grid: GridSection::default(),
            ranges: ParameterRanges::default(),
            limits: ProcessLimits::default(),
            calibration: CalibrationSection::default(),
            optimize: OptimizeSection::default(),
            field: FieldSection::default(),
            paths: PathsSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks every value that a command might consume.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.process.belt_speed > 0.0) {
            return bad(format!(
                "process.belt_speed must be positive, got {}",
                self.process.belt_speed
            ));
        }
        self.ranges.check()?;
        if self.enforce_ranges {
            let violations = validate_parameters(&self.process, &self.ranges);
            if !violations.is_empty() {
                let list: Vec<String> = violations.iter().map(|v| format!("process.{v}")).collect();
                return bad(list.join("; "));
            }
        }
        if !(self.model.q > 0.0) {
            return bad(format!("model.q must be positive, got {}", self.model.q));
        }
        if !(0.0..=1.0).contains(&self.model.p) {
            return bad(format!("model.p must lie in [0, 1], got {}", self.model.p));
        }
        SimulationGrid::new(self.grid.dt, self.grid.dt_out)
            .map_err(|e| Error::Config(format!("grid: {e}")))?;
        if !(self.field.dx > 0.0) {
            return bad(format!("field.dx must be positive, got {}", self.field.dx));
        }
        if self.calibration.q_candidates.is_empty() {
            return bad("calibration.q_candidates is empty".into());
        }
        if let Some(q) = self.calibration.q_candidates.iter().find(|q| !(**q > 0.0)) {
            return bad(format!("calibration.q_candidates contains {q}"));
        }
        if self.calibration.p_candidates.is_empty() {
            return bad("calibration.p_candidates is empty".into());
        }
        if let Some(p) = self
            .calibration
            .p_candidates
            .iter()
            .find(|p| !(0.0..=1.0).contains(*p))
        {
            return bad(format!("calibration.p_candidates contains {p}"));
        }
        Ok(())
    }

    pub fn layout(&self) -> OvenLayout {
        self.oven.clone().unwrap_or_else(default_layout)
    }

    pub fn welding_model(&self) -> Result<WeldingModel> {
        WeldingModel::new(self.model.q)
    }

    pub fn simulation_grid(&self) -> Result<SimulationGrid> {
        SimulationGrid::new(self.grid.dt, self.grid.dt_out)
    }

    fn workers(&self) -> Option<usize> {
        (self.optimize.workers > 0).then_some(self.optimize.workers)
    }

    pub fn calibration_options(&self) -> Result<CalibrationOptions> {
        Ok(CalibrationOptions {
            grid: self.simulation_grid()?,
            refine_rounds: self.calibration.refine_rounds,
            workers: self.workers(),
        })
    }

    pub fn sweep_options(&self) -> Result<SweepOptions> {
        Ok(SweepOptions {
            grid: self.simulation_grid()?,
            limits: self.limits,
            area_domain: self.optimize.area_domain,
            refine: self.optimize.refine,
            workers: self.workers(),
        })
    }
}
