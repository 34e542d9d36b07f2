//! Piecewise ambient temperature field inside the furnace.
//!
//! Plateaus hold a zone setpoint, gaps between zones with different setpoints
//! use a logistic transition centred on the gap, and the cooling section from
//! the last peak zone to the end of the cold zones blends a straight line with
//! an exponential decay.

use serde::Serialize;

use crate::calibration::{align, discrepancy};
use crate::error::{Error, Result};
use crate::geometry::{OvenLayout, ProcessParameters, SetpointSlot, ZoneKind};
use crate::sim::{simulate, SimulationGrid, ThermalTrace, WeldingModel};

/// Default weight of the linear component in the cooling blend.
pub const DEFAULT_BLEND_WEIGHT: f64 = 0.8;

/// Line/exponential mix between `(x_pre, hot)` and `(x_post, cold)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoolingBlend {
    pub hot: f64,
    pub cold: f64,
    pub x_pre: f64,
    pub x_post: f64,
    /// Weight of the linear component.
    pub p: f64,
}

impl CoolingBlend {
    pub fn linear(&self, x: f64) -> f64 {
        let slope = (self.hot - self.cold) / (self.x_pre - self.x_post);
        self.hot + slope * (x - self.x_pre)
    }

    /// Exponential rate; negative when cooling.
    pub fn rate(&self) -> f64 {
        (self.hot.ln() - self.cold.ln()) / (self.x_pre - self.x_post)
    }

    /// `A·e^{b·x}` with `A = hot·e^{-b·x_pre}`, evaluated relative to `x_pre`.
    pub fn exponential(&self, x: f64) -> f64 {
        self.hot * (self.rate() * (x - self.x_pre)).exp()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.p * self.linear(x) + (1.0 - self.p) * self.exponential(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SegmentForm {
    Constant {
        level: f64,
    },
    Sigmoid {
        before: f64,
        after: f64,
        center: f64,
    },
    ExpLinearBlend(CoolingBlend),
}

impl SegmentForm {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            SegmentForm::Constant { level } => level,
            SegmentForm::Sigmoid {
                before,
                after,
                center,
            } => before + (after - before) / (1.0 + (-(x - center)).exp()),
            SegmentForm::ExpLinearBlend(ref b) => b.eval(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    #[serde(flatten)]
    pub form: SegmentForm,
}

/// The ambient field `T(x)` over `[0, total_length]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmbientProfile {
    segments: Vec<Segment>,
    total_length: f64,
}

impl AmbientProfile {
    /// Builds a profile from contiguous segments starting at 0.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let Some(first) = segments.first() else {
            return Err(Error::Layout("profile has no segments".into()));
        };
        if first.start != 0.0 {
            return Err(Error::Layout("profile must start at 0".into()));
        }
        for w in segments.windows(2) {
            if w[0].end != w[1].start {
                return Err(Error::Layout(format!(
                    "profile segments not contiguous at {} / {}",
                    w[0].end, w[1].start
                )));
            }
        }
        for s in &segments {
            if !(s.end > s.start) {
                return Err(Error::Layout(format!(
                    "empty profile segment [{}, {})",
                    s.start, s.end
                )));
            }
        }
        let total_length = segments[segments.len() - 1].end;
        Ok(Self {
            segments,
            total_length,
        })
    }

    /// A uniform field at `level` over `[0, length]`.
    pub fn constant(level: f64, length: f64) -> Result<Self> {
        Self::new(vec![Segment {
            start: 0.0,
            end: length,
            form: SegmentForm::Constant { level },
        }])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// The segment holding `x`: joins belong to the later segment, the
    /// furnace end to the last one.
    pub fn segment_at(&self, x: f64) -> Option<&Segment> {
        if !(0.0..=self.total_length).contains(&x) {
            return None;
        }
        let idx = self.segments.partition_point(|s| s.start <= x);
        self.segments.get(idx.saturating_sub(1))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.segment_at(x)
            .map(|s| s.form.eval(x))
            .ok_or(Error::OutsideFurnace {
                x,
                length: self.total_length,
            })
    }

    /// Evaluation that tolerates round-off just past either end.
    pub(crate) fn eval_clamped(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, self.total_length);
        let idx = self.segments.partition_point(|s| s.start <= x);
        self.segments[idx.saturating_sub(1)].form.eval(x)
    }
}

/// `T(x)` for the given profile.
pub fn ambient_at(profile: &AmbientProfile, x: f64) -> Result<f64> {
    profile.eval(x)
}

/// Builds the piecewise ambient field for `layout` at the given setpoints.
///
/// Heated zones and the entry/exit regions are plateaus (entry and exit at
/// TT5). A gap between zones driven by the same setpoint slot is absorbed into
/// the plateau; a gap between different slots becomes a sigmoid centred on the
/// gap. The span from the end of the last TT4 zone to the end of the last TT5
/// zone is the cooling blend with weight `p` on the linear component.
pub fn build_profile(
    layout: &OvenLayout,
    params: &ProcessParameters,
    p: f64,
) -> Result<AmbientProfile> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(
            "p",
            format!("blend weight {p} outside [0, 1]"),
        ));
    }
    if !(params.tt4 > 0.0 && params.tt5 > 0.0) {
        return Err(Error::domain(
            "setpoint",
            format!(
                "cooling blend needs positive TT4 and TT5, got {} and {}",
                params.tt4, params.tt5
            ),
        ));
    }

    let zones = layout.zones();
    let heated: Vec<usize> = zones
        .iter()
        .enumerate()
        .filter(|(_, z)| z.kind == ZoneKind::Heated)
        .map(|(i, _)| i)
        .collect();
    let last_hot = heated
        .iter()
        .rposition(|&i| zones[i].setpoint_slot == Some(SetpointSlot::Tt4))
        .ok_or_else(|| Error::Layout("no TT4 zone to start the cooling section".into()))?;
    let cold = &heated[last_hot + 1..];
    if cold.is_empty()
        || cold
            .iter()
            .any(|&i| zones[i].setpoint_slot != Some(SetpointSlot::Tt5))
    {
        return Err(Error::Layout(
            "the zones after the last TT4 zone must all be TT5 zones".into(),
        ));
    }
    let blend_from = heated[last_hot] + 1;
    let blend_to = cold[cold.len() - 1];

    // Constants carry the slot that drives them so equal-slot neighbours merge.
    let mut raw: Vec<(Segment, Option<SetpointSlot>)> = Vec::new();
    let heated_slot = |i: usize| -> Result<SetpointSlot> {
        let z = zones
            .get(i)
            .filter(|z| z.kind == ZoneKind::Heated)
            .ok_or_else(|| Error::Layout("every gap must sit between two heated zones".into()))?;
        Ok(z.setpoint_slot.expect("heated zones carry a slot"))
    };

    for (i, z) in zones.iter().enumerate() {
        if i == blend_from {
            let blend = CoolingBlend {
                hot: params.tt4,
                cold: params.tt5,
                x_pre: z.start_cm,
                x_post: zones[blend_to].end_cm,
                p,
            };
            raw.push((
                Segment {
                    start: blend.x_pre,
                    end: blend.x_post,
                    form: SegmentForm::ExpLinearBlend(blend),
                },
                None,
            ));
            continue;
        }
        if i > blend_from && i <= blend_to {
            continue;
        }
        let (form, key) = match z.kind {
            ZoneKind::Entry | ZoneKind::Exit => (
                SegmentForm::Constant { level: params.tt5 },
                Some(SetpointSlot::Tt5),
            ),
            ZoneKind::Heated => {
                let slot = z.setpoint_slot.expect("heated zones carry a slot");
                (
                    SegmentForm::Constant {
                        level: params.setpoint(slot),
                    },
                    Some(slot),
                )
            }
            ZoneKind::Gap => {
                let before = heated_slot(i.wrapping_sub(1))?;
                let after = heated_slot(i + 1)?;
                if before == after {
                    (
                        SegmentForm::Constant {
                            level: params.setpoint(before),
                        },
                        Some(before),
                    )
                } else {
                    (
                        SegmentForm::Sigmoid {
                            before: params.setpoint(before),
                            after: params.setpoint(after),
                            center: 0.5 * (z.start_cm + z.end_cm),
                        },
                        None,
                    )
                }
            }
        };
        raw.push((
            Segment {
                start: z.start_cm,
                end: z.end_cm,
                form,
            },
            key,
        ));
    }

    let mut merged: Vec<(Segment, Option<SetpointSlot>)> = Vec::with_capacity(raw.len());
    for (seg, key) in raw {
        if let Some((last, last_key)) = merged.last_mut() {
            if key.is_some() && *last_key == key {
                last.end = seg.end;
                continue;
            }
        }
        merged.push((seg, key));
    }
    AmbientProfile::new(merged.into_iter().map(|(s, _)| s).collect())
}

/// Outcome of the blend-weight grid search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlendFit {
    pub best_p: f64,
    /// `(p, discrepancy)` per candidate, in input order.
    pub candidates: Vec<(f64, f64)>,
}

/// Picks the blend weight whose simulated trace best matches `measured`.
/// Ties go to the smaller weight.
pub fn fit_blend_weight(
    measured: &ThermalTrace,
    layout: &OvenLayout,
    params: &ProcessParameters,
    model: WeldingModel,
    grid: SimulationGrid,
    p_candidates: &[f64],
) -> Result<BlendFit> {
    if p_candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let candidates = p_candidates
        .iter()
        .map(|&p| {
            let profile = build_profile(layout, params, p)?;
            let sim = simulate(&profile, params, model, grid)?;
            Ok((p, discrepancy(&align(measured, &sim)?)))
        })
        .collect::<Result<Vec<_>>>()?;
    let best_p = candidates
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .map(|c| c.0)
        .expect("non-empty");
    Ok(BlendFit { best_p, candidates })
}
