//! Furnace layout, adjustable process parameters and time/position conversion.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Length of one heated zone (cm).
pub const ZONE_LENGTH_CM: f64 = 30.5;
/// Length of the unheated gap between adjacent zones (cm).
pub const GAP_LENGTH_CM: f64 = 5.0;
/// Length of the entry and exit regions (cm).
pub const APRON_LENGTH_CM: f64 = 25.0;
/// Number of heated zones in the reference furnace.
pub const HEATED_ZONES: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZoneKind {
    Entry,
    Heated,
    Gap,
    Exit,
}

/// One of the five independently adjustable setpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SetpointSlot {
    #[serde(rename = "TT1")]
    Tt1,
    #[serde(rename = "TT2")]
    Tt2,
    #[serde(rename = "TT3")]
    Tt3,
    #[serde(rename = "TT4")]
    Tt4,
    #[serde(rename = "TT5")]
    Tt5,
}

impl fmt::Display for SetpointSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SetpointSlot::Tt1 => "TT1",
            SetpointSlot::Tt2 => "TT2",
            SetpointSlot::Tt3 => "TT3",
            SetpointSlot::Tt4 => "TT4",
            SetpointSlot::Tt5 => "TT5",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneSpec {
    pub name: String,
    pub kind: ZoneKind,
    pub start_cm: f64,
    pub end_cm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setpoint_slot: Option<SetpointSlot>,
}

impl ZoneSpec {
    pub fn length(&self) -> f64 {
        self.end_cm - self.start_cm
    }

    /// Whether `x` lies in the half-open span `[start, end)`.
    pub fn contains(&self, x: f64) -> bool {
        x >= self.start_cm && x < self.end_cm
    }
}

/// Ordered, contiguous regions of the furnace from entry to exit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OvenLayout {
    zones: Vec<ZoneSpec>,
    total_length_cm: f64,
}

impl OvenLayout {
    /// Builds a layout, checking contiguity and per-zone invariants.
    pub fn new(zones: Vec<ZoneSpec>) -> Result<Self> {
        let Some(first) = zones.first() else {
            return Err(Error::Layout("no zones".into()));
        };
        if first.start_cm != 0.0 {
            return Err(Error::Layout(format!(
                "first zone '{}' starts at {} cm, expected 0",
                first.name, first.start_cm
            )));
        }
        for (i, z) in zones.iter().enumerate() {
            if !(z.end_cm > z.start_cm) {
                return Err(Error::Layout(format!(
                    "zone '{}' has end {} <= start {}",
                    z.name, z.end_cm, z.start_cm
                )));
            }
            match (z.kind, z.setpoint_slot) {
                (ZoneKind::Heated, None) => {
                    return Err(Error::Layout(format!(
                        "heated zone '{}' has no setpoint slot",
                        z.name
                    )))
                }
                (ZoneKind::Entry | ZoneKind::Gap | ZoneKind::Exit, Some(_)) => {
                    return Err(Error::Layout(format!(
                        "non-heated zone '{}' carries a setpoint slot",
                        z.name
                    )))
                }
                _ => {}
            }
            if i > 0 && zones[i - 1].end_cm != z.start_cm {
                return Err(Error::Layout(format!(
                    "zone '{}' starts at {} cm but previous zone ends at {} cm",
                    z.name,
                    z.start_cm,
                    zones[i - 1].end_cm
                )));
            }
        }
        let total_length_cm = zones[zones.len() - 1].end_cm;
        Ok(Self {
            zones,
            total_length_cm,
        })
    }

    pub fn zones(&self) -> &[ZoneSpec] {
        &self.zones
    }

    pub fn total_length_cm(&self) -> f64 {
        self.total_length_cm
    }

    /// The zone containing `x`; a boundary belongs to the later zone and the
    /// furnace end to the last zone.
    pub fn zone_at(&self, x: f64) -> Option<&ZoneSpec> {
        if !(0.0..=self.total_length_cm).contains(&x) {
            return None;
        }
        let idx = self.zones.partition_point(|z| z.start_cm <= x);
        self.zones.get(idx.saturating_sub(1))
    }
}

impl Default for OvenLayout {
    fn default() -> Self {
        default_layout()
    }
}

impl<'de> Deserialize<'de> for OvenLayout {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            zones: Vec<ZoneSpec>,
        }
        let raw = Raw::deserialize(d)?;
        OvenLayout::new(raw.zones).map_err(serde::de::Error::custom)
    }
}

/// The reference 11-zone furnace: 25 cm entry, eleven 30.5 cm zones separated
/// by 5 cm gaps, 25 cm exit, 435.5 cm overall.
pub fn default_layout() -> OvenLayout {
    fn slot_for(zone: usize) -> SetpointSlot {
        match zone {
            1..=5 => SetpointSlot::Tt1,
            6 => SetpointSlot::Tt2,
            7 => SetpointSlot::Tt3,
            8 | 9 => SetpointSlot::Tt4,
            _ => SetpointSlot::Tt5,
        }
    }

    let mut zones = Vec::with_capacity(2 * HEATED_ZONES + 1);
    let mut at = 0.0;
    let mut push = |name: String, kind, len: f64, slot| {
        zones.push(ZoneSpec {
            name,
            kind,
            start_cm: at,
            end_cm: at + len,
            setpoint_slot: slot,
        });
        at += len;
    };
    push("entry".into(), ZoneKind::Entry, APRON_LENGTH_CM, None);
    for n in 1..=HEATED_ZONES {
        if n > 1 {
            push(format!("gap {}", n - 1), ZoneKind::Gap, GAP_LENGTH_CM, None);
        }
        push(
            format!("zone {n}"),
            ZoneKind::Heated,
            ZONE_LENGTH_CM,
            Some(slot_for(n)),
        );
    }
    push("exit".into(), ZoneKind::Exit, APRON_LENGTH_CM, None);
    OvenLayout::new(zones).expect("reference layout is well formed")
}

/// Zone setpoints and belt speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProcessParameters {
    pub tt1: f64,
    pub tt2: f64,
    pub tt3: f64,
    pub tt4: f64,
    /// Zones 10-11 and the exterior air.
    pub tt5: f64,
    /// cm/min
    pub belt_speed: f64,
}

impl Default for ProcessParameters {
    fn default() -> Self {
        Self {
            tt1: 175.0,
            tt2: 195.0,
            tt3: 235.0,
            tt4: 255.0,
            tt5: 25.0,
            belt_speed: 70.0,
        }
    }
}

impl ProcessParameters {
    pub fn setpoint(&self, slot: SetpointSlot) -> f64 {
        match slot {
            SetpointSlot::Tt1 => self.tt1,
            SetpointSlot::Tt2 => self.tt2,
            SetpointSlot::Tt3 => self.tt3,
            SetpointSlot::Tt4 => self.tt4,
            SetpointSlot::Tt5 => self.tt5,
        }
    }

    pub fn get(&self, param: Param) -> f64 {
        match param {
            Param::Setpoint(slot) => self.setpoint(slot),
            Param::BeltSpeed => self.belt_speed,
        }
    }

    /// Belt speed in cm/s.
    pub fn speed_cm_per_s(&self) -> f64 {
        self.belt_speed / 60.0
    }
}

/// A named adjustable quantity: one of the setpoints or the belt speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Setpoint(SetpointSlot),
    BeltSpeed,
}

impl Param {
    pub const ALL: [Param; 6] = [
        Param::Setpoint(SetpointSlot::Tt1),
        Param::Setpoint(SetpointSlot::Tt2),
        Param::Setpoint(SetpointSlot::Tt3),
        Param::Setpoint(SetpointSlot::Tt4),
        Param::Setpoint(SetpointSlot::Tt5),
        Param::BeltSpeed,
    ];
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Setpoint(slot) => write!(f, "{}", slot.to_string().to_lowercase()),
            Param::BeltSpeed => f.write_str("belt_speed"),
        }
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    /// Points `lo, lo + step, ...` up to and including `hi`.
    ///
    /// The grid always ends exactly on `hi`; values are snapped to 1e-9 so that
    /// decimal steps produce clean numbers.
    pub fn grid(&self, step: f64) -> Vec<f64> {
        let span = self.hi - self.lo;
        if span <= 0.0 {
            return vec![self.lo];
        }
        let n = (span / step + 1e-9).floor() as usize;
        let mut out: Vec<f64> = (0..=n).map(|i| snap(self.lo + i as f64 * step)).collect();
        if (self.hi - out[n]).abs() > 1e-9 {
            out.push(self.hi);
        } else {
            out[n] = self.hi;
        }
        out
    }
}

impl From<[f64; 2]> for Interval {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

fn snap(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

/// Adjustable envelope for every parameter plus sweep step sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParameterRanges {
    pub tt1: Interval,
    pub tt2: Interval,
    pub tt3: Interval,
    pub tt4: Interval,
    pub tt5: Interval,
    pub belt_speed: Interval,
    /// °C, joint sweeps
    pub temp_step: f64,
    /// cm/min, joint sweeps
    pub speed_step: f64,
    /// cm/min, single-variable speed sweep
    pub speed_sweep_step: f64,
}

impl Default for ParameterRanges {
    fn default() -> Self {
        Self {
            tt1: Interval::new(165.0, 185.0),
            tt2: Interval::new(185.0, 205.0),
            tt3: Interval::new(225.0, 245.0),
            tt4: Interval::new(245.0, 265.0),
            tt5: Interval::point(25.0),
            belt_speed: Interval::new(65.0, 100.0),
            temp_step: 5.0,
            speed_step: 1.0,
            speed_sweep_step: 0.1,
        }
    }
}

impl ParameterRanges {
    /// Collapses every range onto a single parameter point.
    pub fn singleton(p: &ProcessParameters) -> Self {
        Self {
            tt1: Interval::point(p.tt1),
            tt2: Interval::point(p.tt2),
            tt3: Interval::point(p.tt3),
            tt4: Interval::point(p.tt4),
            tt5: Interval::point(p.tt5),
            belt_speed: Interval::point(p.belt_speed),
            ..Self::default()
        }
    }

    pub fn range(&self, param: Param) -> Interval {
        match param {
            Param::Setpoint(SetpointSlot::Tt1) => self.tt1,
            Param::Setpoint(SetpointSlot::Tt2) => self.tt2,
            Param::Setpoint(SetpointSlot::Tt3) => self.tt3,
            Param::Setpoint(SetpointSlot::Tt4) => self.tt4,
            Param::Setpoint(SetpointSlot::Tt5) => self.tt5,
            Param::BeltSpeed => self.belt_speed,
        }
    }

    pub fn check(&self) -> Result<()> {
        for param in Param::ALL {
            let r = self.range(param);
            if !(r.lo <= r.hi) {
                return Err(Error::Config(format!(
                    "range for {param} has lower bound {} above upper bound {}",
                    r.lo, r.hi
                )));
            }
        }
        for (name, step) in [
            ("temp_step", self.temp_step),
            ("speed_step", self.speed_step),
            ("speed_sweep_step", self.speed_sweep_step),
        ] {
            if !(step > 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be positive, got {step}"
                )));
            }
        }
        Ok(())
    }
}

/// A parameter lying outside its adjustable range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeViolation {
    pub param: Param,
    pub value: f64,
    pub range: Interval,
}

impl fmt::Display for RangeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {} outside [{}, {}]",
            self.param, self.value, self.range.lo, self.range.hi
        )
    }
}

/// Lists every parameter outside its closed range. An empty list means valid.
pub fn validate_parameters(p: &ProcessParameters, r: &ParameterRanges) -> Vec<RangeViolation> {
    Param::ALL
        .into_iter()
        .filter_map(|param| {
            let value = p.get(param);
            let range = r.range(param);
            (!range.contains(value)).then_some(RangeViolation {
                param,
                value,
                range,
            })
        })
        .collect()
}

/// Conveyor position (cm) after `t` seconds at `speed` cm/min.
pub fn position_at_time(speed: f64, t: f64) -> Result<f64> {
    if !(speed > 0.0) {
        return Err(Error::domain(
            "belt_speed",
            format!("must be positive, got {speed}"),
        ));
    }
    if !(t >= 0.0) {
        return Err(Error::domain(
            "time",
            format!("must be non-negative, got {t}"),
        ));
    }
    Ok(speed / 60.0 * t)
}
