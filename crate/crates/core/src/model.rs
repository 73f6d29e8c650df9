//! Parametric hand description, JSON config loading and the default model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::actuation::{
    calibrate_rocker, self_lock_margin, worm_self_lock, ActuationError, AbductionTrain, RockerGeometry, ScrewParams,
    SelfLock, WormParams,
};
use crate::bus::BusConfig;
use crate::kinematics::Actuator;
use crate::wrist::WristGeometry;

/// Joints in a complete description: 15 flexion, 3 coupled abduction and 2 wrist.
pub const JOINT_COUNT: usize = 20;
/// Independently commanded values.
pub const COMMANDED_COUNT: usize = 18;

/// Phalanx split used when a config gives only a digit length.
pub const PHALANX_FRACTIONS: [f64; 3] = [0.45, 0.30, 0.25];
/// Default screw anchor distance as a fraction of the motor-carrying link.
pub const ANCHOR_FRACTION: f64 = 0.6;
/// Default screw side length at zero travel as a fraction of the anchor distance.
pub const BASE_LENGTH_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DigitId {
    D1,
    D2,
    D3,
    D4,
    D5,
}

impl DigitId {
    pub const ALL: [DigitId; 5] = [DigitId::D1, DigitId::D2, DigitId::D3, DigitId::D4, DigitId::D5];
    pub const FINGERS: [DigitId; 4] = [DigitId::D2, DigitId::D3, DigitId::D4, DigitId::D5];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["D1", "D2", "D3", "D4", "D5"][self.index()]
    }

    pub fn label(self) -> &'static str {
        ["thumb", "index", "middle", "ring", "pinky"][self.index()]
    }
}

impl fmt::Display for DigitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DigitId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DigitId::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s) || d.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| ModelError::UnknownDigit(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JointKind {
    LeadscrewFlexion,
    WormCmc,
    CoupledAbduction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointLimits {
    pub min_deg: f64,
    pub max_deg: f64,
}

impl JointLimits {
    pub fn new(min_deg: f64, max_deg: f64) -> Self {
        Self { min_deg, max_deg }
    }

    /// `[0, total]`, the convention for flexion joints.
    pub fn flexion(total_deg: f64) -> Self {
        Self::new(0.0, total_deg)
    }

    pub fn symmetric(total_deg: f64) -> Self {
        Self::new(-total_deg / 2.0, total_deg / 2.0)
    }

    pub fn total(&self) -> f64 {
        self.max_deg - self.min_deg
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.min_deg + self.max_deg)
    }

    pub fn contains(&self, deg: f64) -> bool {
        deg >= self.min_deg && deg <= self.max_deg
    }

    pub fn clamp(&self, deg: f64) -> f64 {
        deg.clamp(self.min_deg, self.max_deg)
    }

    fn is_valid(&self) -> bool {
        self.min_deg.is_finite() && self.max_deg.is_finite() && self.max_deg > self.min_deg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub name: String,
    pub kind: JointKind,
    pub limits: JointLimits,
    /// Length of the link carried by this joint; zero for abduction, which
    /// shares its origin with the MCP joint.
    #[serde(default)]
    pub link_mm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screw: Option<ScrewParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rocker: Option<RockerGeometry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worm: Option<WormParams>,
}

/// Rigid placement of a digit base in the hand frame. Roll-pitch-yaw is
/// applied as `Rz(yaw) Ry(pitch) Rx(roll)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub position_mm: [f64; 3],
    #[serde(default)]
    pub rpy_deg: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Digit {
    pub id: DigitId,
    pub length_mm: f64,
    pub width_mm: f64,
    pub base: Placement,
    pub joints: Vec<JointSpec>,
}

impl Digit {
    pub fn flexion_joints(&self) -> impl Iterator<Item = (usize, &JointSpec)> {
        self.joints
            .iter()
            .enumerate()
            .filter(|(_, j)| j.kind == JointKind::LeadscrewFlexion)
    }

    pub fn link_sum_mm(&self) -> f64 {
        self.joints.iter().map(|j| j.link_mm).sum()
    }

    pub fn abduction(&self) -> Option<&JointSpec> {
        self.joints.iter().find(|j| j.kind == JointKind::CoupledAbduction)
    }

    /// Length of the link that carries the motor driving joint `idx`: the
    /// preceding link, or the joint's own link when nothing precedes it.
    pub fn motor_link_mm(&self, idx: usize) -> f64 {
        self.joints[..idx]
            .iter()
            .rev()
            .map(|j| j.link_mm)
            .find(|&l| l > 0.0)
            .unwrap_or(self.joints[idx].link_mm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Palm {
    pub length_mm: f64,
    pub width_mm: f64,
    /// Universal joint to the proximal palm edge.
    pub wrist_length_mm: f64,
    pub wrist_width_mm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    #[default]
    Mm,
    Cm,
    M,
}

impl LengthUnit {
    fn to_mm(self) -> f64 {
        match self {
            LengthUnit::Mm => 1.0,
            LengthUnit::Cm => 10.0,
            LengthUnit::M => 1000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    #[default]
    Deg,
    Rad,
}

/// Units of every `*_mm` and `*_deg` field in a config document. Loading
/// converts to millimetres and degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    #[serde(default)]
    pub length: LengthUnit,
    #[serde(default)]
    pub angle: AngleUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WristSpec {
    pub geometry: WristGeometry,
    pub fe: JointLimits,
    pub rud: JointLimits,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticsConfig {
    /// Screw torque delivered by each finger motor, N mm.
    pub nominal_motor_torque_nmm: f64,
    /// Contact point on the distal link as a fraction of its length.
    pub contact_fraction: f64,
    /// External fingertip load for the back-drive check, N.
    pub payload_n: f64,
}

impl Default for StaticsConfig {
    fn default() -> Self {
        Self {
            nominal_motor_torque_nmm: NOMINAL_MOTOR_TORQUE_NMM,
            contact_fraction: 1.0,
            payload_n: 44.5,
        }
    }
}

/// Calibrated once with `calibrate_nominal_torque` at mid-flexion and
/// rounded up.
pub const NOMINAL_MOTOR_TORQUE_NMM: f64 = 41.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandDescription {
    #[serde(default)]
    pub units: Units,
    pub palm: Palm,
    pub digits: Vec<Digit>,
    pub abduction: AbductionTrain,
    pub wrist: WristSpec,
    #[serde(default)]
    pub bus: BusConfig,
    #[serde(default)]
    pub statics: StaticsConfig,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid JSON: {0}")]
    Syntax(String),
    #[error("joint count invariant violated: expected {expected} joints, found {found}")]
    JointCount { expected: usize, found: usize },
    #[error("commanded value invariant violated: expected {expected}, found {found}")]
    CommandedCount { expected: usize, found: usize },
    #[error("digit {0} listed more than once")]
    DuplicateDigit(DigitId),
    #[error("digit {0} is missing")]
    MissingDigit(DigitId),
    #[error("unknown digit {0:?}")]
    UnknownDigit(String),
    #[error("D3 must not carry an abduction coupling")]
    MiddleFingerAbduction,
    #[error("joint {joint}: empty or non-finite limit interval [{min_deg}, {max_deg}]")]
    EmptyInterval {
        joint: String,
        min_deg: f64,
        max_deg: f64,
    },
    #[error("{field} must be strictly positive, got {value}")]
    NonPositive { field: String, value: f64 },
    #[error("{field} = {value} is out of range {range}")]
    OutOfRange {
        field: String,
        value: f64,
        range: &'static str,
    },
    #[error("digit {digit}: {message}")]
    Structure { digit: DigitId, message: String },
    #[error("joint {joint}: {source}")]
    Transmission {
        joint: String,
        #[source]
        source: ActuationError,
    },
    #[error("joint {joint}: {what} = {found} deg does not match limit {expected} deg")]
    Mismatch {
        joint: String,
        what: &'static str,
        expected: f64,
        found: f64,
    },
    #[error("wrist: {0}")]
    Wrist(String),
    #[error("bus: {0}")]
    Bus(String),
    #[error("scale factor must be positive and finite, got {0}")]
    InvalidScale(f64),
}

impl HandDescription {
    pub fn digit(&self, id: DigitId) -> &Digit {
        self.digits
            .iter()
            .find(|d| d.id == id)
            .expect("validated description has every digit")
    }

    /// Actuator that drives joint `idx` of `digit`.
    pub fn joint_actuator(&self, digit: DigitId, idx: usize) -> Actuator {
        let d = self.digit(digit);
        match d.joints[idx].kind {
            JointKind::CoupledAbduction => Actuator::AbductionServo,
            JointKind::WormCmc => Actuator::D1Cmc,
            JointKind::LeadscrewFlexion => {
                let k = d.joints[..idx]
                    .iter()
                    .filter(|j| j.kind == JointKind::LeadscrewFlexion)
                    .count();
                let first = if digit == DigitId::D1 { 1 } else { 0 };
                Actuator::flexion(digit, first + k).expect("validated flexion index")
            }
        }
    }

    /// Limits of an actuator in its own units (servo degrees for the
    /// abduction servo).
    pub fn actuator_limits(&self, act: Actuator) -> JointLimits {
        match act {
            Actuator::AbductionServo => {
                JointLimits::new(self.abduction.servo_min_deg, self.abduction.servo_max_deg)
            }
            Actuator::WristFe => self.wrist.fe,
            Actuator::WristRud => self.wrist.rud,
            other => {
                let (digit, slot) = other.digit_slot().expect("digit actuator");
                let d = self.digit(digit);
                let idx = d
                    .joints
                    .iter()
                    .enumerate()
                    .filter(|(_, j)| j.kind != JointKind::CoupledAbduction)
                    .nth(slot)
                    .map(|(i, _)| i)
                    .expect("validated digit");
                d.joints[idx].limits
            }
        }
    }

    /// Self-locking analysis of the screw or worm behind an actuator; `None`
    /// for the servo and the wrist actuators.
    pub fn self_lock(&self, act: Actuator) -> Option<SelfLock> {
        let (digit, slot) = act.digit_slot()?;
        let joint = self
            .digit(digit)
            .joints
            .iter()
            .filter(|j| j.kind != JointKind::CoupledAbduction)
            .nth(slot)?;
        match (joint.screw, joint.worm) {
            (Some(s), _) => self_lock_margin(&s).ok(),
            (None, Some(w)) => worm_self_lock(&w).ok(),
            _ => None,
        }
    }

    pub fn joint_count(&self) -> usize {
        self.digits.iter().map(|d| d.joints.len()).sum::<usize>() + 2
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let found = self.joint_count();
        if found != JOINT_COUNT {
            return Err(ModelError::JointCount {
                expected: JOINT_COUNT,
                found,
            });
        }
        for id in DigitId::ALL {
            match self.digits.iter().filter(|d| d.id == id).count() {
                0 => return Err(ModelError::MissingDigit(id)),
                1 => {}
                _ => return Err(ModelError::DuplicateDigit(id)),
            }
        }
        let positive = |field: String, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ModelError::NonPositive { field, value })
            }
        };
        positive("palm.length_mm".into(), self.palm.length_mm)?;
        positive("palm.width_mm".into(), self.palm.width_mm)?;
        positive("palm.wrist_length_mm".into(), self.palm.wrist_length_mm)?;
        positive("palm.wrist_width_mm".into(), self.palm.wrist_width_mm)?;

        let mut abducting = 0;
        for d in &self.digits {
            positive(format!("{}.length_mm", d.id), d.length_mm)?;
            positive(format!("{}.width_mm", d.id), d.width_mm)?;
            for v in d.base.position_mm.iter().chain(d.base.rpy_deg.iter()) {
                if !v.is_finite() {
                    return Err(ModelError::Structure {
                        digit: d.id,
                        message: "base placement must be finite".into(),
                    });
                }
            }
            let kinds: Vec<JointKind> = d.joints.iter().map(|j| j.kind).collect();
            use JointKind::*;
            let expected_ok = match d.id {
                DigitId::D1 => kinds == [WormCmc, LeadscrewFlexion, LeadscrewFlexion],
                DigitId::D3 => {
                    if kinds.contains(&CoupledAbduction) {
                        return Err(ModelError::MiddleFingerAbduction);
                    }
                    kinds == [LeadscrewFlexion; 3]
                }
                _ => kinds == [CoupledAbduction, LeadscrewFlexion, LeadscrewFlexion, LeadscrewFlexion],
            };
            if !expected_ok {
                return Err(ModelError::Structure {
                    digit: d.id,
                    message: format!("unexpected joint layout {kinds:?}"),
                });
            }
            for (idx, j) in d.joints.iter().enumerate() {
                let name = format!("{}.{}", d.id, j.name);
                if !j.limits.is_valid() {
                    return Err(ModelError::EmptyInterval {
                        joint: name,
                        min_deg: j.limits.min_deg,
                        max_deg: j.limits.max_deg,
                    });
                }
                if j.limits.min_deg < -360.0 || j.limits.max_deg > 360.0 {
                    return Err(ModelError::OutOfRange {
                        field: format!("{name}.limits"),
                        value: if j.limits.min_deg < -360.0 { j.limits.min_deg } else { j.limits.max_deg },
                        range: "[-360, 360] deg",
                    });
                }
                let transmission = |source| ModelError::Transmission {
                    joint: name.clone(),
                    source,
                };
                match j.kind {
                    CoupledAbduction => {
                        abducting += 1;
                        if j.link_mm != 0.0 {
                            return Err(ModelError::Structure {
                                digit: d.id,
                                message: "abduction joint carries no link".into(),
                            });
                        }
                        let ratio = self.abduction.ratio(d.id);
                        if ratio == 0.0 {
                            return Err(ModelError::Structure {
                                digit: d.id,
                                message: "abduction joint without a worm in the train".into(),
                            });
                        }
                        let a = self.abduction.servo_min_deg * ratio;
                        let b = self.abduction.servo_max_deg * ratio;
                        check_close(&name, "train minimum", j.limits.min_deg, a.min(b))?;
                        check_close(&name, "train maximum", j.limits.max_deg, a.max(b))?;
                    }
                    WormCmc => {
                        positive(format!("{name}.link_mm"), j.link_mm)?;
                        let worm = j.worm.ok_or_else(|| ModelError::Structure {
                            digit: d.id,
                            message: "CMC joint needs worm parameters".into(),
                        })?;
                        worm.validate().map_err(transmission)?;
                        if worm.friction > 1.0 {
                            return Err(ModelError::OutOfRange {
                                field: format!("{name}.worm.friction"),
                                value: worm.friction,
                                range: "[0, 1]",
                            });
                        }
                    }
                    LeadscrewFlexion => {
                        positive(format!("{name}.link_mm"), j.link_mm)?;
                        let screw = j.screw.ok_or_else(|| ModelError::Structure {
                            digit: d.id,
                            message: format!("{} needs screw parameters", j.name),
                        })?;
                        screw.validate().map_err(transmission)?;
                        if screw.friction > 1.0 {
                            return Err(ModelError::OutOfRange {
                                field: format!("{name}.screw.friction"),
                                value: screw.friction,
                                range: "[0, 1]",
                            });
                        }
                        let rocker = j.rocker.ok_or_else(|| ModelError::Structure {
                            digit: d.id,
                            message: format!("{} has no rocker geometry", j.name),
                        })?;
                        rocker.validate().map_err(transmission)?;
                        if rocker.stroke_mm != screw.stroke_mm {
                            return Err(ModelError::Structure {
                                digit: d.id,
                                message: format!("{} rocker stroke differs from screw stroke", j.name),
                            });
                        }
                        let (lo, hi) = rocker.endpoint_angles().map_err(transmission)?;
                        check_close(&name, "rocker minimum", j.limits.min_deg, lo)?;
                        check_close(&name, "rocker maximum", j.limits.max_deg, hi)?;
                    }
                }
                let _ = idx;
            }
        }
        let commanded = self.digits.iter().map(|d| d.joints.len()).sum::<usize>() - abducting + 1 + 2;
        if commanded != COMMANDED_COUNT {
            return Err(ModelError::CommandedCount {
                expected: COMMANDED_COUNT,
                found: commanded,
            });
        }
        self.abduction.validate().map_err(|source| ModelError::Transmission {
            joint: "abduction".into(),
            source,
        })?;
        for (name, lim) in [("wrist.fe", self.wrist.fe), ("wrist.rud", self.wrist.rud)] {
            if !lim.is_valid() {
                return Err(ModelError::EmptyInterval {
                    joint: name.into(),
                    min_deg: lim.min_deg,
                    max_deg: lim.max_deg,
                });
            }
        }
        self.wrist.geometry.validate().map_err(|e| ModelError::Wrist(e.to_string()))?;
        self.bus.validate().map_err(ModelError::Bus)?;
        let s = &self.statics;
        if !(s.nominal_motor_torque_nmm >= 0.0 && s.nominal_motor_torque_nmm.is_finite()) {
            return Err(ModelError::OutOfRange {
                field: "statics.nominal_motor_torque_nmm".into(),
                value: s.nominal_motor_torque_nmm,
                range: ">= 0",
            });
        }
        if !(s.contact_fraction > 0.0 && s.contact_fraction <= 1.0) {
            return Err(ModelError::OutOfRange {
                field: "statics.contact_fraction".into(),
                value: s.contact_fraction,
                range: "(0, 1]",
            });
        }
        if !(s.payload_n >= 0.0 && s.payload_n.is_finite()) {
            return Err(ModelError::OutOfRange {
                field: "statics.payload_n".into(),
                value: s.payload_n,
                range: ">= 0",
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("description serializes")
    }
}

fn check_close(joint: &str, what: &'static str, expected: f64, found: f64) -> Result<(), ModelError> {
    if (expected - found).abs() <= 1e-6 {
        Ok(())
    } else {
        Err(ModelError::Mismatch {
            joint: joint.to_string(),
            what,
            expected,
            found,
        })
    }
}

/// Multiplies every number stored under a key ending in `suffix`.
fn scale_fields(v: &mut Value, suffix: &str, factor: f64) {
    fn scale_numbers(v: &mut Value, factor: f64) {
        match v {
            Value::Number(n) => {
                if let Some(x) = n.as_f64() {
                    if let Some(scaled) = serde_json::Number::from_f64(x * factor) {
                        *n = scaled;
                    }
                }
            }
            Value::Array(items) => items.iter_mut().for_each(|i| scale_numbers(i, factor)),
            _ => {}
        }
    }
    match v {
        Value::Object(map) => {
            for (k, child) in map.iter_mut() {
                if k.ends_with(suffix) {
                    scale_numbers(child, factor);
                } else {
                    scale_fields(child, suffix, factor);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|i| scale_fields(i, suffix, factor)),
        _ => {}
    }
}

/// Parses, unit-converts, fills missing rocker geometry and validates a
/// config document.
pub fn load_config(text: &str) -> Result<HandDescription, ModelError> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| ModelError::Syntax(e.to_string()))?;
    let units: Units = match value.get("units") {
        Some(u) => serde_json::from_value(u.clone()).map_err(|e| ModelError::Schema {
            path: "units".into(),
            message: e.to_string(),
        })?,
        None => Units::default(),
    };
    if units.length != LengthUnit::Mm {
        scale_fields(&mut value, "_mm", units.length.to_mm());
    }
    if units.angle == AngleUnit::Rad {
        scale_fields(&mut value, "_deg", 180.0 / std::f64::consts::PI);
        scale_fields(&mut value, "_deg_s", 180.0 / std::f64::consts::PI);
    }
    if let Some(obj) = value.as_object_mut() {
        obj.insert("units".into(), serde_json::to_value(Units::default()).expect("units"));
    }
    let mut desc: HandDescription =
        serde_path_to_error::deserialize(value).map_err(|e| ModelError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    fill_rockers(&mut desc)?;
    desc.validate()?;
    Ok(desc)
}

/// Calibrates rocker geometry for every leadscrew joint that lacks one.
pub fn fill_rockers(desc: &mut HandDescription) -> Result<(), ModelError> {
    for d in &mut desc.digits {
        for idx in 0..d.joints.len() {
            let j = &d.joints[idx];
            if j.kind != JointKind::LeadscrewFlexion || j.rocker.is_some() {
                continue;
            }
            let Some(screw) = j.screw else { continue };
            let a = ANCHOR_FRACTION * d.motor_link_mm(idx);
            let rocker = calibrate_rocker(
                a,
                BASE_LENGTH_FRACTION * a,
                screw.stroke_mm,
                j.limits.min_deg,
                j.limits.max_deg,
            )
            .map_err(|source| ModelError::Transmission {
                joint: format!("{}.{}", d.id, j.name),
                source,
            })?;
            d.joints[idx].rocker = Some(rocker);
        }
    }
    Ok(())
}

/// Measured range-of-motion totals, `[MCP, PIP, DIP, abduction]` for fingers and
/// `[CMC, MCP, IP]` for the thumb.
pub(crate) const THUMB_ROM: [f64; 3] = [106.24, 52.72, 45.02];
pub(crate) const FINGER_ROM: [(DigitId, [f64; 3], f64); 4] = [
    (DigitId::D2, [103.13, 75.07, 68.09], 26.73),
    (DigitId::D3, [101.92, 73.46, 73.04], 0.0),
    (DigitId::D4, [100.56, 72.93, 73.57], 26.73),
    (DigitId::D5, [98.93, 72.03, 72.05], 39.37),
];

/// The canonical model: anthropometric dimensions from the measured table,
/// joint limits matching the measured ranges of motion, rocker and wrist
/// geometry from one-time calibrations.
pub fn default_hand() -> HandDescription {
    let screw = |stroke| Some(ScrewParams::finger(stroke));
    let flex = |name: &str, total: f64, link_mm: f64, stroke: f64| JointSpec {
        name: name.into(),
        kind: JointKind::LeadscrewFlexion,
        limits: JointLimits::flexion(total),
        link_mm,
        screw: screw(stroke),
        rocker: None,
        worm: None,
    };
    let links = |len: f64| PHALANX_FRACTIONS.map(|f| f * len);
    let abduction = AbductionTrain::default_train();

    let thumb_len = 122.3;
    let tl = links(thumb_len);
    let mut digits = vec![Digit {
        id: DigitId::D1,
        length_mm: thumb_len,
        width_mm: 25.9,
        base: Placement {
            position_mm: [63.0, 38.0, -12.0],
            rpy_deg: [-90.0, 0.0, 45.0],
        },
        joints: vec![
            JointSpec {
                name: "cmc".into(),
                kind: JointKind::WormCmc,
                limits: JointLimits::flexion(THUMB_ROM[0]),
                link_mm: tl[0],
                screw: None,
                rocker: None,
                worm: Some(WormParams::thumb_cmc()),
            },
            flex("mcp", THUMB_ROM[1], tl[1], 20.0),
            flex("ip", THUMB_ROM[2], tl[2], 16.0),
        ],
    }];

    let finger_layout = [
        (DigitId::D2, 130.1, [160.0, 28.5, 0.0]),
        (DigitId::D3, 102.5, [162.0, 9.5, 0.0]),
        (DigitId::D4, 130.9, [160.0, -9.5, 0.0]),
        (DigitId::D5, 122.0, [154.0, -28.5, 0.0]),
    ];
    for ((id, len, pos), (_, rom, ab_total)) in finger_layout.into_iter().zip(FINGER_ROM) {
        let l = links(len);
        let mut joints = Vec::new();
        if ab_total > 0.0 {
            let ratio = abduction.ratio(id);
            let a = abduction.servo_min_deg * ratio;
            let b = abduction.servo_max_deg * ratio;
            joints.push(JointSpec {
                name: "abduction".into(),
                kind: JointKind::CoupledAbduction,
                limits: JointLimits::new(a.min(b), a.max(b)),
                link_mm: 0.0,
                screw: None,
                rocker: None,
                worm: None,
            });
        }
        joints.push(flex("mcp", rom[0], l[0], 20.0));
        joints.push(flex("pip", rom[1], l[1], 16.0));
        joints.push(flex("dip", rom[2], l[2], 16.0));
        digits.push(Digit {
            id,
            length_mm: len,
            width_mm: 19.0,
            base: Placement {
                position_mm: pos,
                rpy_deg: [0.0; 3],
            },
            joints,
        });
    }

    let mut desc = HandDescription {
        units: Units::default(),
        palm: Palm {
            length_mm: 129.0,
            width_mm: 92.0,
            wrist_length_mm: 33.0,
            wrist_width_mm: 57.9,
        },
        digits,
        abduction,
        wrist: WristSpec {
            geometry: WristGeometry::default_geometry(),
            fe: JointLimits::new(-18.0, 52.0),
            rud: JointLimits::new(-18.0, 18.0),
        },
        bus: BusConfig::default(),
        statics: StaticsConfig::default(),
    };
    fill_rockers(&mut desc).expect("default rockers calibrate");
    desc
}

/// Multiplies every length by `factor`; angles, limits and ratios are
/// unchanged.
pub fn scale_hand(desc: &HandDescription, factor: f64) -> Result<HandDescription, ModelError> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(ModelError::InvalidScale(factor));
    }
    let mut value = serde_json::to_value(desc).expect("description serializes");
    scale_fields(&mut value, "_mm", factor);
    serde_json::from_value(value).map_err(|e| ModelError::Schema {
        path: String::new(),
        message: e.to_string(),
    })
}
