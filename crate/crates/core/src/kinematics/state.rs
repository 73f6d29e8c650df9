use std::fmt;

use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::actuation::{joint_angle_to_nut_travel, ActuationError};
use crate::model::{DigitId, HandDescription, JointKind};
use crate::wrist::WristPose;

/// The 18 independently commanded values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Actuator {
    D1Cmc,
    D1Mcp,
    D1Ip,
    D2Mcp,
    D2Pip,
    D2Dip,
    D3Mcp,
    D3Pip,
    D3Dip,
    D4Mcp,
    D4Pip,
    D4Dip,
    D5Mcp,
    D5Pip,
    D5Dip,
    AbductionServo,
    WristFe,
    WristRud,
}

const NAMES: [&str; 18] = [
    "D1_CMC", "D1_MCP", "D1_IP", "D2_MCP", "D2_PIP", "D2_DIP", "D3_MCP", "D3_PIP", "D3_DIP", "D4_MCP",
    "D4_PIP", "D4_DIP", "D5_MCP", "D5_PIP", "D5_DIP", "ABD_SERVO", "WRIST_FE", "WRIST_RUD",
];

impl Actuator {
    pub const ALL: [Actuator; 18] = [
        Actuator::D1Cmc,
        Actuator::D1Mcp,
        Actuator::D1Ip,
        Actuator::D2Mcp,
        Actuator::D2Pip,
        Actuator::D2Dip,
        Actuator::D3Mcp,
        Actuator::D3Pip,
        Actuator::D3Dip,
        Actuator::D4Mcp,
        Actuator::D4Pip,
        Actuator::D4Dip,
        Actuator::D5Mcp,
        Actuator::D5Pip,
        Actuator::D5Dip,
        Actuator::AbductionServo,
        Actuator::WristFe,
        Actuator::WristRud,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        NAMES[self.index()]
    }

    pub fn from_name(name: &str) -> Option<Actuator> {
        NAMES
            .iter()
            .position(|n| n.eq_ignore_ascii_case(name))
            .map(|i| Actuator::ALL[i])
    }

    /// Non-abduction joint `slot` of a digit: CMC, MCP, IP for the thumb and
    /// MCP, PIP, DIP for fingers.
    pub fn flexion(digit: DigitId, slot: usize) -> Option<Actuator> {
        (slot < 3).then(|| Actuator::ALL[digit.index() * 3 + slot])
    }

    pub fn digit_slot(self) -> Option<(DigitId, usize)> {
        let i = self.index();
        (i < 15).then(|| (DigitId::ALL[i / 3], i % 3))
    }

    pub fn digit(self) -> Option<DigitId> {
        self.digit_slot().map(|(d, _)| d)
    }

    /// Actuators that move points of `digit`, wrist excluded.
    pub fn of_digit(digit: DigitId) -> Vec<Actuator> {
        let mut out: Vec<Actuator> = (0..3).filter_map(|s| Actuator::flexion(digit, s)).collect();
        if matches!(digit, DigitId::D2 | DigitId::D4 | DigitId::D5) {
            out.push(Actuator::AbductionServo);
        }
        out
    }

    pub fn is_wrist(self) -> bool {
        matches!(self, Actuator::WristFe | Actuator::WristRud)
    }
}

impl fmt::Display for Actuator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Actuator {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Actuator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Actuator::from_name(&s).ok_or_else(|| de::Error::custom(format!("unknown actuator {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("{actuator} = {value_deg} deg outside limits [{min_deg}, {max_deg}] deg")]
    OutOfLimits {
        actuator: Actuator,
        value_deg: f64,
        min_deg: f64,
        max_deg: f64,
    },
    #[error("{0} is not finite")]
    NonFinite(Actuator),
}

/// Slack when checking limits, so values produced by clamping and
/// round-tripping through text stay valid.
pub const LIMIT_SLACK_DEG: f64 = 1e-9;

/// The 18 commanded values in degrees (servo degrees for the abduction
/// servo). Serialized as an object keyed by actuator name.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HandState {
    values: [f64; 18],
}

impl HandState {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_values(values: [f64; 18]) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64; 18] {
        &self.values
    }

    pub fn get(&self, a: Actuator) -> f64 {
        self.values[a.index()]
    }

    pub fn set(&mut self, a: Actuator, deg: f64) {
        self.values[a.index()] = deg;
    }

    pub fn with(mut self, a: Actuator, deg: f64) -> Self {
        self.set(a, deg);
        self
    }

    pub fn wrist(&self) -> WristPose {
        WristPose::new(self.get(Actuator::WristFe), self.get(Actuator::WristRud))
    }

    pub fn validate(&self, desc: &HandDescription) -> Result<(), StateError> {
        for a in Actuator::ALL {
            let v = self.get(a);
            if !v.is_finite() {
                return Err(StateError::NonFinite(a));
            }
            let lim = desc.actuator_limits(a);
            if v < lim.min_deg - LIMIT_SLACK_DEG || v > lim.max_deg + LIMIT_SLACK_DEG {
                return Err(StateError::OutOfLimits {
                    actuator: a,
                    value_deg: v,
                    min_deg: lim.min_deg,
                    max_deg: lim.max_deg,
                });
            }
        }
        Ok(())
    }

    pub fn clamped(&self, desc: &HandDescription) -> Self {
        let mut out = *self;
        for a in Actuator::ALL {
            out.values[a.index()] = desc.actuator_limits(a).clamp(self.get(a));
        }
        out
    }

    /// Abduction angle of a digit in degrees; zero for D1 and D3.
    pub fn abduction_deg(&self, desc: &HandDescription, digit: DigitId) -> f64 {
        self.get(Actuator::AbductionServo) * desc.abduction.ratio(digit)
    }

    /// Nut travel of every leadscrew joint, derived from the joint angles.
    pub fn nut_travels(&self, desc: &HandDescription) -> Result<Vec<(Actuator, f64)>, ActuationError> {
        let mut out = Vec::with_capacity(14);
        for d in &desc.digits {
            for (idx, j) in d.joints.iter().enumerate() {
                if j.kind != JointKind::LeadscrewFlexion {
                    continue;
                }
                let act = desc.joint_actuator(d.id, idx);
                let rocker = j.rocker.as_ref().expect("validated rocker");
                let theta = j.limits.clamp(self.get(act));
                out.push((act, joint_angle_to_nut_travel(rocker, theta)?));
            }
        }
        Ok(out)
    }
}

impl Serialize for HandState {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(18))?;
        for a in Actuator::ALL {
            map.serialize_entry(a.name(), &self.get(a))?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for HandState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = HandState;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping actuator names to degrees")
            }
            fn visit_map<M: MapAccess<'de>>(self, mut m: M) -> Result<HandState, M::Error> {
                let mut seen = [false; 18];
                let mut st = HandState::zero();
                while let Some(k) = m.next_key::<String>()? {
                    let a = Actuator::from_name(&k)
                        .ok_or_else(|| de::Error::custom(format!("unknown actuator {k:?}")))?;
                    if seen[a.index()] {
                        return Err(de::Error::custom(format!("duplicate actuator {k:?}")));
                    }
                    seen[a.index()] = true;
                    st.set(a, m.next_value()?);
                }
                if let Some(i) = seen.iter().position(|s| !s) {
                    return Err(de::Error::custom(format!("missing actuator {}", NAMES[i])));
                }
                Ok(st)
            }
        }
        d.deserialize_map(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_hand;

    #[test]
    fn names_round_trip() {
        for a in Actuator::ALL {
            assert_eq!(Actuator::from_name(a.name()), Some(a));
        }
        assert_eq!(Actuator::flexion(DigitId::D2, 0), Some(Actuator::D2Mcp));
        assert_eq!(Actuator::D1Ip.digit_slot(), Some((DigitId::D1, 2)));
        assert_eq!(Actuator::WristFe.digit_slot(), None);
    }

    #[test]
    fn json_round_trip() {
        let st = HandState::zero().with(Actuator::D2Mcp, 45.0).with(Actuator::WristFe, -3.5);
        let text = serde_json::to_string(&st).unwrap();
        let back: HandState = serde_json::from_str(&text).unwrap();
        assert_eq!(st, back);
        assert!(serde_json::from_str::<HandState>(r#"{"D1_CMC": 1.0}"#).is_err());
    }

    #[test]
    fn limits() {
        let d = default_hand();
        HandState::zero().validate(&d).unwrap();
        let bad = HandState::zero().with(Actuator::D2Mcp, 200.0);
        assert!(matches!(bad.validate(&d), Err(StateError::OutOfLimits { .. })));
        bad.clamped(&d).validate(&d).unwrap();
        assert_eq!(bad.clamped(&d).get(Actuator::D2Mcp), 103.13);
    }

    #[test]
    fn nut_travel_at_zero() {
        let d = default_hand();
        let t = HandState::zero().nut_travels(&d).unwrap();
        assert_eq!(t.len(), 14);
        assert!(t.iter().all(|(_, s)| s.abs() < 1e-9));
    }
}
