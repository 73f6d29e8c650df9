use nalgebra::{Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::state::{Actuator, HandState, StateError};
use crate::model::{DigitId, HandDescription, JointKind, JointLimits};
use crate::wrist::wrist_rotation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Site {
    Tip,
    Dip,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainLink {
    pub actuator: Actuator,
    /// Rotation axis in the frame of the preceding link.
    pub axis: Vector3<f64>,
    /// Joint radians per actuator radian.
    pub ratio: f64,
    pub length_mm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DigitChain {
    pub digit: DigitId,
    pub base_position: Vector3<f64>,
    pub base_rotation: Rotation3<f64>,
    pub links: Vec<ChainLink>,
}

/// World-frame geometry of one digit at a given state.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitFrames {
    /// Origin of each link's joint.
    pub origins: Vec<Vector3<f64>>,
    /// World axis of each link's joint.
    pub axes: Vec<Vector3<f64>>,
    /// Base followed by the far end of every link with non-zero length.
    pub points: Vec<Vector3<f64>>,
    pub dip: Vector3<f64>,
    pub tip: Vector3<f64>,
    pub tip_rotation: Rotation3<f64>,
}

impl DigitFrames {
    pub fn site(&self, site: Site) -> Vector3<f64> {
        match site {
            Site::Tip => self.tip,
            Site::Dip => self.dip,
        }
    }
}

/// Precomputed serial chains of a description.
#[derive(Debug, Clone, PartialEq)]
pub struct HandKinematics {
    chains: Vec<DigitChain>,
    limits: [JointLimits; 18],
    abduction_ratio: [f64; 5],
}

impl HandKinematics {
    pub fn new(desc: &HandDescription) -> Self {
        let chains = DigitId::ALL
            .iter()
            .map(|&id| {
                let d = desc.digit(id);
                let [roll, pitch, yaw] = d.base.rpy_deg.map(f64::to_radians);
                let links = d
                    .joints
                    .iter()
                    .enumerate()
                    .map(|(idx, j)| ChainLink {
                        actuator: desc.joint_actuator(id, idx),
                        axis: match j.kind {
                            JointKind::LeadscrewFlexion => Vector3::y(),
                            JointKind::WormCmc | JointKind::CoupledAbduction => Vector3::z(),
                        },
                        ratio: match j.kind {
                            JointKind::CoupledAbduction => desc.abduction.ratio(id),
                            _ => 1.0,
                        },
                        length_mm: j.link_mm,
                    })
                    .collect();
                DigitChain {
                    digit: id,
                    base_position: Vector3::from(d.base.position_mm),
                    base_rotation: Rotation3::from_euler_angles(roll, pitch, yaw),
                    links,
                }
            })
            .collect();
        Self {
            chains,
            limits: Actuator::ALL.map(|a| desc.actuator_limits(a)),
            abduction_ratio: DigitId::ALL.map(|d| desc.abduction.ratio(d)),
        }
    }

    pub fn chain(&self, digit: DigitId) -> &DigitChain {
        &self.chains[digit.index()]
    }

    pub fn limits(&self, a: Actuator) -> JointLimits {
        self.limits[a.index()]
    }

    pub fn abduction_ratio(&self, digit: DigitId) -> f64 {
        self.abduction_ratio[digit.index()]
    }

    pub fn reach_mm(&self, digit: DigitId) -> f64 {
        self.chain(digit).links.iter().map(|l| l.length_mm).sum()
    }

    /// Chain geometry without limit checks; callers validate the state.
    pub fn frames(&self, state: &HandState, digit: DigitId) -> DigitFrames {
        let chain = self.chain(digit);
        let wrist = wrist_rotation(state.wrist());
        let mut rot = wrist * chain.base_rotation;
        let mut pos = wrist * chain.base_position;
        let n = chain.links.len();
        let mut origins = Vec::with_capacity(n);
        let mut axes = Vec::with_capacity(n);
        let mut points = vec![pos];
        for link in &chain.links {
            let world_axis = rot * link.axis;
            origins.push(pos);
            axes.push(world_axis);
            let angle = state.get(link.actuator).to_radians() * link.ratio;
            rot *= Rotation3::from_axis_angle(&nalgebra::Unit::new_unchecked(link.axis), angle);
            if link.length_mm > 0.0 {
                pos += rot * Vector3::new(link.length_mm, 0.0, 0.0);
                points.push(pos);
            }
        }
        let dip = points[points.len() - 2];
        DigitFrames {
            origins,
            axes,
            dip,
            tip: pos,
            tip_rotation: rot,
            points,
        }
    }

    pub fn site(&self, state: &HandState, digit: DigitId, site: Site) -> Vector3<f64> {
        self.frames(state, digit).site(site)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position_mm: [f64; 3],
    /// Unit quaternion `[w, x, y, z]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitPose {
    pub digit: DigitId,
    pub dip: Pose,
    pub tip: Pose,
    /// Base, joint centres and tip, for drawing.
    pub joints_mm: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandPose {
    pub digits: Vec<DigitPose>,
}

impl HandPose {
    pub fn digit(&self, id: DigitId) -> &DigitPose {
        &self.digits[id.index()]
    }

    pub fn tip(&self, id: DigitId) -> Vector3<f64> {
        Vector3::from(self.digit(id).tip.position_mm)
    }

    pub fn dip(&self, id: DigitId) -> Vector3<f64> {
        Vector3::from(self.digit(id).dip.position_mm)
    }
}

fn to_array(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// DIP and tip poses of every digit in the forearm frame (origin at the
/// wrist universal joint), after the wrist rotation.
pub fn forward_kinematics(desc: &HandDescription, state: &HandState) -> Result<HandPose, StateError> {
    state.validate(desc)?;
    Ok(HandKinematics::new(desc).pose(state))
}

impl HandKinematics {
    /// Forward kinematics without the limit check.
    pub fn pose(&self, state: &HandState) -> HandPose {
        let digits = DigitId::ALL
            .iter()
            .map(|&id| {
                let f = self.frames(state, id);
                let q = UnitQuaternion::from_rotation_matrix(&f.tip_rotation);
                DigitPose {
                    digit: id,
                    dip: Pose {
                        position_mm: to_array(&f.dip),
                        orientation: None,
                    },
                    tip: Pose {
                        position_mm: to_array(&f.tip),
                        orientation: Some([q.w, q.i, q.j, q.k]),
                    },
                    joints_mm: f.points.iter().map(to_array).collect(),
                }
            })
            .collect();
        HandPose { digits }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_hand;

    #[test]
    fn straight_index_reach() {
        let d = default_hand();
        let p = forward_kinematics(&d, &HandState::zero()).unwrap();
        let base = Vector3::from(d.digit(DigitId::D2).base.position_mm);
        assert!(((p.tip(DigitId::D2) - base).norm() - 130.1).abs() < 1e-9);
        for id in DigitId::FINGERS {
            assert!(p.tip(id).z.abs() < 1e-12);
        }
    }

    #[test]
    fn flexion_moves_palmar() {
        let d = default_hand();
        let st = HandState::zero().with(Actuator::D2Mcp, 30.0);
        let p = forward_kinematics(&d, &st).unwrap();
        assert!(p.tip(DigitId::D2).z < 0.0);
        let st = HandState::zero().with(Actuator::AbductionServo, 300.0);
        let p = forward_kinematics(&d, &st).unwrap();
        assert!(p.tip(DigitId::D2).y > 28.5);
        assert!(p.tip(DigitId::D4).y < -9.5);
        assert_eq!(p.tip(DigitId::D3).y, 9.5);
    }

    #[test]
    fn quaternion_is_unit() {
        let d = default_hand();
        let st = HandState::zero().with(Actuator::D1Cmc, 40.0).with(Actuator::WristFe, 20.0);
        let p = forward_kinematics(&d, &st).unwrap();
        for dp in &p.digits {
            let q = dp.tip.orientation.unwrap();
            let n: f64 = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_out_of_limits() {
        let d = default_hand();
        let st = HandState::zero().with(Actuator::D3Dip, -5.0);
        assert!(forward_kinematics(&d, &st).is_err());
    }
}
