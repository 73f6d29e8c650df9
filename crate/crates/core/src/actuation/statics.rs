use serde::Serialize;

use super::rocker::{joint_angle_to_nut_travel, moment_arm};
use super::screw::{holding_torque, screw_axial_force, self_lock_margin};
use super::ActuationError;
use crate::kinematics::{Actuator, HandState};
use crate::model::{DigitId, HandDescription, JointKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointStatics {
    pub actuator: Actuator,
    pub motor_torque_nmm: f64,
    /// Nut force from the raising-torque relation.
    pub axial_force_n: f64,
    pub moment_arm_mm: f64,
    pub joint_torque_nmm: f64,
    /// Perpendicular distance from the joint axis to the contact force line.
    pub lever_mm: f64,
    /// Fingertip force this joint alone could sustain.
    pub tip_force_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FingertipForce {
    pub digit: DigitId,
    pub force_n: f64,
    pub limiting: Option<Actuator>,
    pub joints: Vec<JointStatics>,
}

/// Planar geometry of a digit's leadscrew chain: for each joint its
/// actuator, angle, rocker index into `digit.joints`, and lever to a contact
/// force normal to the distal link.
struct PlanarChain {
    joints: Vec<(Actuator, f64, usize, f64)>,
}

fn planar_chain(
    desc: &HandDescription,
    digit: DigitId,
    state: &HandState,
    contact_mm: f64,
) -> Result<PlanarChain, ActuationError> {
    let d = desc.digit(digit);
    let idx: Vec<usize> = d.flexion_joints().map(|(i, _)| i).collect();
    let last = *idx.last().ok_or_else(|| ActuationError::NoFlexionChain(digit.to_string()))?;
    let distal = d.joints[last].link_mm;
    if !(contact_mm > 0.0 && contact_mm <= distal) {
        return Err(ActuationError::ContactOffLink {
            contact_mm,
            link_mm: distal,
        });
    }
    // Joint centres in the flexion plane, x along the straight digit and y
    // dorsal.
    let mut phi = 0.0;
    let mut p = (0.0, 0.0);
    let mut centres = Vec::new();
    let mut angles = Vec::new();
    for &i in &idx {
        let act = desc.joint_actuator(digit, i);
        let theta = state.get(act);
        let lim = d.joints[i].limits;
        if !lim.contains(theta) {
            return Err(ActuationError::AngleOutOfRange {
                angle_deg: theta,
                min_deg: lim.min_deg,
                max_deg: lim.max_deg,
            });
        }
        centres.push(p);
        angles.push((act, theta, i));
        phi += theta.to_radians();
        let len = if i == last { contact_mm } else { d.joints[i].link_mm };
        p = (p.0 + len * phi.cos(), p.1 - len * phi.sin());
    }
    let normal = (-phi.sin(), -phi.cos());
    let joints = angles
        .into_iter()
        .zip(centres)
        .map(|((act, theta, i), c)| {
            let r = (p.0 - c.0, p.1 - c.1);
            (act, theta, i, (r.0 * normal.1 - r.1 * normal.0).abs())
        })
        .collect();
    Ok(PlanarChain { joints })
}

/// Fingertip normal force (N) the digit can press with: each joint's screw
/// torque becomes a nut force, then a joint torque through the rocker moment
/// arm, and the weakest joint sets the force.
pub fn static_fingertip_force(
    desc: &HandDescription,
    digit: DigitId,
    state: &HandState,
    motor_torques_nmm: &[f64],
    contact_mm: f64,
) -> Result<FingertipForce, ActuationError> {
    let chain = planar_chain(desc, digit, state, contact_mm)?;
    if motor_torques_nmm.len() != chain.joints.len() {
        return Err(ActuationError::TorqueCount {
            expected: chain.joints.len(),
            found: motor_torques_nmm.len(),
        });
    }
    let d = desc.digit(digit);
    let mut joints = Vec::new();
    let mut best: Option<(f64, Actuator)> = None;
    for (&(act, theta, i, lever), &torque) in chain.joints.iter().zip(motor_torques_nmm) {
        let spec = &d.joints[i];
        let screw = spec.screw.as_ref().ok_or_else(|| ActuationError::NoFlexionChain(digit.to_string()))?;
        let rocker = spec.rocker.as_ref().ok_or_else(|| ActuationError::NoFlexionChain(digit.to_string()))?;
        let w = screw_axial_force(torque, screw);
        let r = moment_arm(rocker, theta)?;
        let tau = w * r;
        let tip = if lever > 1e-9 { tau / lever } else { f64::INFINITY };
        if lever > 1e-9 && best.is_none_or(|(f, _)| tip < f) {
            best = Some((tip, act));
        }
        joints.push(JointStatics {
            actuator: act,
            motor_torque_nmm: torque,
            axial_force_n: w,
            moment_arm_mm: r,
            joint_torque_nmm: tau,
            lever_mm: lever,
            tip_force_n: tip,
        });
    }
    let (force_n, limiting) = best.ok_or(ActuationError::DegenerateLever)?;
    Ok(FingertipForce {
        digit,
        force_n,
        limiting: Some(limiting),
        joints,
    })
}

/// Every leadscrew joint at the middle of its range, wrist and abduction
/// neutral.
pub fn mid_flexion_state(desc: &HandDescription) -> HandState {
    let mut st = HandState::zero();
    for d in &desc.digits {
        for (i, j) in d.joints.iter().enumerate() {
            if j.kind != JointKind::CoupledAbduction {
                st.set(desc.joint_actuator(d.id, i), j.limits.mid());
            }
        }
    }
    st
}

/// Fingertip force at mid-flexion with every motor at `torque_nmm`, contact
/// at the configured fraction of the distal link.
pub fn mid_flexion_force(desc: &HandDescription, digit: DigitId, torque_nmm: f64) -> Result<FingertipForce, ActuationError> {
    let d = desc.digit(digit);
    let n = d.flexion_joints().count();
    let (last, _) = d.flexion_joints().last().ok_or_else(|| ActuationError::NoFlexionChain(digit.to_string()))?;
    let contact = desc.statics.contact_fraction * d.joints[last].link_mm;
    static_fingertip_force(desc, digit, &mid_flexion_state(desc), &vec![torque_nmm; n], contact)
}

/// Smallest motor torque (N mm), rounded up to `step_nmm`, for which every
/// digit presses at least `force_n` at mid-flexion. Force is linear in
/// torque, so one unit-torque evaluation per digit suffices.
pub fn calibrate_nominal_torque(desc: &HandDescription, force_n: f64, step_nmm: f64) -> Result<f64, ActuationError> {
    let mut worst = f64::INFINITY;
    for id in DigitId::ALL {
        worst = worst.min(mid_flexion_force(desc, id, 1.0)?.force_n);
    }
    Ok((force_n / worst / step_nmm).ceil() * step_nmm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BackDriveJoint {
    pub actuator: Actuator,
    pub external_torque_nmm: f64,
    pub axial_load_n: f64,
    /// Screw torque friction supplies against the load; negative means the
    /// motor would have to hold.
    pub holding_torque_nmm: f64,
    pub locking: bool,
    /// Nut travel caused by the load with the motor unpowered.
    pub nut_motion_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackDriveReport {
    pub digit: DigitId,
    pub load_n: f64,
    pub joints: Vec<BackDriveJoint>,
}

impl BackDriveReport {
    pub fn max_motion_mm(&self) -> f64 {
        self.joints.iter().map(|j| j.nut_motion_mm).fold(0.0, f64::max)
    }
}

/// Unpowered response to an external fingertip load: a self-locking screw
/// holds, a non-locking one runs to the end of its stroke.
pub fn back_drive(
    desc: &HandDescription,
    digit: DigitId,
    state: &HandState,
    load_n: f64,
    contact_mm: f64,
) -> Result<BackDriveReport, ActuationError> {
    super::require(load_n >= 0.0, "load_n", ">= 0", load_n)?;
    let chain = planar_chain(desc, digit, state, contact_mm)?;
    let d = desc.digit(digit);
    let mut joints = Vec::new();
    for &(act, theta, i, lever) in &chain.joints {
        let spec = &d.joints[i];
        let screw = spec.screw.as_ref().ok_or_else(|| ActuationError::NoFlexionChain(digit.to_string()))?;
        let rocker = spec.rocker.as_ref().ok_or_else(|| ActuationError::NoFlexionChain(digit.to_string()))?;
        let tau = load_n * lever;
        let w = tau / moment_arm(rocker, theta)?;
        let lock = self_lock_margin(screw)?;
        let travel = joint_angle_to_nut_travel(rocker, theta)?;
        // The load extends the joint; extension moves the nut toward zero
        // travel for a lengthening rocker and toward full stroke otherwise.
        let free_run = if rocker.direction > 0.0 { travel } else { rocker.stroke_mm - travel };
        joints.push(BackDriveJoint {
            actuator: act,
            external_torque_nmm: tau,
            axial_load_n: w,
            holding_torque_nmm: holding_torque(w, screw.lead_mm, screw.mean_diameter_mm, screw.friction),
            locking: lock.locking,
            nut_motion_mm: if lock.locking || w == 0.0 { 0.0 } else { free_run },
        });
    }
    Ok(BackDriveReport { digit, load_n, joints })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_hand;

    #[test]
    fn zero_torque_zero_force() {
        let d = default_hand();
        let st = mid_flexion_state(&d);
        let f = static_fingertip_force(&d, DigitId::D2, &st, &[0.0; 3], 20.0).unwrap();
        assert_eq!(f.force_n, 0.0);
    }

    #[test]
    fn homogeneous_in_torque() {
        let d = default_hand();
        let st = mid_flexion_state(&d);
        let a = static_fingertip_force(&d, DigitId::D4, &st, &[10.0, 20.0, 30.0], 25.0).unwrap();
        let b = static_fingertip_force(&d, DigitId::D4, &st, &[20.0, 40.0, 60.0], 25.0).unwrap();
        assert!((b.force_n - 2.0 * a.force_n).abs() < 1e-9 * b.force_n);
    }

    #[test]
    fn distal_lever_is_contact_distance() {
        let d = default_hand();
        let st = mid_flexion_state(&d);
        let f = static_fingertip_force(&d, DigitId::D2, &st, &[1.0; 3], 12.5).unwrap();
        assert!((f.joints[2].lever_mm - 12.5).abs() < 1e-12);
    }

    #[test]
    fn guards() {
        let d = default_hand();
        let st = mid_flexion_state(&d);
        assert!(matches!(
            static_fingertip_force(&d, DigitId::D2, &st, &[1.0; 3], 500.0),
            Err(ActuationError::ContactOffLink { .. })
        ));
        assert!(matches!(
            static_fingertip_force(&d, DigitId::D2, &st, &[1.0; 2], 10.0),
            Err(ActuationError::TorqueCount { .. })
        ));
    }

    #[test]
    fn payload_does_not_back_drive() {
        let d = default_hand();
        let st = mid_flexion_state(&d);
        for id in DigitId::ALL {
            let distal = d.digit(id).joints.last().unwrap().link_mm;
            let r = back_drive(&d, id, &st, 44.5, distal).unwrap();
            assert!(r.joints.iter().all(|j| j.locking && j.holding_torque_nmm > 0.0));
            assert_eq!(r.max_motion_mm(), 0.0);
        }
    }
}
