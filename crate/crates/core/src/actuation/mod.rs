//! Transmission mathematics.
//!
//! Every finger phalanx is driven by a motor whose output shaft is a leadscrew.
//! The nut rides on the screw and pins into the next phalanx, so screw, nut and
//! the two phalanges form a triangle with one variable-length side. The thumb
//! CMC uses a worm drive instead, and a single servo drives the coupled
//! abduction of D2, D4 and D5 through a bevel stage and three worms.

mod abduction;
mod rocker;
mod screw;
mod statics;

pub use abduction::{abduction_map, calibrate_wheel_radius, AbductionTrain, AbductionWorm, Handedness};
pub use rocker::{
    calibrate_rocker, joint_angle_to_nut_travel, moment_arm, nut_center_distance,
    nut_travel_to_joint_angle, RockerGeometry,
};
pub use screw::{
    friction_angle, holding_torque, lead_angle, raising_torque, screw_axial_force,
    self_lock_margin, worm_self_lock, ScrewParams, SelfLock, WormParams,
};
pub use statics::{
    back_drive, calibrate_nominal_torque, mid_flexion_force, mid_flexion_state, static_fingertip_force, BackDriveJoint,
    BackDriveReport, FingertipForce, JointStatics,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActuationError {
    #[error("{param} must be {requirement}, got {value}")]
    InvalidParameter {
        param: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("side length {length_mm} mm violates the triangle inequality for a = {anchor_mm} mm, b = {pivot_mm} mm")]
    TriangleInfeasible {
        length_mm: f64,
        anchor_mm: f64,
        pivot_mm: f64,
    },
    #[error("nut travel {travel_mm} mm is outside the usable stroke [0, {stroke_mm}] mm")]
    OutsideStroke { travel_mm: f64, stroke_mm: f64 },
    #[error("joint angle {angle_deg} deg is outside [{min_deg}, {max_deg}] deg")]
    AngleOutOfRange {
        angle_deg: f64,
        min_deg: f64,
        max_deg: f64,
    },
    #[error("collinear rocker configuration (interior angle {interior_deg} deg) has no moment arm")]
    DegenerateMomentArm { interior_deg: f64 },
    #[error("servo angle {angle_deg} deg is outside [{min_deg}, {max_deg}] deg")]
    ServoOutOfRange {
        angle_deg: f64,
        min_deg: f64,
        max_deg: f64,
    },
    #[error("rocker calibration infeasible: {constraint}")]
    CalibrationInfeasible { constraint: String },
    #[error("contact point {contact_mm} mm is off the distal link (length {link_mm} mm)")]
    ContactOffLink { contact_mm: f64, link_mm: f64 },
    #[error("digit {0} has no leadscrew flexion chain")]
    NoFlexionChain(String),
    #[error("expected {expected} motor torques, got {found}")]
    TorqueCount { expected: usize, found: usize },
    #[error("no joint of the chain has a lever arm to the contact point")]
    DegenerateLever,
    #[error(transparent)]
    State(#[from] crate::kinematics::StateError),
}

pub(crate) fn require(
    cond: bool,
    param: &'static str,
    requirement: &'static str,
    value: f64,
) -> Result<(), ActuationError> {
    if cond && value.is_finite() {
        Ok(())
    } else {
        Err(ActuationError::InvalidParameter {
            param,
            requirement,
            value,
        })
    }
}
