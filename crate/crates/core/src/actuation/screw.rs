use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{require, ActuationError};

/// Leadscrew parameters for one finger joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScrewParams {
    pub lead_mm: f64,
    pub mean_diameter_mm: f64,
    pub friction: f64,
    pub stroke_mm: f64,
}

impl ScrewParams {
    /// M2.5 finger screw: 0.35 mm lead, 2.50 mm mean diameter, dry
    /// stainless-on-stainless friction of 0.42.
    pub fn finger(stroke_mm: f64) -> Self {
        Self {
            lead_mm: 0.35,
            mean_diameter_mm: 2.50,
            friction: 0.42,
            stroke_mm,
        }
    }

    pub fn validate(&self) -> Result<(), ActuationError> {
        require(self.lead_mm > 0.0, "lead_mm", "> 0", self.lead_mm)?;
        require(
            self.mean_diameter_mm > 0.0,
            "mean_diameter_mm",
            "> 0",
            self.mean_diameter_mm,
        )?;
        require(self.friction >= 0.0, "friction", ">= 0", self.friction)?;
        require(self.stroke_mm > 0.0, "stroke_mm", "> 0", self.stroke_mm)
    }
}

/// Worm drive parameters (thumb CMC).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WormParams {
    pub lead_mm: f64,
    pub pitch_diameter_mm: f64,
    pub friction: f64,
    /// Worm-wheel teeth per worm start.
    pub ratio: f64,
}

impl WormParams {
    /// Thumb CMC worm: 2.5 mm lead, 9.49 mm pitch diameter, printed
    /// aluminium pair with friction 0.46.
    pub fn thumb_cmc() -> Self {
        Self {
            lead_mm: 2.5,
            pitch_diameter_mm: 9.49,
            friction: 0.46,
            ratio: 30.0,
        }
    }

    pub fn validate(&self) -> Result<(), ActuationError> {
        require(self.lead_mm > 0.0, "lead_mm", "> 0", self.lead_mm)?;
        require(
            self.pitch_diameter_mm > 0.0,
            "pitch_diameter_mm",
            "> 0",
            self.pitch_diameter_mm,
        )?;
        require(self.friction > 0.0, "friction", "> 0", self.friction)?;
        require(self.ratio > 0.0, "ratio", "> 0", self.ratio)
    }
}

/// Helix lead angle `atan(l / (pi d))`, in degrees.
pub fn lead_angle(lead_mm: f64, mean_diameter_mm: f64) -> Result<f64, ActuationError> {
    require(lead_mm >= 0.0, "lead_mm", ">= 0", lead_mm)?;
    require(
        mean_diameter_mm > 0.0,
        "mean_diameter_mm",
        "> 0",
        mean_diameter_mm,
    )?;
    Ok((lead_mm / (PI * mean_diameter_mm)).atan().to_degrees())
}

/// Static friction angle `atan(mu)`, in degrees.
pub fn friction_angle(friction: f64) -> Result<f64, ActuationError> {
    require(friction >= 0.0, "friction", ">= 0", friction)?;
    Ok(friction.atan().to_degrees())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfLock {
    pub lead_angle_deg: f64,
    pub friction_angle_deg: f64,
    /// Friction angle minus lead angle.
    pub margin_deg: f64,
    pub locking: bool,
}

fn self_lock(lead_mm: f64, diameter_mm: f64, friction: f64) -> Result<SelfLock, ActuationError> {
    let lead_angle_deg = lead_angle(lead_mm, diameter_mm)?;
    let friction_angle_deg = friction_angle(friction)?;
    let margin_deg = friction_angle_deg - lead_angle_deg;
    Ok(SelfLock {
        lead_angle_deg,
        friction_angle_deg,
        margin_deg,
        locking: friction_angle_deg > lead_angle_deg,
    })
}

/// A screw is self-locking when its friction angle exceeds its lead angle:
/// an axial load on the nut can then never back-drive the screw.
pub fn self_lock_margin(screw: &ScrewParams) -> Result<SelfLock, ActuationError> {
    screw.validate()?;
    self_lock(screw.lead_mm, screw.mean_diameter_mm, screw.friction)
}

pub fn worm_self_lock(worm: &WormParams) -> Result<SelfLock, ActuationError> {
    worm.validate()?;
    self_lock(worm.lead_mm, worm.pitch_diameter_mm, worm.friction)
}

/// Axial nut force (N) produced by a screw torque (N mm) while raising a
/// load: `W = 2T (pi d - mu l) / (d (l + pi mu d))`.
pub fn screw_axial_force(torque_nmm: f64, screw: &ScrewParams) -> f64 {
    let (l, d, mu) = (screw.lead_mm, screw.mean_diameter_mm, screw.friction);
    2.0 * torque_nmm * (PI * d - mu * l) / (d * (l + PI * mu * d))
}

/// Screw torque (N mm) needed to raise an axial load `W` (N).
pub fn raising_torque(axial_n: f64, screw: &ScrewParams) -> f64 {
    let (l, d, mu) = (screw.lead_mm, screw.mean_diameter_mm, screw.friction);
    axial_n * d / 2.0 * (l + PI * mu * d) / (PI * d - mu * l)
}

/// Screw torque (N mm) that must be applied to lower an axial load `W` (N).
///
/// Positive means friction alone holds the load; negative means the load
/// back-drives the screw unless the motor resists.
pub fn holding_torque(axial_n: f64, lead_mm: f64, diameter_mm: f64, friction: f64) -> f64 {
    axial_n * diameter_mm / 2.0 * (PI * friction * diameter_mm - lead_mm)
        / (PI * diameter_mm + friction * lead_mm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finger_screw_locks() {
        let lock = self_lock_margin(&ScrewParams::finger(16.0)).unwrap();
        assert!(lock.locking);
        assert!((lock.lead_angle_deg - 2.55).abs() < 0.01);
    }

    #[test]
    fn worm_margin() {
        let lock = worm_self_lock(&WormParams::thumb_cmc()).unwrap();
        assert!(lock.locking);
        assert!((lock.margin_deg - 19.90).abs() < 0.01, "{}", lock.margin_deg);
    }

    #[test]
    fn steep_screw_is_not_locking() {
        let screw = ScrewParams {
            lead_mm: 2.5,
            mean_diameter_mm: 2.5,
            friction: 0.10,
            stroke_mm: 10.0,
        };
        let lock = self_lock_margin(&screw).unwrap();
        assert!(!lock.locking);
        assert!((lock.lead_angle_deg - 17.66).abs() < 0.01);
        assert!((lock.friction_angle_deg - 5.71).abs() < 0.01);
    }

    #[test]
    fn zero_lead_and_zero_friction() {
        assert_eq!(lead_angle(0.0, 3.0).unwrap(), 0.0);
        assert_eq!(friction_angle(0.0).unwrap(), 0.0);
    }

    #[test]
    fn guards() {
        assert!(lead_angle(0.35, 0.0).is_err());
        assert!(lead_angle(0.35, -1.0).is_err());
        assert!(friction_angle(-0.1).is_err());
        assert!(friction_angle(f64::NAN).is_err());
    }

    #[test]
    fn torque_force_inverse() {
        let screw = ScrewParams::finger(16.0);
        let w = screw_axial_force(50.0, &screw);
        assert!((raising_torque(w, &screw) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn holding_sign_follows_self_lock() {
        let s = ScrewParams::finger(16.0);
        assert!(holding_torque(44.5, s.lead_mm, s.mean_diameter_mm, s.friction) > 0.0);
        assert!(holding_torque(44.5, 2.5, 2.5, 0.1) < 0.0);
    }
}
