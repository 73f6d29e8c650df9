use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{require, ActuationError};
use crate::model::DigitId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Handedness {
    Left,
    Right,
}

impl Handedness {
    pub fn sign(self) -> f64 {
        match self {
            Handedness::Left => 1.0,
            Handedness::Right => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbductionWorm {
    pub digit: DigitId,
    pub pitch_mm: f64,
    pub handedness: Handedness,
    pub wheel_radius_mm: f64,
}

/// Servo pinion, bevel gear and one worm per abducting finger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbductionTrain {
    pub pinion_teeth: u32,
    pub bevel_teeth: u32,
    pub servo_min_deg: f64,
    pub servo_max_deg: f64,
    pub worms: Vec<AbductionWorm>,
}

impl AbductionTrain {
    /// D2 left-handed 2 mm, D4 right-handed 2 mm, D5 right-handed 2.63 mm,
    /// wheel radii calibrated so full servo travel reproduces the measured
    /// abduction totals.
    pub fn default_train() -> Self {
        let (min, max) = (-720.0, 720.0);
        let gear = 12.0 / 24.0;
        let worm = |digit, pitch_mm, handedness, total_deg| AbductionWorm {
            digit,
            pitch_mm,
            handedness,
            wheel_radius_mm: calibrate_wheel_radius(pitch_mm, total_deg, max - min, gear)
                .expect("default abduction calibration"),
        };
        Self {
            pinion_teeth: 12,
            bevel_teeth: 24,
            servo_min_deg: min,
            servo_max_deg: max,
            worms: vec![
                worm(DigitId::D2, 2.0, Handedness::Left, 26.73),
                worm(DigitId::D4, 2.0, Handedness::Right, 26.73),
                worm(DigitId::D5, 2.63, Handedness::Right, 39.37),
            ],
        }
    }

    pub fn gear_ratio(&self) -> f64 {
        self.pinion_teeth as f64 / self.bevel_teeth as f64
    }

    /// Finger abduction angle per servo degree, signed.
    pub fn ratio(&self, digit: DigitId) -> f64 {
        self.worms
            .iter()
            .find(|w| w.digit == digit)
            .map(|w| self.gear_ratio() * w.pitch_mm / (2.0 * PI * w.wheel_radius_mm) * w.handedness.sign())
            .unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), ActuationError> {
        require(self.pinion_teeth > 0, "pinion_teeth", "> 0", self.pinion_teeth as f64)?;
        require(self.bevel_teeth > 0, "bevel_teeth", "> 0", self.bevel_teeth as f64)?;
        require(
            self.servo_max_deg > self.servo_min_deg,
            "servo_max_deg",
            "> servo_min_deg",
            self.servo_max_deg,
        )?;
        require(self.servo_min_deg.is_finite(), "servo_min_deg", "finite", self.servo_min_deg)?;
        for w in &self.worms {
            require(w.pitch_mm > 0.0, "pitch_mm", "> 0", w.pitch_mm)?;
            require(w.wheel_radius_mm > 0.0, "wheel_radius_mm", "> 0", w.wheel_radius_mm)?;
        }
        Ok(())
    }
}

/// Wheel radius that turns a full servo sweep into the requested abduction
/// total.
pub fn calibrate_wheel_radius(
    pitch_mm: f64,
    total_deg: f64,
    servo_span_deg: f64,
    gear_ratio: f64,
) -> Result<f64, ActuationError> {
    require(pitch_mm > 0.0, "pitch_mm", "> 0", pitch_mm)?;
    require(total_deg > 0.0, "total_deg", "> 0", total_deg)?;
    require(servo_span_deg > 0.0, "servo_span_deg", "> 0", servo_span_deg)?;
    require(gear_ratio > 0.0, "gear_ratio", "> 0", gear_ratio)?;
    Ok(servo_span_deg * gear_ratio * pitch_mm / (2.0 * PI * total_deg))
}

/// Abduction angle (degrees) of every digit, indexed D1..D5, for a servo
/// angle. D1 and D3 are not coupled to the train and always read zero.
pub fn abduction_map(servo_deg: f64, train: &AbductionTrain) -> Result<[f64; 5], ActuationError> {
    if !servo_deg.is_finite() || servo_deg < train.servo_min_deg || servo_deg > train.servo_max_deg {
        return Err(ActuationError::ServoOutOfRange {
            angle_deg: servo_deg,
            min_deg: train.servo_min_deg,
            max_deg: train.servo_max_deg,
        });
    }
    let mut out = [0.0; 5];
    for w in &train.worms {
        out[w.digit.index()] = servo_deg * train.ratio(w.digit);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_sweep_totals() {
        let t = AbductionTrain::default_train();
        let lo = abduction_map(t.servo_min_deg, &t).unwrap();
        let hi = abduction_map(t.servo_max_deg, &t).unwrap();
        assert!(((hi[1] - lo[1]).abs() - 26.73).abs() < 1e-9);
        assert!(((hi[3] - lo[3]).abs() - 26.73).abs() < 1e-9);
        assert!(((hi[4] - lo[4]).abs() - 39.37).abs() < 1e-9);
        assert_eq!(hi[2], 0.0);
        assert_eq!(hi[0], 0.0);
    }

    #[test]
    fn neutral_and_guard() {
        let t = AbductionTrain::default_train();
        assert_eq!(abduction_map(0.0, &t).unwrap(), [0.0; 5]);
        assert!(abduction_map(721.0, &t).is_err());
    }

    #[test]
    fn mirror_symmetry() {
        let t = AbductionTrain::default_train();
        for k in -20..=20 {
            let m = abduction_map(k as f64 * 36.0, &t).unwrap();
            assert_eq!(m[1], -m[3]);
            if k != 0 {
                assert!(m[4].abs() > m[1].abs());
            }
        }
    }

    #[test]
    fn radii() {
        let t = AbductionTrain::default_train();
        assert!((t.worms[0].wheel_radius_mm - 8.574).abs() < 1e-3);
        assert!((t.worms[2].wheel_radius_mm - 7.655).abs() < 1e-3);
    }
}
