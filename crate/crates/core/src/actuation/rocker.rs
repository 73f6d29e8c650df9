use serde::{Deserialize, Serialize};

use super::{require, ActuationError};

const COLLINEAR_EPS: f64 = 1e-12;

/// Triangle formed by the joint axis, the screw anchor on the lower link and
/// the nut pivot on the upper link. The screw side has length
/// `base_length_mm + s` where `s` is the nut travel along the usable stroke.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RockerGeometry {
    /// Joint axis to screw anchor on the lower link.
    pub anchor_mm: f64,
    /// Joint axis to nut pivot on the upper link.
    pub pivot_mm: f64,
    /// Interior angle at zero joint angle.
    pub offset_deg: f64,
    /// +1 when flexion lengthens the screw side, -1 when it shortens it.
    pub direction: f64,
    /// Screw side length at zero nut travel.
    pub base_length_mm: f64,
    pub stroke_mm: f64,
}

impl RockerGeometry {
    pub fn validate(&self) -> Result<(), ActuationError> {
        require(self.anchor_mm > 0.0, "anchor_mm", "> 0", self.anchor_mm)?;
        require(self.pivot_mm > 0.0, "pivot_mm", "> 0", self.pivot_mm)?;
        require(self.offset_deg.is_finite(), "offset_deg", "finite", self.offset_deg)?;
        require(
            self.direction == 1.0 || self.direction == -1.0,
            "direction",
            "+1 or -1",
            self.direction,
        )?;
        require(
            self.base_length_mm >= 0.0,
            "base_length_mm",
            ">= 0",
            self.base_length_mm,
        )?;
        require(self.stroke_mm > 0.0, "stroke_mm", "> 0", self.stroke_mm)?;
        for s in [0.0, self.stroke_mm] {
            self.interior_angle(self.base_length_mm + s)?;
        }
        Ok(())
    }

    /// Interior angle (radians) opposite the screw side of length `side_mm`.
    pub fn interior_angle(&self, side_mm: f64) -> Result<f64, ActuationError> {
        let (a, b) = (self.anchor_mm, self.pivot_mm);
        let c = (a * a + b * b - side_mm * side_mm) / (2.0 * a * b);
        if !c.is_finite() || c.abs() > 1.0 + 1e-12 || side_mm < 0.0 {
            return Err(ActuationError::TriangleInfeasible {
                length_mm: side_mm,
                anchor_mm: a,
                pivot_mm: b,
            });
        }
        Ok(c.clamp(-1.0, 1.0).acos())
    }

    fn side_length(&self, interior: f64) -> f64 {
        let (a, b) = (self.anchor_mm, self.pivot_mm);
        (a * a + b * b - 2.0 * a * b * interior.cos()).max(0.0).sqrt()
    }

    fn interior_at(&self, theta_deg: f64) -> f64 {
        self.direction * theta_deg.to_radians() + self.offset_deg.to_radians()
    }

    /// Joint angles at zero travel and at full stroke, in degrees.
    pub fn endpoint_angles(&self) -> Result<(f64, f64), ActuationError> {
        let lo = nut_travel_to_joint_angle(self, 0.0)?;
        let hi = nut_travel_to_joint_angle(self, self.stroke_mm)?;
        Ok((lo.min(hi), lo.max(hi)))
    }
}

/// Joint angle (degrees) for nut travel `s` (mm) from the law of cosines.
pub fn nut_travel_to_joint_angle(geom: &RockerGeometry, s: f64) -> Result<f64, ActuationError> {
    let psi = geom.interior_angle(geom.base_length_mm + s)?;
    if !(0.0..=geom.stroke_mm).contains(&s) {
        return Err(ActuationError::OutsideStroke {
            travel_mm: s,
            stroke_mm: geom.stroke_mm,
        });
    }
    Ok(geom.direction * (psi - geom.offset_deg.to_radians()).to_degrees())
}

/// Inverse of [`nut_travel_to_joint_angle`].
pub fn joint_angle_to_nut_travel(geom: &RockerGeometry, theta_deg: f64) -> Result<f64, ActuationError> {
    let (min_deg, max_deg) = geom.endpoint_angles()?;
    let slack = 1e-9;
    if !theta_deg.is_finite() || theta_deg < min_deg - slack || theta_deg > max_deg + slack {
        return Err(ActuationError::AngleOutOfRange {
            angle_deg: theta_deg,
            min_deg,
            max_deg,
        });
    }
    let s = geom.side_length(geom.interior_at(theta_deg)) - geom.base_length_mm;
    Ok(s.clamp(0.0, geom.stroke_mm))
}

/// Perpendicular distance (mm) from the joint axis to the screw line of
/// action, `a b sin(psi) / L`.
pub fn moment_arm(geom: &RockerGeometry, theta_deg: f64) -> Result<f64, ActuationError> {
    let s = joint_angle_to_nut_travel(geom, theta_deg)?;
    let side = geom.base_length_mm + s;
    let psi = geom.interior_angle(side)?;
    if psi.sin() <= COLLINEAR_EPS || side <= 0.0 {
        return Err(ActuationError::DegenerateMomentArm {
            interior_deg: psi.to_degrees(),
        });
    }
    Ok(geom.anchor_mm * geom.pivot_mm * psi.sin() / side)
}

/// Distance from the joint axis to the nut centre. This is the literal
/// reading of "distance to the nut" and is not a lever arm; it is kept for
/// debugging only.
pub fn nut_center_distance(geom: &RockerGeometry) -> f64 {
    geom.pivot_mm
}

fn rom_for(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    let psi = |l: f64| ((a * a + b * b - l * l) / (2.0 * a * b)).clamp(-1.0, 1.0).acos();
    psi(hi) - psi(lo)
}

fn rom_derivative(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    let d = |l: f64| {
        let c = (a * a + b * b - l * l) / (2.0 * a * b);
        let dc = (b * b - a * a + l * l) / (2.0 * a * b * b);
        -dc / (1.0 - c * c).max(1e-300).sqrt()
    };
    d(hi) - d(lo)
}

/// Solves the pivot distance `b` and the interior offset so that zero travel
/// maps to `min_deg` and full stroke maps to `max_deg`, keeping `a` and the
/// base side length fixed.
///
/// The range of motion depends only on `b`; among the roots the smallest is
/// taken so the result is deterministic. The offset then follows in closed
/// form.
pub fn calibrate_rocker(
    anchor_mm: f64,
    base_length_mm: f64,
    stroke_mm: f64,
    min_deg: f64,
    max_deg: f64,
) -> Result<RockerGeometry, ActuationError> {
    require(anchor_mm > 0.0, "anchor_mm", "> 0", anchor_mm)?;
    require(base_length_mm > 0.0, "base_length_mm", "> 0", base_length_mm)?;
    require(stroke_mm > 0.0, "stroke_mm", "> 0", stroke_mm)?;
    require(min_deg.is_finite(), "min_deg", "finite", min_deg)?;
    require(max_deg > min_deg, "max_deg", "> min_deg", max_deg)?;

    let (a, lo_side, hi_side) = (anchor_mm, base_length_mm, base_length_mm + stroke_mm);
    let target = (max_deg - min_deg).to_radians();
    if target >= std::f64::consts::PI {
        return Err(ActuationError::CalibrationInfeasible {
            constraint: format!("range of motion {} deg must be below 180 deg", max_deg - min_deg),
        });
    }
    let b_lo = (hi_side - a).max(a - lo_side);
    let b_hi = a + lo_side;
    if b_lo >= b_hi {
        return Err(ActuationError::CalibrationInfeasible {
            constraint: format!(
                "no pivot distance keeps the triangle closed over side lengths [{lo_side}, {hi_side}] mm with anchor {a} mm"
            ),
        });
    }

    let f = |b: f64| rom_for(a, b, lo_side, hi_side) - target;
    let n = 4096;
    let width = b_hi - b_lo;
    let at = |i: usize| b_lo + width * (i as f64 + 0.5) / n as f64;
    let mut bracket = None;
    let mut best = f64::NEG_INFINITY;
    let mut prev = (at(0), f(at(0)));
    best = best.max(prev.1);
    for i in 1..n {
        let b = at(i);
        let v = f(b);
        best = best.max(v);
        if prev.1 == 0.0 || prev.1.signum() != v.signum() {
            bracket = Some((prev.0, b, prev.1));
            break;
        }
        prev = (b, v);
    }
    let (mut lo, mut hi, f_lo) = bracket.ok_or_else(|| ActuationError::CalibrationInfeasible {
        constraint: format!(
            "maximum achievable range of motion {:.4} deg is below the target {:.4} deg",
            (best + target).to_degrees(),
            max_deg - min_deg
        ),
    })?;

    // Safeguarded Newton: fall back to bisection whenever the Newton step
    // leaves the bracket.
    let mut b = 0.5 * (lo + hi);
    for _ in 0..100 {
        let v = f(b);
        if v.abs() < 1e-14 {
            break;
        }
        if v.signum() == f_lo.signum() {
            lo = b;
        } else {
            hi = b;
        }
        let step = v / rom_derivative(a, b, lo_side, hi_side);
        let mut next = b - step;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        let done = (next - b).abs() < 1e-10 * b.max(1.0);
        b = next;
        if done || hi - lo < 1e-15 * b {
            break;
        }
    }

    let psi_lo = ((a * a + b * b - lo_side * lo_side) / (2.0 * a * b)).clamp(-1.0, 1.0).acos();
    let geom = RockerGeometry {
        anchor_mm: a,
        pivot_mm: b,
        offset_deg: (psi_lo - min_deg.to_radians()).to_degrees(),
        direction: 1.0,
        base_length_mm,
        stroke_mm,
    };
    geom.validate()?;
    Ok(geom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Point2, Vector2};

    fn iso(stroke: f64) -> RockerGeometry {
        RockerGeometry {
            anchor_mm: 10.0,
            pivot_mm: 10.0,
            offset_deg: 0.0,
            direction: 1.0,
            base_length_mm: 0.0,
            stroke_mm: stroke,
        }
    }

    #[test]
    fn right_angle() {
        let theta = nut_travel_to_joint_angle(&iso(20.0), 200f64.sqrt()).unwrap();
        assert!((theta - 90.0).abs() < 1e-12);
        let r = moment_arm(&iso(20.0), 90.0).unwrap();
        assert!((r - 100.0 / 200f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn collinear_boundary() {
        let theta = nut_travel_to_joint_angle(&iso(20.0), 20.0).unwrap();
        assert!((theta - 180.0).abs() < 1e-9);
        assert!(matches!(
            moment_arm(&iso(20.0), 180.0),
            Err(ActuationError::DegenerateMomentArm { .. })
        ));
        let r = moment_arm(&iso(20.0), 179.9).unwrap();
        assert!(r < 0.01);
    }

    #[test]
    fn triangle_and_stroke_errors_are_distinct() {
        assert!(matches!(
            nut_travel_to_joint_angle(&iso(20.0), 21.0),
            Err(ActuationError::TriangleInfeasible { .. })
        ));
        assert!(matches!(
            nut_travel_to_joint_angle(&iso(15.0), 18.0),
            Err(ActuationError::OutsideStroke { .. })
        ));
    }

    #[test]
    fn calibration_round_trip() {
        let truth = RockerGeometry {
            anchor_mm: 8.0,
            pivot_mm: 11.0,
            offset_deg: 0.3f64.to_degrees(),
            direction: 1.0,
            base_length_mm: 5.0,
            stroke_mm: 12.0,
        };
        let (lo, hi) = truth.endpoint_angles().unwrap();
        let got = calibrate_rocker(8.0, 5.0, 12.0, lo, hi).unwrap();
        assert!((got.pivot_mm - 11.0).abs() < 1e-6);
        assert!((got.offset_deg.to_radians() - 0.3).abs() < 1e-6);
    }

    #[test]
    fn calibration_rejects_empty_range() {
        assert!(calibrate_rocker(35.0, 28.0, 20.0, 10.0, 10.0).is_err());
        assert!(matches!(
            calibrate_rocker(35.0, 28.0, 1.0, 0.0, 170.0),
            Err(ActuationError::CalibrationInfeasible { .. })
        ));
    }

    #[test]
    fn reverse_direction_round_trip() {
        let mut g = calibrate_rocker(35.1, 28.08, 20.0, 0.0, 103.13).unwrap();
        g.direction = -1.0;
        g.offset_deg = 170.0;
        let (lo, hi) = g.endpoint_angles().unwrap();
        for k in 0..=50 {
            let th = lo + (hi - lo) * k as f64 / 50.0;
            let s = joint_angle_to_nut_travel(&g, th).unwrap();
            assert!((nut_travel_to_joint_angle(&g, s).unwrap() - th).abs() < 1e-9);
        }
    }

    #[test]
    fn moment_arm_is_point_to_line_distance() {
        let g = calibrate_rocker(35.1, 28.08, 20.0, 0.0, 103.13).unwrap();
        for k in 0..=20 {
            let th = 103.13 * k as f64 / 20.0;
            let psi = (th + g.offset_deg).to_radians();
            // joint at origin, anchor on +x, pivot rotated by psi
            let anchor = Point2::new(g.anchor_mm, 0.0);
            let pivot = Point2::new(g.pivot_mm * psi.cos(), g.pivot_mm * psi.sin());
            let dir: Vector2<f64> = (pivot - anchor).normalize();
            let to_joint = Point2::origin() - anchor;
            let dist = (to_joint.x * dir.y - to_joint.y * dir.x).abs();
            assert!((moment_arm(&g, th).unwrap() - dist).abs() < 1e-9);
        }
    }
}
