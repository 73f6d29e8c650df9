//! Two-actuator parallel wrist.
//!
//! The hand platform pivots on a universal joint at the origin of the hand
//! frame. Two linear actuators run from fixed forearm anchors to platform
//! anchors placed 45 degrees either side of the dorsal direction, each end on
//! a spherical joint whose axis is the rod direction at neutral.

use nalgebra::{Matrix2, Rotation3, Vector2, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WristGeometry {
    /// Universal joint to the platform anchor plane, along the hand axis.
    pub platform_offset_mm: f64,
    /// Distance of each platform anchor from the hand axis.
    pub anchor_radius_mm: f64,
    /// Azimuth of each anchor either side of dorsal.
    pub anchor_azimuth_deg: f64,
    /// Rod inclination from the hand axis at neutral; rods converge distally.
    pub axis_tilt_deg: f64,
    /// Rod length at the neutral pose.
    pub nominal_length_mm: f64,
    pub min_length_mm: f64,
    pub stroke_mm: f64,
    pub swivel_limit_deg: f64,
    /// Rated actuator force; recorded only.
    pub max_force_n: f64,
}

/// Frozen output of the envelope calibration (anchor radius and minimum
/// length searched so the axis extremes land on 52/18/18/18).
const CAL_ANCHOR_RADIUS_MM: f64 = 10.409102273063727;
const CAL_MIN_LENGTH_MM: f64 = 75.89046625455386;

impl WristGeometry {
    pub fn default_geometry() -> Self {
        Self {
            platform_offset_mm: 15.0,
            anchor_radius_mm: CAL_ANCHOR_RADIUS_MM,
            anchor_azimuth_deg: 45.0,
            axis_tilt_deg: 30.0,
            nominal_length_mm: 80.0,
            min_length_mm: CAL_MIN_LENGTH_MM,
            stroke_mm: 26.92,
            swivel_limit_deg: 40.0,
            max_force_n: 100.0,
        }
    }

    pub fn max_length_mm(&self) -> f64 {
        self.min_length_mm + self.stroke_mm
    }

    pub fn validate(&self) -> Result<(), WristError> {
        let bad = |field: &'static str, value: f64| WristError::InvalidGeometry { field, value };
        let positive = [
            ("anchor_radius_mm", self.anchor_radius_mm),
            ("nominal_length_mm", self.nominal_length_mm),
            ("min_length_mm", self.min_length_mm),
            ("stroke_mm", self.stroke_mm),
        ];
        for (field, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(bad(field, value));
            }
        }
        if !(self.swivel_limit_deg >= 0.0 && self.swivel_limit_deg < 90.0) {
            return Err(bad("swivel_limit_deg", self.swivel_limit_deg));
        }
        if !(self.anchor_azimuth_deg > 0.0 && self.anchor_azimuth_deg < 90.0) {
            return Err(bad("anchor_azimuth_deg", self.anchor_azimuth_deg));
        }
        if !(self.axis_tilt_deg >= 0.0 && self.axis_tilt_deg < 90.0) {
            return Err(bad("axis_tilt_deg", self.axis_tilt_deg));
        }
        if !self.platform_offset_mm.is_finite() || !self.max_force_n.is_finite() {
            return Err(bad("platform_offset_mm", self.platform_offset_mm));
        }
        let [(u0, l0, _), (u1, l1, _)] = self.anchors();
        if (u0 - u1).norm() < 1e-9 || (l0 - l1).norm() < 1e-9 {
            return Err(bad("anchor_radius_mm", self.anchor_radius_mm));
        }
        Ok(())
    }

    /// `(platform anchor, forearm anchor, rod direction at neutral)` for the
    /// radial-side (index 0) and ulnar-side (index 1) actuators.
    pub fn anchors(&self) -> [(Vector3<f64>, Vector3<f64>, Vector3<f64>); 2] {
        let az = self.anchor_azimuth_deg.to_radians();
        let tilt = self.axis_tilt_deg.to_radians();
        [1.0, -1.0].map(|side| {
            let radial = Vector3::new(0.0, side * az.sin(), az.cos());
            let upper = Vector3::new(self.platform_offset_mm, 0.0, 0.0) + self.anchor_radius_mm * radial;
            let dir = tilt.cos() * Vector3::x() - tilt.sin() * radial;
            (upper, upper - self.nominal_length_mm * dir, dir)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WristPose {
    /// Positive is palmar flexion.
    pub fe_deg: f64,
    /// Positive is radial deviation.
    pub rud_deg: f64,
}

impl WristPose {
    pub fn new(fe_deg: f64, rud_deg: f64) -> Self {
        Self { fe_deg, rud_deg }
    }
}

/// Flexion about the transverse axis, then deviation about the rotated
/// dorsal axis.
pub fn wrist_rotation(pose: WristPose) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::y_axis(), pose.fe_deg.to_radians())
        * Rotation3::from_axis_angle(&Vector3::z_axis(), pose.rud_deg.to_radians())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    StrokeShort,
    StrokeLong,
    SwivelUpper,
    SwivelLower,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WristIk {
    pub lengths_mm: [f64; 2],
    pub swivel_upper_deg: [f64; 2],
    pub swivel_lower_deg: [f64; 2],
}

impl WristIk {
    pub fn swivel_deg(&self, i: usize) -> f64 {
        self.swivel_upper_deg[i].max(self.swivel_lower_deg[i])
    }

    /// Every violated constraint, as `(actuator, constraint, value, limit)`.
    pub fn violations(&self, geom: &WristGeometry) -> Vec<(usize, Constraint, f64, f64)> {
        let mut out = Vec::new();
        for i in 0..2 {
            let l = self.lengths_mm[i];
            if l < geom.min_length_mm - LENGTH_TOL {
                out.push((i, Constraint::StrokeShort, l, geom.min_length_mm));
            }
            if l > geom.max_length_mm() + LENGTH_TOL {
                out.push((i, Constraint::StrokeLong, l, geom.max_length_mm()));
            }
            if self.swivel_upper_deg[i] > geom.swivel_limit_deg + ANGLE_TOL {
                out.push((i, Constraint::SwivelUpper, self.swivel_upper_deg[i], geom.swivel_limit_deg));
            }
            if self.swivel_lower_deg[i] > geom.swivel_limit_deg + ANGLE_TOL {
                out.push((i, Constraint::SwivelLower, self.swivel_lower_deg[i], geom.swivel_limit_deg));
            }
        }
        out
    }

    pub fn feasible(&self, geom: &WristGeometry) -> bool {
        self.violations(geom).is_empty()
    }
}

const LENGTH_TOL: f64 = 1e-9;
const ANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WristError {
    #[error("invalid wrist geometry: {field} = {value}")]
    InvalidGeometry { field: &'static str, value: f64 },
    #[error("non-finite wrist pose ({fe_deg}, {rud_deg})")]
    NonFinite { fe_deg: f64, rud_deg: f64 },
    #[error("actuator {actuator} length {length_mm:.4} mm outside stroke [{min_mm:.4}, {max_mm:.4}] mm")]
    Stroke {
        actuator: usize,
        length_mm: f64,
        min_mm: f64,
        max_mm: f64,
    },
    #[error("actuator {actuator} {end} swivel {angle_deg:.4} deg exceeds {limit_deg} deg")]
    Swivel {
        actuator: usize,
        end: &'static str,
        angle_deg: f64,
        limit_deg: f64,
    },
    #[error("no wrist pose in the envelope produces lengths {0:?} mm")]
    NoSolution([f64; 2]),
    #[error("lengths {lengths_mm:?} mm are reached by several poses: {candidates:?}")]
    Ambiguous {
        lengths_mm: [f64; 2],
        candidates: Vec<WristPose>,
    },
}

fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b)).to_degrees()
}

/// Rod lengths and swivel angles for a pose, without feasibility checks.
pub fn wrist_state(geom: &WristGeometry, pose: WristPose) -> WristIk {
    let r = wrist_rotation(pose);
    let mut out = WristIk {
        lengths_mm: [0.0; 2],
        swivel_upper_deg: [0.0; 2],
        swivel_lower_deg: [0.0; 2],
    };
    for (i, (upper, lower, dir)) in geom.anchors().iter().enumerate() {
        let rod = r * upper - lower;
        out.lengths_mm[i] = rod.norm();
        out.swivel_upper_deg[i] = angle_between(&rod, &(r * dir));
        out.swivel_lower_deg[i] = angle_between(&rod, dir);
    }
    out
}

/// Actuator lengths and swivel angles, rejecting poses outside the stroke or
/// the spherical-joint cone.
pub fn wrist_ik(geom: &WristGeometry, pose: WristPose) -> Result<WristIk, WristError> {
    if !pose.fe_deg.is_finite() || !pose.rud_deg.is_finite() {
        return Err(WristError::NonFinite {
            fe_deg: pose.fe_deg,
            rud_deg: pose.rud_deg,
        });
    }
    let st = wrist_state(geom, pose);
    if let Some(&(actuator, c, value, limit)) = st.violations(geom).first() {
        return Err(match c {
            Constraint::StrokeShort | Constraint::StrokeLong => WristError::Stroke {
                actuator,
                length_mm: value,
                min_mm: geom.min_length_mm,
                max_mm: geom.max_length_mm(),
            },
            Constraint::SwivelUpper | Constraint::SwivelLower => WristError::Swivel {
                actuator,
                end: if c == Constraint::SwivelUpper { "upper" } else { "lower" },
                angle_deg: value,
                limit_deg: limit,
            },
        });
    }
    Ok(st)
}

/// Rod lengths and their derivatives per degree of FE and RUD.
fn lengths_and_jacobian(geom: &WristGeometry, fe: f64, rud: f64) -> (Vector2<f64>, Matrix2<f64>) {
    let (f, r) = (fe.to_radians(), rud.to_radians());
    let ry = Rotation3::from_axis_angle(&Vector3::y_axis(), f);
    let rz = Rotation3::from_axis_angle(&Vector3::z_axis(), r);
    let dry = |v: Vector3<f64>| Vector3::y().cross(&(ry * v));
    let mut len = Vector2::zeros();
    let mut jac = Matrix2::zeros();
    for (i, (upper, lower, _)) in geom.anchors().iter().enumerate() {
        let p = ry * (rz * upper);
        let rod = p - lower;
        let l = rod.norm();
        let u = rod / l;
        len[i] = l;
        jac[(i, 0)] = u.dot(&dry(rz * upper)) * std::f64::consts::PI / 180.0;
        jac[(i, 1)] = u.dot(&(ry * Vector3::z().cross(&(rz * upper)))) * std::f64::consts::PI / 180.0;
    }
    (len, jac)
}

/// Pose whose rod lengths equal `lengths_mm`, by damped Newton from several
/// seeds. Solutions outside the envelope are discarded.
pub fn wrist_fk(geom: &WristGeometry, lengths_mm: [f64; 2]) -> Result<WristPose, WristError> {
    for (i, &l) in lengths_mm.iter().enumerate() {
        if !(l >= geom.min_length_mm - LENGTH_TOL && l <= geom.max_length_mm() + LENGTH_TOL) {
            return Err(WristError::Stroke {
                actuator: i,
                length_mm: l,
                min_mm: geom.min_length_mm,
                max_mm: geom.max_length_mm(),
            });
        }
    }
    let target = Vector2::from(lengths_mm);
    let seeds = [
        (0.0, 0.0),
        (40.0, 0.0),
        (-15.0, 0.0),
        (0.0, 15.0),
        (0.0, -15.0),
        (40.0, 25.0),
        (40.0, -25.0),
    ];
    let mut found: Vec<WristPose> = Vec::new();
    for (fe0, rud0) in seeds {
        let Some(pose) = newton(geom, &target, fe0, rud0) else {
            continue;
        };
        if !wrist_state(geom, pose).feasible(geom) {
            continue;
        }
        if !found
            .iter()
            .any(|p| (p.fe_deg - pose.fe_deg).abs() < 1e-6 && (p.rud_deg - pose.rud_deg).abs() < 1e-6)
        {
            found.push(pose);
        }
    }
    match found.len() {
        0 => Err(WristError::NoSolution(lengths_mm)),
        1 => Ok(found[0]),
        _ => Err(WristError::Ambiguous {
            lengths_mm,
            candidates: found,
        }),
    }
}

fn newton(geom: &WristGeometry, target: &Vector2<f64>, fe0: f64, rud0: f64) -> Option<WristPose> {
    let mut x = Vector2::new(fe0, rud0);
    let mut mu = 1e-6;
    for _ in 0..100 {
        let (len, jac) = lengths_and_jacobian(geom, x[0], x[1]);
        let res = len - target;
        if res.amax() < 1e-11 {
            return Some(WristPose::new(x[0], x[1]));
        }
        let jt = jac.transpose();
        let step = (jt * jac + Matrix2::identity() * mu).try_inverse()? * (jt * res);
        let step = if step.amax() > 10.0 { step * (10.0 / step.amax()) } else { step };
        let candidate = x - step;
        let (len_c, _) = lengths_and_jacobian(geom, candidate[0], candidate[1]);
        if (len_c - target).norm() < res.norm() {
            x = candidate;
            mu = (mu * 0.1).max(1e-12);
        } else {
            mu *= 10.0;
            if mu > 1e6 {
                return None;
            }
        }
        if x.amax() > 120.0 {
            return None;
        }
    }
    let (len, _) = lengths_and_jacobian(geom, x[0], x[1]);
    ((len - target).amax() < 1e-9).then(|| WristPose::new(x[0], x[1]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopePoint {
    pub fe_deg: f64,
    pub rud_deg: f64,
    pub feasible: bool,
    pub lengths_mm: [f64; 2],
    pub swivel_deg: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extreme {
    pub angle_deg: f64,
    /// The constraint that stops motion one grid step further, when the
    /// scan reaches a bound before the scan limit.
    pub binding: Option<(usize, Constraint)>,
}

/// Grid scan of the feasible region. Extremes are taken along the pure
/// flexion-extension and pure deviation axes, which is how single-axis
/// ranges of motion are measured.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope {
    pub step_deg: f64,
    pub points: Vec<EnvelopePoint>,
    pub max_flexion: Extreme,
    pub max_extension: Extreme,
    pub max_radial: Extreme,
    pub max_ulnar: Extreme,
    /// Bounding box of every feasible grid point, `[fe_min, fe_max, rud_min, rud_max]`.
    pub region_bounds_deg: [f64; 4],
}

impl Envelope {
    pub fn feasible_count(&self) -> usize {
        self.points.iter().filter(|p| p.feasible).count()
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("fe_deg,rud_deg,feasible,len1_mm,len2_mm,swivel1_deg,swivel2_deg\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{:.6},{:.6}\n",
                p.fe_deg, p.rud_deg, p.feasible, p.lengths_mm[0], p.lengths_mm[1], p.swivel_deg[0], p.swivel_deg[1]
            ));
        }
        out
    }
}

/// Scan span on each axis.
pub const SCAN_LIMIT_DEG: f64 = 90.0;

pub fn wrist_envelope(geom: &WristGeometry, step_deg: f64) -> Result<Envelope, WristError> {
    if !(step_deg > 0.0 && step_deg.is_finite()) {
        return Err(WristError::InvalidGeometry {
            field: "grid_step_deg",
            value: step_deg,
        });
    }
    let n = (SCAN_LIMIT_DEG / step_deg).floor() as i64;
    let mut points = Vec::with_capacity(((2 * n + 1) * (2 * n + 1)) as usize);
    let mut bounds = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    for i in -n..=n {
        for k in -n..=n {
            let pose = WristPose::new(i as f64 * step_deg, k as f64 * step_deg);
            let st = wrist_state(geom, pose);
            let feasible = st.feasible(geom);
            if feasible {
                bounds[0] = bounds[0].min(pose.fe_deg);
                bounds[1] = bounds[1].max(pose.fe_deg);
                bounds[2] = bounds[2].min(pose.rud_deg);
                bounds[3] = bounds[3].max(pose.rud_deg);
            }
            points.push(EnvelopePoint {
                fe_deg: pose.fe_deg,
                rud_deg: pose.rud_deg,
                feasible,
                lengths_mm: st.lengths_mm,
                swivel_deg: [st.swivel_deg(0), st.swivel_deg(1)],
            });
        }
    }
    let axis = |dir: (f64, f64)| {
        let mut last = 0.0;
        for i in 1..=n {
            let t = i as f64 * step_deg;
            let st = wrist_state(geom, WristPose::new(dir.0 * t, dir.1 * t));
            if let Some(&(act, c, _, _)) = st.violations(geom).first() {
                return Extreme {
                    angle_deg: last,
                    binding: Some((act, c)),
                };
            }
            last = t;
        }
        Extreme {
            angle_deg: last,
            binding: None,
        }
    };
    Ok(Envelope {
        step_deg,
        points,
        max_flexion: axis((1.0, 0.0)),
        max_extension: axis((-1.0, 0.0)),
        max_radial: axis((0.0, 1.0)),
        max_ulnar: axis((0.0, -1.0)),
        region_bounds_deg: bounds,
    })
}

/// Continuous edge of the feasible region along a unit direction in
/// `(fe, rud)`, found by marching at 0.25 deg and bisecting.
pub fn axis_limit_deg(geom: &WristGeometry, dir: (f64, f64)) -> f64 {
    let ok = |t: f64| wrist_state(geom, WristPose::new(dir.0 * t, dir.1 * t)).feasible(geom);
    let (mut lo, mut hi) = (0.0, SCAN_LIMIT_DEG);
    let mut t = 0.0;
    while t < SCAN_LIMIT_DEG {
        t += 0.25;
        if !ok(t) {
            hi = t;
            break;
        }
        lo = t;
    }
    if lo >= SCAN_LIMIT_DEG {
        return SCAN_LIMIT_DEG;
    }
    for _ in 0..60 {
        let m = 0.5 * (lo + hi);
        if ok(m) {
            lo = m;
        } else {
            hi = m;
        }
    }
    lo
}

/// Single-axis range of motion the wrist calibration aims for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WristTargets {
    pub flexion_deg: f64,
    pub extension_deg: f64,
    pub radial_deg: f64,
    pub ulnar_deg: f64,
}

impl Default for WristTargets {
    fn default() -> Self {
        Self {
            flexion_deg: 52.0,
            extension_deg: 18.0,
            radial_deg: 18.0,
            ulnar_deg: 18.0,
        }
    }
}

const AXES: [(f64, f64); 4] = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)];

fn edge_residuals(geom: &WristGeometry, goal: [f64; 4]) -> Vector4<f64> {
    Vector4::from_fn(|i, _| axis_limit_deg(geom, AXES[i]) - goal[i])
}

/// Fits anchor radius and minimum rod length so the continuous axis edges
/// sit half a grid step beyond the targets; a scan at `step_deg` then
/// reports the targets exactly. Least squares over the four axes, starting
/// from `geom`.
pub fn calibrate_wrist(geom: &WristGeometry, targets: &WristTargets, step_deg: f64) -> Result<WristGeometry, WristError> {
    geom.validate()?;
    if !(step_deg > 0.0 && step_deg.is_finite()) {
        return Err(WristError::InvalidGeometry {
            field: "grid_step_deg",
            value: step_deg,
        });
    }
    let h = 0.5 * step_deg;
    let goal = [
        targets.flexion_deg + h,
        targets.extension_deg + h,
        targets.radial_deg + h,
        targets.ulnar_deg + h,
    ];
    let with = |x: Vector2<f64>| WristGeometry {
        anchor_radius_mm: x[0],
        min_length_mm: x[1],
        ..*geom
    };
    let mut x = Vector2::new(geom.anchor_radius_mm, geom.min_length_mm);
    let mut r = edge_residuals(&with(x), goal);
    for _ in 0..50 {
        if r.amax() < 1e-9 {
            break;
        }
        let mut j = nalgebra::Matrix4x2::zeros();
        for k in 0..2 {
            let d = 1e-6 * x[k].abs().max(1.0);
            let mut xp = x;
            xp[k] += d;
            let mut xm = x;
            xm[k] -= d;
            j.set_column(k, &((edge_residuals(&with(xp), goal) - edge_residuals(&with(xm), goal)) / (2.0 * d)));
        }
        let lhs: Matrix2<f64> = j.transpose() * j;
        let Some(inv) = lhs.try_inverse() else { break };
        let step = -(inv * j.transpose() * r);
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..20 {
            let xn = x + step * alpha;
            if xn.iter().all(|v| *v > 0.0) && with(xn).validate().is_ok() {
                let rn = edge_residuals(&with(xn), goal);
                if rn.norm() < r.norm() {
                    x = xn;
                    r = rn;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let out = with(x);
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neutral_is_symmetric() {
        let g = WristGeometry::default_geometry();
        let st = wrist_ik(&g, WristPose::default()).unwrap();
        assert!((st.lengths_mm[0] - 80.0).abs() < 1e-12);
        assert!((st.lengths_mm[1] - 80.0).abs() < 1e-12);
        assert!(st.swivel_deg(0) < 1e-9 && st.swivel_deg(1) < 1e-9);
    }

    #[test]
    fn flexion_limits() {
        let g = WristGeometry::default_geometry();
        assert!(wrist_ik(&g, WristPose::new(52.0, 0.0)).is_ok());
        assert!(wrist_ik(&g, WristPose::new(70.0, 0.0)).is_err());
    }

    #[test]
    fn fk_round_trip() {
        let g = WristGeometry::default_geometry();
        let st = wrist_ik(&g, WristPose::new(30.0, 10.0)).unwrap();
        let p = wrist_fk(&g, st.lengths_mm).unwrap();
        assert!((p.fe_deg - 30.0).abs() < 1e-6 && (p.rud_deg - 10.0).abs() < 1e-6);
        let n = wrist_fk(&g, [80.0, 80.0]).unwrap();
        assert!(n.fe_deg.abs() < 1e-9 && n.rud_deg.abs() < 1e-9);
        assert!(wrist_fk(&g, [10.0, 80.0]).is_err());
    }

    #[test]
    fn jacobian_matches_differences() {
        let g = WristGeometry::default_geometry();
        let (_, j) = lengths_and_jacobian(&g, 20.0, -7.0);
        let h = 1e-5;
        let d = |f: f64, r: f64| lengths_and_jacobian(&g, f, r).0;
        let c0 = (d(20.0 + h, -7.0) - d(20.0 - h, -7.0)) / (2.0 * h);
        let c1 = (d(20.0, -7.0 + h) - d(20.0, -7.0 - h)) / (2.0 * h);
        assert!((j.column(0) - c0).amax() < 1e-7);
        assert!((j.column(1) - c1).amax() < 1e-7);
    }

    #[test]
    fn calibration_recovers_default() {
        let g = WristGeometry::default_geometry();
        let start = WristGeometry {
            anchor_radius_mm: 9.0,
            min_length_mm: 75.0,
            ..g
        };
        let cal = calibrate_wrist(&start, &WristTargets::default(), 0.5).unwrap();
        assert!((cal.anchor_radius_mm - g.anchor_radius_mm).abs() < 1e-6);
        assert!((cal.min_length_mm - g.min_length_mm).abs() < 1e-6);
    }

    #[test]
    fn zero_swivel_limit_collapses_envelope() {
        let mut g = WristGeometry::default_geometry();
        g.swivel_limit_deg = 0.0;
        let env = wrist_envelope(&g, 0.5).unwrap();
        assert_eq!(env.feasible_count(), 1);
    }
}
