use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::trace::RetargetFrame;
use crate::kinematics::{
    solve_with, Actuator, HandKinematics, HandState, IkError, IkOptions, IkStatus, Objective, Site, DIP_WEIGHT,
    TIP_WEIGHT,
};
use crate::model::{DigitId, HandDescription};

/// Hand-to-human length ratio of the anthropometric comparison (+24.34 %).
pub const DEFAULT_SCALE: f64 = 1.2434;

/// Glove frame to hand frame: `p_hand = rotation * (scale * p_glove) + translation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Mapping {
    /// Row-major.
    pub rotation: [[f64; 3]; 3],
    pub translation_mm: [f64; 3],
    pub scale: f64,
    /// Digits D1..D5 taking part; a disabled digit keeps its command.
    pub enabled: [bool; 5],
    /// Moving-average length over mapped targets; 1 disables smoothing.
    pub smoothing_window: usize,
}

impl Default for Mapping {
    fn default() -> Self {
        Self {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation_mm: [0.0; 3],
            scale: DEFAULT_SCALE,
            enabled: [true; 5],
            smoothing_window: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MappingError {
    #[error("scale must be positive and finite, got {0}")]
    Scale(f64),
    #[error("rotation is not orthonormal with determinant +1 (deviation {0:.3e})")]
    Rotation(f64),
    #[error("translation is not finite")]
    Translation,
    #[error("smoothing window must be at least 1")]
    Window,
}

impl Mapping {
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let r = &self.rotation;
        Matrix3::new(r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2])
    }

    pub fn validate(&self) -> Result<(), MappingError> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(MappingError::Scale(self.scale));
        }
        let r = self.rotation_matrix();
        let dev = (r.transpose() * r - Matrix3::identity()).abs().max().max((r.determinant() - 1.0).abs());
        if dev.is_nan() || dev >= 1e-9 {
            return Err(MappingError::Rotation(dev));
        }
        if !self.translation_mm.iter().all(|v| v.is_finite()) {
            return Err(MappingError::Translation);
        }
        if self.smoothing_window == 0 {
            return Err(MappingError::Window);
        }
        Ok(())
    }

    pub fn to_hand(&self, p: [f64; 3]) -> Vector3<f64> {
        self.rotation_matrix() * (Vector3::from(p) * self.scale) + Vector3::from(self.translation_mm)
    }

    pub fn to_glove(&self, p: Vector3<f64>) -> [f64; 3] {
        let g = self.rotation_matrix().transpose() * (p - Vector3::from(self.translation_mm)) / self.scale;
        [g.x, g.y, g.z]
    }

    pub fn is_enabled(&self, d: DigitId) -> bool {
        self.enabled[d.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetargetOptions {
    /// Solver stopping tolerance.
    pub ik_tol_mm: f64,
    /// A frame whose residual exceeds this is skipped.
    pub accept_tol_mm: f64,
    pub max_iter: usize,
}

impl Default for RetargetOptions {
    fn default() -> Self {
        Self {
            ik_tol_mm: 1e-4,
            accept_tol_mm: 0.5,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetargetOutcome {
    /// Command to issue: the solution, or the seed when the frame is held.
    pub state: HandState,
    pub held: bool,
    pub residual_mm: f64,
    /// Tip and DIP distance per targeted digit, `(digit, dip_mm, tip_mm)`.
    pub digit_residuals_mm: Vec<(DigitId, f64, f64)>,
    pub status: Option<IkStatus>,
    pub iterations: usize,
}

/// Hand-frame DIP and tip targets of the enabled digits of a frame.
/// Digit with its mapped DIP and tip targets, hand frame, mm.
pub type DigitTargets = (DigitId, Vector3<f64>, Vector3<f64>);

pub fn mapped_targets(frame: &RetargetFrame, mapping: &Mapping) -> Vec<DigitTargets> {
    frame
        .fingers
        .iter()
        .filter(|(d, _)| mapping.is_enabled(**d))
        .map(|(&d, f)| (d, mapping.to_hand(f.dip), mapping.to_hand(f.tip)))
        .collect()
}

/// Solves one frame from `seed` (normally the previous command). The wrist
/// follows the hint when present and is held otherwise.
pub fn retarget_frame(
    frame: &RetargetFrame,
    mapping: &Mapping,
    desc: &HandDescription,
    seed: &HandState,
    opts: &RetargetOptions,
) -> Result<RetargetOutcome, IkError> {
    let kin = HandKinematics::new(desc);
    retarget_targets(&kin, desc, &mapped_targets(frame, mapping), frame.wrist.map(|w| (w.fe_deg, w.rud_deg)), seed, opts)
}

pub(crate) fn retarget_targets(
    kin: &HandKinematics,
    desc: &HandDescription,
    targets: &[DigitTargets],
    wrist: Option<(f64, f64)>,
    seed: &HandState,
    opts: &RetargetOptions,
) -> Result<RetargetOutcome, IkError> {
    let mut start = seed.clamped(desc);
    if let Some((fe, rud)) = wrist {
        start.set(Actuator::WristFe, kin.limits(Actuator::WristFe).clamp(fe));
        start.set(Actuator::WristRud, kin.limits(Actuator::WristRud).clamp(rud));
    }
    if targets.is_empty() {
        return Ok(RetargetOutcome {
            state: start,
            held: false,
            residual_mm: 0.0,
            digit_residuals_mm: Vec::new(),
            status: None,
            iterations: 0,
        });
    }
    let mut objectives = Vec::new();
    let mut free = [false; 18];
    for &(d, dip, tip) in targets {
        objectives.push(Objective::reach(d, Site::Dip, dip, DIP_WEIGHT));
        objectives.push(Objective::reach(d, Site::Tip, tip, TIP_WEIGHT));
        for a in Actuator::of_digit(d) {
            free[a.index()] = true;
        }
    }
    let ik = IkOptions {
        tol_mm: opts.ik_tol_mm,
        max_iter: opts.max_iter,
        free: Some(free),
        ..Default::default()
    };
    let report = solve_with(kin, desc.palm.length_mm, &objectives, &start, &ik)?;
    let digit_residuals_mm = targets
        .iter()
        .map(|&(d, dip, tip)| {
            (
                d,
                (kin.site(&report.state, d, Site::Dip) - dip).norm(),
                (kin.site(&report.state, d, Site::Tip) - tip).norm(),
            )
        })
        .collect();
    let held = report.residual_mm.is_nan() || report.residual_mm > opts.accept_tol_mm;
    Ok(RetargetOutcome {
        state: if held { start } else { report.state },
        held,
        residual_mm: report.residual_mm,
        digit_residuals_mm,
        status: Some(report.status),
        iterations: report.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_hand;
    use crate::teleop::trace::FingerTargets;

    fn frame_of(desc: &HandDescription, q: &HandState, m: &Mapping) -> RetargetFrame {
        let kin = HandKinematics::new(desc);
        let fingers = DigitId::ALL
            .iter()
            .map(|&d| {
                (
                    d,
                    FingerTargets {
                        dip: m.to_glove(kin.site(q, d, Site::Dip)),
                        tip: m.to_glove(kin.site(q, d, Site::Tip)),
                    },
                )
            })
            .collect();
        RetargetFrame {
            t_ms: 0,
            fingers,
            wrist: None,
        }
    }

    #[test]
    fn mapping_guards() {
        let mut m = Mapping::default();
        m.validate().unwrap();
        m.scale = 0.0;
        assert!(matches!(m.validate(), Err(MappingError::Scale(_))));
        let mut m = Mapping::default();
        m.rotation[0][0] = -1.0;
        assert!(matches!(m.validate(), Err(MappingError::Rotation(_))));
    }

    #[test]
    fn recovers_fk_pose() {
        let d = default_hand();
        let m = Mapping::default();
        let mut q = HandState::zero();
        for (a, v) in [(Actuator::D2Mcp, 20.0), (Actuator::D2Pip, 30.0), (Actuator::D3Dip, 15.0), (Actuator::D1Mcp, 10.0)] {
            q.set(a, v);
        }
        let mut seed = q;
        seed.set(Actuator::D2Mcp, 25.0);
        seed.set(Actuator::D2Pip, 26.0);
        let out = retarget_frame(&frame_of(&d, &q, &m), &m, &d, &seed, &RetargetOptions::default()).unwrap();
        assert!(!out.held);
        for (_, dip, tip) in &out.digit_residuals_mm {
            assert!(*dip < 1e-3 && *tip < 1e-3);
        }
    }

    #[test]
    fn unreachable_frame_is_held() {
        let d = default_hand();
        let m = Mapping::default();
        let mut f = frame_of(&d, &HandState::zero(), &m);
        f.fingers.get_mut(&DigitId::D2).unwrap().tip = [900.0, 0.0, 0.0];
        let seed = HandState::zero().with(Actuator::D4Pip, 12.0);
        let out = retarget_frame(&f, &m, &d, &seed, &RetargetOptions::default()).unwrap();
        assert!(out.held);
        assert_eq!(out.state, seed);
    }
}
