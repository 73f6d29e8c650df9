use serde::Serialize;
use thiserror::Error;

use super::fk::{HandKinematics, Site};
use super::ik::{solve_with, IkError, IkOptions, IkReport, Objective};
use super::state::{Actuator, HandState};
use crate::model::{DigitId, HandDescription};

/// Smallest contact tolerance the solver can certify; tighter requests are
/// reported as failures with the best distance found.
pub const CONTACT_RESOLUTION_MM: f64 = 1e-3;

/// Seeds are placed at these fractions of every free actuator's range.
const START_FRACTIONS: [f64; 5] = [0.5, 0.25, 0.75, 0.1, 0.9];

#[derive(Debug, Clone, PartialEq)]
pub struct OppositionOptions {
    pub tol_mm: f64,
    /// Move only the thumb; the finger stays at `finger_pose`.
    pub thumb_only: bool,
    /// Finger pose for thumb-only runs. When unset the finger pose of a
    /// two-chain solution is used.
    pub finger_pose: Option<HandState>,
    pub max_iter: usize,
}

impl Default for OppositionOptions {
    fn default() -> Self {
        Self {
            tol_mm: 5.0,
            thumb_only: false,
            finger_pose: None,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OppositionContact {
    pub finger: DigitId,
    pub distance_mm: f64,
    pub state: HandState,
    pub starts: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OppositionError {
    #[error("{0} is not a finger; opposition targets D2..D5")]
    NotAFinger(DigitId),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("no contact with {finger} within {tol_mm} mm (best distance {best_distance_mm:.6} mm)")]
    NoContact {
        finger: DigitId,
        tol_mm: f64,
        best_distance_mm: f64,
        best_state: HandState,
    },
    #[error(transparent)]
    Ik(#[from] IkError),
}

/// Brings the thumb tip to a fingertip by solving the meet objective from a
/// fixed sequence of seeds.
pub fn opposition_check(
    desc: &HandDescription,
    finger: DigitId,
    opts: &OppositionOptions,
) -> Result<OppositionContact, OppositionError> {
    if finger == DigitId::D1 {
        return Err(OppositionError::NotAFinger(finger));
    }
    if !(opts.tol_mm > 0.0 && opts.tol_mm.is_finite()) {
        return Err(OppositionError::BadTolerance(opts.tol_mm));
    }
    let kin = HandKinematics::new(desc);
    let objective = [Objective::Meet {
        a: (DigitId::D1, Site::Tip),
        b: (finger, Site::Tip),
        weight: 1.0,
    }];
    let solve_tol = opts.tol_mm.max(CONTACT_RESOLUTION_MM);
    let both = |kin: &HandKinematics| {
        let mut free = [false; 18];
        for a in Actuator::of_digit(DigitId::D1).into_iter().chain(Actuator::of_digit(finger)) {
            free[a.index()] = true;
        }
        multi_start(kin, desc, &objective, free, None, solve_tol, opts.max_iter)
    };

    let (report, starts, iterations) = if opts.thumb_only {
        let finger_pose = match opts.finger_pose {
            Some(p) => p,
            None => both(&kin)?.0.state,
        };
        let mut free = [false; 18];
        for a in Actuator::of_digit(DigitId::D1) {
            free[a.index()] = true;
        }
        multi_start(&kin, desc, &objective, free, Some(finger_pose), solve_tol, opts.max_iter)?
    } else {
        both(&kin)?
    };

    let distance_mm = (kin.site(&report.state, DigitId::D1, Site::Tip) - kin.site(&report.state, finger, Site::Tip)).norm();
    if opts.tol_mm >= CONTACT_RESOLUTION_MM && distance_mm <= opts.tol_mm {
        Ok(OppositionContact {
            finger,
            distance_mm,
            state: report.state,
            starts,
            iterations,
        })
    } else {
        Err(OppositionError::NoContact {
            finger,
            tol_mm: opts.tol_mm,
            best_distance_mm: distance_mm,
            best_state: report.state,
        })
    }
}

/// Returns the first converged solve, or the best one when none converge.
fn multi_start(
    kin: &HandKinematics,
    desc: &HandDescription,
    objective: &[Objective],
    free: [bool; 18],
    fixed: Option<HandState>,
    tol_mm: f64,
    max_iter: usize,
) -> Result<(IkReport, usize, usize), IkError> {
    let opts = IkOptions {
        tol_mm,
        max_iter,
        free: Some(free),
        ..Default::default()
    };
    let mut best: Option<IkReport> = None;
    let mut total_iter = 0;
    for (k, &f) in START_FRACTIONS.iter().enumerate() {
        let mut seed = fixed.unwrap_or_default();
        for a in Actuator::ALL.into_iter().filter(|a| free[a.index()]) {
            let lim = kin.limits(a);
            seed.set(a, lim.min_deg + f * lim.total());
        }
        let r = solve_with(kin, desc.palm.length_mm, objective, &seed, &opts)?;
        total_iter += r.iterations;
        if r.success() {
            return Ok((r, k + 1, total_iter));
        }
        if best.as_ref().is_none_or(|b| r.residual_mm < b.residual_mm) {
            best = Some(r);
        }
    }
    Ok((best.expect("at least one start"), START_FRACTIONS.len(), total_iter))
}
