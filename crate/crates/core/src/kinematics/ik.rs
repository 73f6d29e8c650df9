//! Damped least-squares position IK over any subset of the 18 actuators.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::fk::{DigitFrames, HandKinematics, Site};
use super::jacobian::site_columns;
use super::state::{Actuator, HandState, StateError};
use crate::model::{DigitId, HandDescription};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Drive a site to a point in the forearm frame.
    Reach {
        digit: DigitId,
        site: Site,
        target: Vector3<f64>,
        weight: f64,
    },
    /// Bring two sites together.
    Meet {
        a: (DigitId, Site),
        b: (DigitId, Site),
        weight: f64,
    },
}

impl Objective {
    pub fn reach(digit: DigitId, site: Site, target: Vector3<f64>, weight: f64) -> Self {
        Objective::Reach {
            digit,
            site,
            target,
            weight,
        }
    }

    pub fn weight(&self) -> f64 {
        match *self {
            Objective::Reach { weight, .. } | Objective::Meet { weight, .. } => weight,
        }
    }

    fn digits(&self) -> [DigitId; 2] {
        match *self {
            Objective::Reach { digit, .. } => [digit, digit],
            Objective::Meet { a, b, .. } => [a.0, b.0],
        }
    }
}

/// Default tip:DIP weighting when both are targeted.
pub const TIP_WEIGHT: f64 = 2.0;
pub const DIP_WEIGHT: f64 = 1.0;

/// Reach objectives for per-digit DIP and tip targets.
pub fn targets_to_objectives(targets: &[(DigitId, Option<Vector3<f64>>, Option<Vector3<f64>>)]) -> Vec<Objective> {
    let mut out = Vec::new();
    for &(digit, dip, tip) in targets {
        if let Some(t) = dip {
            out.push(Objective::reach(digit, Site::Dip, t, DIP_WEIGHT));
        }
        if let Some(t) = tip {
            out.push(Objective::reach(digit, Site::Tip, t, TIP_WEIGHT));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkOptions {
    /// Largest damping on the Jacobian normalized by the reference length.
    /// Damping shrinks after full steps and grows back after backtracking.
    pub damping: f64,
    pub max_iter: usize,
    pub tol_mm: f64,
    /// Largest change of any (scaled) actuator per iteration.
    pub max_step_rad: f64,
    /// Normalizing length; the palm length when unset.
    pub reference_length_mm: Option<f64>,
    /// Actuators the solver may move; derived from the objectives when unset.
    pub free: Option<[bool; 18]>,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self {
            damping: 0.05,
            max_iter: 200,
            tol_mm: 1e-3,
            max_step_rad: 0.1,
            reference_length_mm: None,
            free: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IkStatus {
    Converged,
    /// The residual stopped improving above tolerance.
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IkReport {
    pub state: HandState,
    /// Weighted RMS of the objective errors.
    pub residual_mm: f64,
    pub objective_residuals_mm: Vec<f64>,
    pub iterations: usize,
    pub status: IkStatus,
    /// Residual after every accepted iteration, starting with the seed.
    pub history_mm: Vec<f64>,
}

impl IkReport {
    pub fn success(&self) -> bool {
        self.status == IkStatus::Converged
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IkError {
    #[error("at least one objective is required")]
    NoObjectives,
    #[error("objective weights must be positive and finite, got {0}")]
    BadWeight(f64),
    #[error("{0} must be positive and finite, got {1}")]
    BadOption(&'static str, f64),
    #[error("no actuator is free to move")]
    NoFreeActuators,
    #[error("target is not finite")]
    NonFiniteTarget,
    #[error("seed state invalid: {0}")]
    Seed(#[from] StateError),
    #[error("solver diverged (residual {:.6} mm at iteration {})", .0.residual_mm, .0.iterations)]
    Diverged(Box<IkReport>),
}

/// Actuators moved by default: those of every referenced digit, and the
/// wrist when any objective is an absolute reach target.
pub fn default_free(objectives: &[Objective]) -> [bool; 18] {
    let mut free = [false; 18];
    for o in objectives {
        for d in o.digits() {
            for a in Actuator::of_digit(d) {
                free[a.index()] = true;
            }
        }
        if matches!(o, Objective::Reach { .. }) {
            free[Actuator::WristFe.index()] = true;
            free[Actuator::WristRud.index()] = true;
        }
    }
    free
}

struct Problem<'a> {
    kin: &'a HandKinematics,
    objectives: &'a [Objective],
    digits: Vec<DigitId>,
    weight_sum: f64,
}

impl Problem<'_> {
    fn frames(&self, st: &HandState) -> [Option<DigitFrames>; 5] {
        let mut out: [Option<DigitFrames>; 5] = Default::default();
        for &d in &self.digits {
            out[d.index()] = Some(self.kin.frames(st, d));
        }
        out
    }

    fn errors(&self, frames: &[Option<DigitFrames>; 5]) -> Vec<Vector3<f64>> {
        let at = |d: DigitId, s: Site| frames[d.index()].as_ref().expect("frame").site(s);
        self.objectives
            .iter()
            .map(|o| match *o {
                Objective::Reach {
                    digit, site, target, ..
                } => target - at(digit, site),
                Objective::Meet { a, b, .. } => at(b.0, b.1) - at(a.0, a.1),
            })
            .collect()
    }

    fn cost(&self, errors: &[Vector3<f64>]) -> f64 {
        self.objectives
            .iter()
            .zip(errors)
            .map(|(o, e)| o.weight() * e.norm_squared())
            .sum()
    }

    fn residual(&self, cost: f64) -> f64 {
        (cost / self.weight_sum).sqrt()
    }
}

pub fn solve_ik(
    desc: &HandDescription,
    objectives: &[Objective],
    seed: &HandState,
    opts: &IkOptions,
) -> Result<IkReport, IkError> {
    let kin = HandKinematics::new(desc);
    solve_with(&kin, desc.palm.length_mm, objectives, seed, opts)
}

/// Same as [`solve_ik`] with precomputed chains.
pub fn solve_with(
    kin: &HandKinematics,
    palm_length_mm: f64,
    objectives: &[Objective],
    seed: &HandState,
    opts: &IkOptions,
) -> Result<IkReport, IkError> {
    if objectives.is_empty() {
        return Err(IkError::NoObjectives);
    }
    for o in objectives {
        let w = o.weight();
        if !(w > 0.0 && w.is_finite()) {
            return Err(IkError::BadWeight(w));
        }
        if let Objective::Reach { target, .. } = o {
            if !target.iter().all(|v| v.is_finite()) {
                return Err(IkError::NonFiniteTarget);
            }
        }
    }
    let positive = |name, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(IkError::BadOption(name, v))
        }
    };
    positive("damping", opts.damping)?;
    positive("max_step_rad", opts.max_step_rad)?;
    if !(opts.tol_mm >= 0.0 && opts.tol_mm.is_finite()) {
        return Err(IkError::BadOption("tol_mm", opts.tol_mm));
    }
    let lref = positive("reference_length_mm", opts.reference_length_mm.unwrap_or(palm_length_mm))?;

    for a in Actuator::ALL {
        let v = seed.get(a);
        let lim = kin.limits(a);
        if !v.is_finite() {
            return Err(StateError::NonFinite(a).into());
        }
        if v < lim.min_deg - 1e-9 || v > lim.max_deg + 1e-9 {
            return Err(StateError::OutOfLimits {
                actuator: a,
                value_deg: v,
                min_deg: lim.min_deg,
                max_deg: lim.max_deg,
            }
            .into());
        }
    }

    let free = opts.free.unwrap_or_else(|| default_free(objectives));
    let vars: Vec<Actuator> = Actuator::ALL.into_iter().filter(|a| free[a.index()]).collect();
    if vars.is_empty() {
        return Err(IkError::NoFreeActuators);
    }
    // The servo turns many times more than the fingers it drives; solve for
    // the largest resulting abduction angle instead so the step clamp and the
    // damping see comparable units.
    let servo_scale = DigitId::ALL
        .iter()
        .map(|&d| kin.abduction_ratio(d).abs())
        .fold(0.0, f64::max);
    let scale = |a: Actuator| {
        if a == Actuator::AbductionServo && servo_scale > 0.0 {
            servo_scale
        } else {
            1.0
        }
    };

    let mut digits: Vec<DigitId> = objectives.iter().flat_map(|o| o.digits()).collect();
    digits.sort();
    digits.dedup();
    let problem = Problem {
        kin,
        objectives,
        digits,
        weight_sum: objectives.iter().map(|o| o.weight()).sum(),
    };

    let mut state = seed.clamped_to(kin);
    let mut frames = problem.frames(&state);
    let mut errors = problem.errors(&frames);
    let mut cost = problem.cost(&errors);
    let mut history = vec![problem.residual(cost)];
    let mut stalls = 0;
    let mut iterations = 0;
    let n = vars.len();
    let rows = 3 * objectives.len();
    let mut mu = 1.0;

    let report = |state: HandState, errors: &[Vector3<f64>], cost: f64, iterations, status, history: Vec<f64>| IkReport {
        state,
        residual_mm: problem.residual(cost),
        objective_residuals_mm: errors.iter().map(|e| e.norm()).collect(),
        iterations,
        status,
        history_mm: history,
    };

    let status = loop {
        if !cost.is_finite() {
            return Err(IkError::Diverged(Box::new(report(
                state,
                &errors,
                cost,
                iterations,
                IkStatus::Infeasible,
                history,
            ))));
        }
        if problem.residual(cost) <= opts.tol_mm {
            break IkStatus::Converged;
        }
        if iterations >= opts.max_iter {
            break IkStatus::IterationLimit;
        }
        iterations += 1;

        let mut jac = DMatrix::<f64>::zeros(rows, n);
        let mut rhs = DVector::<f64>::zeros(rows);
        for (k, o) in objectives.iter().enumerate() {
            let w = o.weight().sqrt() / lref;
            let cols = match *o {
                Objective::Reach { digit, site, .. } => site_columns(kin, &state, digit, site),
                Objective::Meet { a, b, .. } => {
                    let ca = site_columns(kin, &state, a.0, a.1);
                    let cb = site_columns(kin, &state, b.0, b.1);
                    std::array::from_fn(|i| ca[i] - cb[i])
                }
            };
            for (c, &a) in vars.iter().enumerate() {
                let col = cols[a.index()] * (w / scale(a));
                jac.fixed_view_mut::<3, 1>(3 * k, c).copy_from(&col);
            }
            rhs.fixed_rows_mut::<3>(3 * k).copy_from(&(errors[k] * w));
        }

        let lambda = opts.damping * mu;
        let step = constrained_step(&jac, &rhs, lambda * lambda, &vars, &state, kin);
        let Some(mut du) = step else {
            break IkStatus::Infeasible;
        };
        let big = du.amax();
        if big > opts.max_step_rad {
            du *= opts.max_step_rad / big;
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=10 {
            let mut trial = state;
            for (c, &a) in vars.iter().enumerate() {
                let lim = kin.limits(a);
                let v = state.get(a) + (alpha * du[c] / scale(a)).to_degrees();
                trial.set(a, lim.clamp(v));
            }
            let tf = problem.frames(&trial);
            let te = problem.errors(&tf);
            let tc = problem.cost(&te);
            if tc < cost {
                accepted = Some((trial, tf, te, tc));
                break;
            }
            alpha *= 0.5;
        }
        let Some((trial, tf, te, tc)) = accepted else {
            if mu < 1.0 {
                mu = 1.0;
                continue;
            }
            break IkStatus::Infeasible;
        };
        mu = if alpha == 1.0 { (mu * 0.25).max(1e-4) } else { (mu * 4.0).min(1.0) };
        let improvement = (cost - tc) / cost;
        state = trial;
        frames = tf;
        errors = te;
        cost = tc;
        history.push(problem.residual(cost));
        if improvement < 1e-9 {
            stalls += 1;
            if stalls >= 5 {
                break IkStatus::Infeasible;
            }
        } else {
            stalls = 0;
        }
    };
    let _ = frames;
    let status = if problem.residual(cost) <= opts.tol_mm {
        IkStatus::Converged
    } else {
        status
    };
    Ok(report(state, &errors, cost, iterations, status, history))
}

/// Damped least-squares step over the actuators that are not pinned against
/// a limit by the step itself.
fn constrained_step(
    jac: &DMatrix<f64>,
    rhs: &DVector<f64>,
    lambda2: f64,
    vars: &[Actuator],
    state: &HandState,
    kin: &HandKinematics,
) -> Option<DVector<f64>> {
    let n = vars.len();
    let mut active = vec![true; n];
    for _ in 0..=n {
        let idx: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
        if idx.is_empty() {
            return None;
        }
        let sub = jac.select_columns(idx.iter());
        let mut lhs = sub.transpose() * &sub;
        for d in 0..idx.len() {
            lhs[(d, d)] += lambda2;
        }
        let g = sub.transpose() * rhs;
        let sol = lhs.cholesky()?.solve(&g);
        let mut changed = false;
        for (k, &i) in idx.iter().enumerate() {
            let a = vars[i];
            let lim = kin.limits(a);
            let v = state.get(a);
            let at_lo = v <= lim.min_deg + 1e-12;
            let at_hi = v >= lim.max_deg - 1e-12;
            if (at_lo && sol[k] < 0.0) || (at_hi && sol[k] > 0.0) {
                active[i] = false;
                changed = true;
            }
        }
        if !changed {
            let mut full = DVector::zeros(n);
            for (k, &i) in idx.iter().enumerate() {
                full[i] = sol[k];
            }
            return Some(full);
        }
    }
    None
}

impl HandState {
    pub(crate) fn clamped_to(&self, kin: &HandKinematics) -> HandState {
        let mut out = *self;
        for a in Actuator::ALL {
            out.set(a, kin.limits(a).clamp(self.get(a)));
        }
        out
    }
}
