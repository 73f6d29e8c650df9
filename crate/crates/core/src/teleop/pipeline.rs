use std::collections::VecDeque;

use nalgebra::Vector3;
use serde::Serialize;
use thiserror::Error;

use super::retarget::{mapped_targets, retarget_targets, DigitTargets, Mapping, MappingError, RetargetOptions};
use super::trace::RetargetFrame;
use crate::bus::{BusFault, Master, Telemetry};
use crate::kinematics::{Actuator, HandKinematics, HandState, IkError};
use crate::model::HandDescription;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub retarget: RetargetOptions,
    /// Retarget at most this often; every frame when unset.
    pub rate_hz: Option<f64>,
    /// Bus time simulated after the last frame.
    pub tail_s: f64,
    /// Held frames older than this since the last accepted one are stale.
    pub stale_after_ms: i64,
    pub collect_telemetry: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            retarget: RetargetOptions::default(),
            rate_hz: None,
            tail_s: 0.5,
            stale_after_ms: 250,
            collect_telemetry: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommandRecord {
    pub t_ms: i64,
    pub actuator: Actuator,
    pub target_deg: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameRecord {
    pub t_ms: i64,
    /// False for frames dropped by the rate limit.
    pub processed: bool,
    pub held: bool,
    pub stale: bool,
    pub residual_mm: f64,
    /// Command after this frame.
    pub commanded: HandState,
    /// Encoder readings when the frame arrived.
    pub measured: HandState,
    /// `|last sent target - reading|` per actuator when the frame arrived.
    pub tracking_error_deg: [f64; 18],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineOutput {
    pub commands: Vec<CommandRecord>,
    pub frames: Vec<FrameRecord>,
    pub max_tracking_error_deg: [f64; 18],
    /// After the tail time.
    pub final_tracking_error_deg: [f64; 18],
    pub final_measured: HandState,
    pub held_frames: usize,
    #[serde(skip)]
    pub telemetry: Vec<Telemetry>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error("bus: {0}")]
    Bus(#[from] BusFault),
    #[error("retarget at t = {t_ms} ms: {source}")]
    Ik {
        t_ms: i64,
        #[source]
        source: IkError,
    },
    #[error("frame at t = {t_ms} ms precedes the previous one")]
    Order { t_ms: i64 },
}

fn tracking(sent: &HandState, measured: &HandState) -> [f64; 18] {
    let mut e = [0.0; 18];
    for (k, x) in e.iter_mut().enumerate() {
        *x = (sent.values()[k] - measured.values()[k]).abs();
    }
    e
}

/// Replays frames in timestamp order against the bus: tick to the frame
/// time, record tracking error, retarget from the previous command and send
/// every target that moved by more than one encoder quantum.
pub fn run_pipeline(
    frames: &[RetargetFrame],
    mapping: &Mapping,
    desc: &HandDescription,
    master: &mut Master,
    opts: &PipelineOptions,
) -> Result<PipelineOutput, PipelineError> {
    mapping.validate()?;
    let kin = HandKinematics::new(desc);
    let quantum = master.network().quantum_deg();
    let tick_hz = master.network().config().tick_hz;
    let start_ticks = master.network().ticks();
    let t0 = frames.first().map_or(0, |f| f.t_ms);

    let mut sent = master.network().targets();
    let mut commanded = sent;
    let mut out = PipelineOutput {
        commands: Vec::new(),
        frames: Vec::new(),
        max_tracking_error_deg: [0.0; 18],
        final_tracking_error_deg: [0.0; 18],
        final_measured: master.snapshot(),
        held_frames: 0,
        telemetry: Vec::new(),
    };
    let mut history: VecDeque<Vec<DigitTargets>> = VecDeque::new();
    let mut last_ok_ms = t0;
    let mut last_processed: Option<i64> = None;
    let mut prev_t = t0;

    for frame in frames {
        if frame.t_ms < prev_t {
            return Err(PipelineError::Order { t_ms: frame.t_ms });
        }
        prev_t = frame.t_ms;
        let due = start_ticks + ((frame.t_ms - t0) as f64 * 1e-3 * tick_hz).round() as u64;
        let dt = master.network().tick_period_s();
        while master.network().ticks() < due {
            let batch = master.tick(dt);
            if opts.collect_telemetry {
                out.telemetry.extend(batch);
            }
        }
        let measured = master.snapshot();
        let err = tracking(&sent, &measured);
        for (m, e) in out.max_tracking_error_deg.iter_mut().zip(err) {
            *m = m.max(e);
        }

        let process = match (opts.rate_hz, last_processed) {
            (Some(hz), Some(last)) => (frame.t_ms - last) as f64 >= 1000.0 / hz - 1e-9,
            _ => true,
        };
        let mut record = FrameRecord {
            t_ms: frame.t_ms,
            processed: process,
            held: false,
            stale: false,
            residual_mm: 0.0,
            commanded,
            measured,
            tracking_error_deg: err,
        };
        if !process {
            out.frames.push(record);
            continue;
        }
        last_processed = Some(frame.t_ms);

        history.push_back(mapped_targets(frame, mapping));
        while history.len() > mapping.smoothing_window {
            history.pop_front();
        }
        let targets = smoothed(&history);
        let outcome = retarget_targets(
            &kin,
            desc,
            &targets,
            frame.wrist.map(|w| (w.fe_deg, w.rud_deg)),
            &commanded,
            &opts.retarget,
        )
        .map_err(|source| PipelineError::Ik {
            t_ms: frame.t_ms,
            source,
        })?;
        record.residual_mm = outcome.residual_mm;
        if outcome.held {
            out.held_frames += 1;
            record.held = true;
            record.stale = frame.t_ms - last_ok_ms > opts.stale_after_ms;
        } else {
            last_ok_ms = frame.t_ms;
            commanded = outcome.state;
        }
        for a in Actuator::ALL {
            let want = commanded.get(a);
            if (want - sent.get(a)).abs() > quantum {
                let ack = master.set_target(a, want)?;
                sent.set(a, ack.applied_deg);
                out.commands.push(CommandRecord {
                    t_ms: frame.t_ms,
                    actuator: a,
                    target_deg: ack.applied_deg,
                    clamped: ack.clamped,
                });
            }
        }
        record.commanded = commanded;
        out.frames.push(record);
    }

    if !frames.is_empty() {
        let batch = master.run_for(opts.tail_s);
        if opts.collect_telemetry {
            out.telemetry.extend(batch);
        }
    }
    out.final_measured = master.snapshot();
    out.final_tracking_error_deg = tracking(&sent, &out.final_measured);
    for (m, e) in out.max_tracking_error_deg.iter_mut().zip(out.final_tracking_error_deg) {
        *m = m.max(e);
    }
    Ok(out)
}

/// Per-digit average over the window; digits missing from some frames are
/// averaged over the frames that carry them.
fn smoothed(history: &VecDeque<Vec<DigitTargets>>) -> Vec<DigitTargets> {
    let latest = history.back().cloned().unwrap_or_default();
    if history.len() <= 1 {
        return latest;
    }
    latest
        .iter()
        .map(|&(d, _, _)| {
            let (mut dip, mut tip, mut n) = (Vector3::zeros(), Vector3::zeros(), 0.0);
            for frame in history {
                if let Some(&(_, a, b)) = frame.iter().find(|x| x.0 == d) {
                    dip += a;
                    tip += b;
                    n += 1.0;
                }
            }
            (d, dip / n, tip / n)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bus::Network;
    use crate::model::{default_hand, DigitId};
    use crate::teleop::trace::FingerTargets;
    use crate::kinematics::Site;

    #[test]
    fn empty_trace_is_vacuous() {
        let d = default_hand();
        let mut m = Master::new(Network::new(&d).unwrap());
        let out = run_pipeline(&[], &Mapping::default(), &d, &mut m, &PipelineOptions::default()).unwrap();
        assert!(out.commands.is_empty());
        assert!(out.frames.is_empty());
    }

    #[test]
    fn constant_pose_settles() {
        let d = default_hand();
        let kin = HandKinematics::new(&d);
        let map = Mapping::default();
        let q = HandState::zero().with(Actuator::D2Mcp, 30.0).with(Actuator::D2Pip, 20.0);
        let mut fingers = std::collections::BTreeMap::new();
        fingers.insert(
            DigitId::D2,
            FingerTargets {
                dip: map.to_glove(kin.site(&q, DigitId::D2, Site::Dip)),
                tip: map.to_glove(kin.site(&q, DigitId::D2, Site::Tip)),
            },
        );
        let frames: Vec<RetargetFrame> = (0..60)
            .map(|k| RetargetFrame {
                t_ms: k * 50,
                fingers: fingers.clone(),
                wrist: None,
            })
            .collect();
        let mut m = Master::new(Network::new(&d).unwrap());
        let out = run_pipeline(&frames, &map, &d, &mut m, &PipelineOptions::default()).unwrap();
        let q_deg = m.network().quantum_deg();
        assert!(out.final_tracking_error_deg.iter().all(|e| *e <= q_deg));
        assert!(out.frames.last().unwrap().tracking_error_deg.iter().all(|e| *e <= q_deg));
        assert!(!out.commands.is_empty());
    }
}
