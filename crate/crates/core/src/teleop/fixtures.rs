use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::retarget::Mapping;
use super::trace::{FingerTargets, RetargetFrame, WristHint};
use crate::kinematics::{
    opposition_check, Actuator, HandKinematics, HandState, OppositionError, OppositionOptions, Site,
};
use crate::model::{DigitId, HandDescription};

/// Glove sample rate assumed for the bundled traces.
pub const FIXTURE_RATE_HZ: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoldSegment {
    pub finger: DigitId,
    pub hold_start_ms: i64,
    pub hold_end_ms: i64,
}

fn frame_time_ms(k: usize) -> i64 {
    (k as f64 * 1000.0 / FIXTURE_RATE_HZ).round() as i64
}

/// Glove-frame record whose mapped targets are exactly the FK sites of `q`.
pub fn frame_from_state(kin: &HandKinematics, mapping: &Mapping, q: &HandState, t_ms: i64, wrist: bool) -> RetargetFrame {
    let fingers: BTreeMap<DigitId, FingerTargets> = DigitId::ALL
        .iter()
        .map(|&d| {
            (
                d,
                FingerTargets {
                    dip: mapping.to_glove(kin.site(q, d, Site::Dip)),
                    tip: mapping.to_glove(kin.site(q, d, Site::Tip)),
                },
            )
        })
        .collect();
    RetargetFrame {
        t_ms,
        fingers,
        wrist: wrist.then(|| WristHint {
            fe_deg: q.get(Actuator::WristFe),
            rud_deg: q.get(Actuator::WristRud),
        }),
    }
}

/// Ten seconds of smooth motion of every joint, starting from the zero pose.
pub fn sample_trace(desc: &HandDescription, mapping: &Mapping) -> Vec<RetargetFrame> {
    let kin = HandKinematics::new(desc);
    (0..600)
        .map(|k| {
            let t = k as f64 / FIXTURE_RATE_HZ;
            let mut q = HandState::zero();
            for (i, a) in Actuator::ALL.into_iter().enumerate() {
                let lim = kin.limits(a);
                let f = 0.1 + 0.02 * (i % 8) as f64;
                let v = match a {
                    Actuator::AbductionServo => 0.4 * lim.max_deg * (TAU * f * t).sin(),
                    Actuator::WristFe => 20.0 * (TAU * 0.15 * t).sin(),
                    Actuator::WristRud => 10.0 * (TAU * 0.2 * t).sin(),
                    _ => 0.6 * lim.max_deg * 0.5 * (1.0 - (TAU * f * t).cos()),
                };
                q.set(a, lim.clamp(v));
            }
            frame_from_state(&kin, mapping, &q, frame_time_ms(k), true)
        })
        .collect()
}

/// Thumb meets D2..D5 in turn: half a second neutral, then for each finger
/// a 1.5 s joint-space transition to the contact pose, a 1 s hold and a
/// 1.5 s return.
pub fn opposition_trace(
    desc: &HandDescription,
    mapping: &Mapping,
) -> Result<(Vec<RetargetFrame>, Vec<HoldSegment>), OppositionError> {
    let kin = HandKinematics::new(desc);
    let opts = OppositionOptions {
        tol_mm: 0.5,
        ..Default::default()
    };
    let mut keys: Vec<(f64, HandState)> = vec![(0.0, HandState::zero()), (0.5, HandState::zero())];
    let mut segments = Vec::new();
    let mut t = 0.5;
    for finger in DigitId::FINGERS {
        let contact = opposition_check(desc, finger, &opts)?.state;
        keys.push((t + 1.5, contact));
        keys.push((t + 2.5, contact));
        keys.push((t + 4.0, HandState::zero()));
        segments.push(HoldSegment {
            finger,
            hold_start_ms: ((t + 1.5) * 1000.0).round() as i64,
            hold_end_ms: ((t + 2.5) * 1000.0).round() as i64,
        });
        t += 4.0;
    }
    let n = (t * FIXTURE_RATE_HZ).round() as usize + 1;
    let frames = (0..n)
        .map(|k| {
            let tk = k as f64 / FIXTURE_RATE_HZ;
            let q = interpolate(&keys, tk);
            frame_from_state(&kin, mapping, &q, frame_time_ms(k), true)
        })
        .collect();
    Ok((frames, segments))
}

fn interpolate(keys: &[(f64, HandState)], t: f64) -> HandState {
    let j = keys.iter().rposition(|(tk, _)| *tk <= t).unwrap_or(0);
    if j + 1 >= keys.len() {
        return keys[j].1;
    }
    let (t0, a) = keys[j];
    let (t1, b) = keys[j + 1];
    let u = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
    let mut v = [0.0; 18];
    for (k, x) in v.iter_mut().enumerate() {
        *x = a.values()[k] + u * (b.values()[k] - a.values()[k]);
    }
    HandState::from_values(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_hand;

    #[test]
    fn sample_has_600_frames_at_60_hz() {
        let f = sample_trace(&default_hand(), &Mapping::default());
        assert_eq!(f.len(), 600);
        assert_eq!(f[0].t_ms, 0);
        assert_eq!(f[60].t_ms, 1000);
        assert_eq!(f[599].t_ms, 9983);
    }
}
