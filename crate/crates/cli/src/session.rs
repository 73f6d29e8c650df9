//! The simulator state machine behind `serve`. Single-threaded: the server
//! feeds it client messages and ticks in one order, which makes telemetry a
//! function of the message schedule.

use std::collections::{BTreeMap, HashMap, VecDeque};

use hand_twin::bus::{Master, Network};
use hand_twin::kinematics::{solve_with, HandKinematics, IkOptions, Objective, Site};
use hand_twin::model::ModelError;
use hand_twin::teleop::{
    opposition_trace, retarget_frame, sample_trace, Mapping, RetargetFrame, RetargetOptions,
};
use hand_twin::wrist::{wrist_ik, WristPose};
use hand_twin::{Actuator, DigitId, HandDescription, HandState};

use crate::protocol::{
    Ack, AppliedTarget, BundledTrace, ClientMessage, ErrorCode, ErrorRecord, IkResult, ReplayAction, ReplayStatus,
    ServerMessage, StateSnapshot, TeleopStatus, TelemetryMessage,
};

pub type ClientId = u64;

/// Drags closer than this count as reachable, mm.
pub const REACH_TOL_MM: f64 = 0.5;
/// Thumb-to-fingertip distance flagged as contact during replay, mm.
pub const CONTACT_MM: f64 = 5.0;
pub const FRAME_QUEUE_CAPACITY: usize = 64;
const STALE_AFTER_MS: i64 = 250;
const REMEMBERED_IDS: usize = 4096;
const DRAG_SEED_FRACTIONS: [f64; 4] = [0.5, 0.25, 0.75, 0.1];

#[derive(Debug, Clone, PartialEq)]
pub struct Outgoing {
    pub to: ClientId,
    pub message: ServerMessage,
}

struct Replay {
    trace: BundledTrace,
    frames: Vec<RetargetFrame>,
    start_tick: u64,
    next: usize,
    active: bool,
}

pub struct Session {
    desc: HandDescription,
    kin: HandKinematics,
    mapping: Mapping,
    master: Master,
    seen: HashMap<String, Vec<ServerMessage>>,
    seen_order: VecDeque<String>,
    frames: VecDeque<RetargetFrame>,
    last_queued_ms: Option<i64>,
    last_ok_ms: Option<i64>,
    teleop: TeleopStatus,
    replay: Option<Replay>,
    seq: u64,
}

impl Session {
    pub fn new(desc: HandDescription) -> Result<Self, ModelError> {
        let master = Master::new(Network::new(&desc)?);
        Ok(Self {
            kin: HandKinematics::new(&desc),
            desc,
            mapping: Mapping::default(),
            master,
            seen: HashMap::new(),
            seen_order: VecDeque::new(),
            frames: VecDeque::new(),
            last_queued_ms: None,
            last_ok_ms: None,
            teleop: TeleopStatus::default(),
            replay: None,
            seq: 0,
        })
    }

    pub fn desc(&self) -> &HandDescription {
        &self.desc
    }

    pub fn master(&self) -> &Master {
        &self.master
    }

    pub fn ticks(&self) -> u64 {
        self.master.network().ticks()
    }

    pub fn tick_hz(&self) -> f64 {
        self.master.network().config().tick_hz
    }

    /// Parses and applies one text message. Malformed input yields an error
    /// record and leaves the state untouched.
    pub fn handle_text(&mut self, client: ClientId, text: &str) -> Vec<Outgoing> {
        match serde_json::from_str::<ClientMessage>(text) {
            Ok(msg) => self.handle(client, msg),
            Err(e) => {
                let id = serde_json::from_str::<serde_json::Value>(text)
                    .ok()
                    .and_then(|v| v.get("id").and_then(|i| i.as_str()).map(String::from));
                vec![Outgoing {
                    to: client,
                    message: error(id, ErrorCode::Malformed, e.to_string()),
                }]
            }
        }
    }

    /// Applies a message. A repeated `id` replays the first replies without
    /// touching the simulator again.
    pub fn handle(&mut self, client: ClientId, msg: ClientMessage) -> Vec<Outgoing> {
        let id = msg.id().map(String::from);
        if let Some(replies) = id.as_ref().and_then(|k| self.seen.get(k)) {
            return replies
                .iter()
                .map(|m| Outgoing {
                    to: client,
                    message: m.clone(),
                })
                .collect();
        }
        let replies = self.apply(msg);
        if let Some(k) = id {
            if self.seen_order.len() >= REMEMBERED_IDS {
                if let Some(old) = self.seen_order.pop_front() {
                    self.seen.remove(&old);
                }
            }
            self.seen_order.push_back(k.clone());
            self.seen.insert(k, replies.clone());
        }
        replies
            .into_iter()
            .map(|message| Outgoing { to: client, message })
            .collect()
    }

    fn apply(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        match msg {
            ClientMessage::Slider { id, actuator, deg } => {
                if !deg.is_finite() {
                    return vec![error(id, ErrorCode::InvalidValue, "deg must be finite".into())];
                }
                match self.set_targets(&[(actuator, deg)]) {
                    Ok(applied) => vec![ack(id, "slider", applied)],
                    Err(e) => vec![e.with_id(id)],
                }
            }
            ClientMessage::WristPad { id, fe_deg, rud_deg } => {
                if !(fe_deg.is_finite() && rud_deg.is_finite()) {
                    return vec![error(id, ErrorCode::InvalidValue, "wrist angles must be finite".into())];
                }
                if let Err(e) = wrist_ik(&self.desc.wrist.geometry, WristPose::new(fe_deg, rud_deg)) {
                    return vec![error(id, ErrorCode::InfeasibleWristPose, e.to_string())];
                }
                match self.set_targets(&[(Actuator::WristFe, fe_deg), (Actuator::WristRud, rud_deg)]) {
                    Ok(applied) => vec![ack(id, "wrist_pad", applied)],
                    Err(e) => vec![e.with_id(id)],
                }
            }
            ClientMessage::Drag { id, digit, tip } => self.drag(id, digit, tip),
            ClientMessage::Frame { id, frame } => {
                if !frame.is_finite() {
                    return vec![error(id, ErrorCode::InvalidValue, "frame holds a non-finite value".into())];
                }
                if self.last_queued_ms.is_some_and(|last| frame.t_ms < last) {
                    return vec![error(
                        id,
                        ErrorCode::OutOfOrder,
                        format!("frame t_ms {} precedes {}", frame.t_ms, self.last_queued_ms.unwrap_or_default()),
                    )];
                }
                self.enqueue(frame);
                vec![ack(id, "frame", BTreeMap::new())]
            }
            ClientMessage::Replay { id, action, trace } => match action {
                ReplayAction::Stop => {
                    if let Some(r) = self.replay.as_mut() {
                        r.active = false;
                    }
                    vec![ack(id, "replay", BTreeMap::new())]
                }
                ReplayAction::Start => {
                    let trace = trace.unwrap_or(BundledTrace::Opposition);
                    let frames = match trace {
                        BundledTrace::Sample => Ok(sample_trace(&self.desc, &self.mapping)),
                        BundledTrace::Opposition => opposition_trace(&self.desc, &self.mapping).map(|(f, _)| f),
                    };
                    match frames {
                        Ok(frames) => {
                            self.frames.clear();
                            self.last_queued_ms = None;
                            self.last_ok_ms = None;
                            self.replay = Some(Replay {
                                trace,
                                frames,
                                start_tick: self.ticks(),
                                next: 0,
                                active: true,
                            });
                            vec![ack(id, "replay", BTreeMap::new())]
                        }
                        Err(e) => vec![error(id, ErrorCode::Solver, e.to_string())],
                    }
                }
            },
        }
    }

    fn enqueue(&mut self, frame: RetargetFrame) {
        if self.frames.len() >= FRAME_QUEUE_CAPACITY {
            self.frames.pop_front();
            self.teleop.frames_dropped += 1;
        }
        self.last_queued_ms = Some(frame.t_ms);
        self.frames.push_back(frame);
    }

    fn set_targets(&mut self, targets: &[(Actuator, f64)]) -> Result<BTreeMap<Actuator, AppliedTarget>, SessionFault> {
        let mut applied = BTreeMap::new();
        for &(a, deg) in targets {
            let r = self.master.set_target(a, deg).map_err(|e| SessionFault(ErrorCode::BusFault, e.to_string()))?;
            applied.insert(
                a,
                AppliedTarget {
                    deg: r.applied_deg,
                    clamped: r.clamped,
                },
            );
        }
        Ok(applied)
    }

    /// Sends every target of `state` that differs from the current one by
    /// more than an encoder quantum.
    fn command(&mut self, state: &HandState) -> Result<(), SessionFault> {
        let current = self.master.network().targets();
        let q = self.master.network().quantum_deg();
        let moves: Vec<(Actuator, f64)> = Actuator::ALL
            .into_iter()
            .filter(|&a| (state.get(a) - current.get(a)).abs() > q)
            .map(|a| (a, state.get(a)))
            .collect();
        self.set_targets(&moves).map(|_| ())
    }

    fn drag(&mut self, id: Option<String>, digit: DigitId, tip: [f64; 3]) -> Vec<ServerMessage> {
        if !tip.iter().all(|v| v.is_finite()) {
            return vec![error(id, ErrorCode::InvalidValue, "tip must be finite".into())];
        }
        let current = self.master.network().targets();
        let objective = [Objective::reach(digit, Site::Tip, tip.into(), 1.0)];
        let mut free = [false; 18];
        for a in Actuator::of_digit(digit) {
            free[a.index()] = true;
        }
        let opts = IkOptions {
            tol_mm: 1e-3,
            free: Some(free),
            ..Default::default()
        };
        let mut seeds = vec![current.clamped(&self.desc)];
        for f in DRAG_SEED_FRACTIONS {
            let mut s = seeds[0];
            for a in Actuator::of_digit(digit) {
                let l = self.kin.limits(a);
                s.set(a, l.min_deg + f * (l.max_deg - l.min_deg));
            }
            seeds.push(s);
        }
        let mut best: Option<hand_twin::kinematics::IkReport> = None;
        let mut iterations = 0;
        for seed in &seeds {
            let report = match solve_with(&self.kin, self.desc.palm.length_mm, &objective, seed, &opts) {
                Ok(r) => r,
                Err(e) => return vec![error(id, ErrorCode::Solver, e.to_string())],
            };
            iterations += report.iterations;
            let better = best.as_ref().is_none_or(|b| report.residual_mm < b.residual_mm);
            if better {
                best = Some(report);
            }
            if best.as_ref().is_some_and(|b| b.residual_mm <= REACH_TOL_MM) {
                break;
            }
        }
        let best = best.expect("at least one seed");
        let reachable = best.residual_mm <= REACH_TOL_MM;
        if reachable {
            if let Err(e) = self.command(&best.state) {
                return vec![e.with_id(id)];
            }
        }
        vec![ServerMessage::IkResult(IkResult {
            id,
            digit,
            reachable,
            residual_mm: best.residual_mm,
            iterations,
            targets: self.master.network().targets(),
        })]
    }

    /// One bus tick. Due replay frames are queued first, then at most one
    /// queued frame is retargeted and commanded.
    pub fn step(&mut self) {
        if let Some(r) = self.replay.as_mut().filter(|r| r.active) {
            let elapsed_ms = (self.master.network().ticks() - r.start_tick) as f64 * 1000.0
                / self.master.network().config().tick_hz;
            let t0 = r.frames.first().map_or(0, |f| f.t_ms);
            let mut due = Vec::new();
            while r.next < r.frames.len() && (r.frames[r.next].t_ms - t0) as f64 <= elapsed_ms {
                due.push(r.frames[r.next].clone());
                r.next += 1;
            }
            if r.next >= r.frames.len() {
                r.active = false;
            }
            for f in due {
                self.enqueue(f);
            }
        }
        if let Some(frame) = self.frames.pop_front() {
            self.retarget(&frame);
        }
        let dt = self.master.network().tick_period_s();
        self.master.tick(dt);
    }

    fn retarget(&mut self, frame: &RetargetFrame) {
        let seed = self.master.network().targets();
        let opts = RetargetOptions::default();
        self.teleop.frames_processed += 1;
        self.teleop.last_t_ms = Some(frame.t_ms);
        match retarget_frame(frame, &self.mapping, &self.desc, &seed, &opts) {
            Ok(out) if !out.held => {
                self.teleop.held = false;
                self.teleop.residual_mm = out.residual_mm;
                self.last_ok_ms = Some(frame.t_ms);
                // Bus faults cannot occur on the lossless bus; a failed
                // command simply leaves the previous target.
                let _ = self.command(&out.state);
            }
            Ok(out) => {
                self.teleop.held = true;
                self.teleop.frames_held += 1;
                self.teleop.residual_mm = out.residual_mm;
            }
            Err(_) => {
                self.teleop.held = true;
                self.teleop.frames_held += 1;
            }
        }
        self.teleop.stale = self.teleop.held && frame.t_ms - self.last_ok_ms.unwrap_or(frame.t_ms) > STALE_AFTER_MS;
    }

    fn replay_status(&self, measured: &HandState) -> Option<ReplayStatus> {
        self.replay.as_ref().map(|r| {
            let contacts = DigitId::FINGERS
                .into_iter()
                .filter(|&f| self.thumb_distance(measured, f) <= CONTACT_MM)
                .collect();
            let t0 = r.frames.first().map_or(0, |f| f.t_ms);
            ReplayStatus {
                trace: r.trace,
                active: r.active,
                index: r.next,
                total: r.frames.len(),
                t_ms: r.next.checked_sub(1).map_or(0, |i| r.frames[i].t_ms - t0),
                contacts,
            }
        })
    }

    fn thumb_distance(&self, q: &HandState, finger: DigitId) -> f64 {
        (self.kin.site(q, DigitId::D1, Site::Tip) - self.kin.site(q, finger, Site::Tip)).norm()
    }

    fn flags(&self) -> BTreeMap<Actuator, u8> {
        Actuator::ALL.into_iter().zip(self.master.network().flags()).collect()
    }

    fn teleop_status(&self) -> TeleopStatus {
        TeleopStatus {
            queued: self.frames.len(),
            ..self.teleop.clone()
        }
    }

    pub fn telemetry(&mut self) -> ServerMessage {
        self.seq += 1;
        let measured = self.master.snapshot();
        ServerMessage::Telemetry(Box::new(TelemetryMessage {
            seq: self.seq,
            t_s: self.master.network().time_s(),
            targets: self.master.network().targets(),
            measured,
            flags: self.flags(),
            pose: self.kin.pose(&measured),
            thumb_distance_mm: DigitId::FINGERS
                .into_iter()
                .map(|f| (f, self.thumb_distance(&measured, f)))
                .collect(),
            teleop: self.teleop_status(),
            replay: self.replay_status(&measured),
        }))
    }

    pub fn snapshot(&self) -> StateSnapshot {
        let net = self.master.network();
        let measured = self.master.snapshot();
        StateSnapshot {
            t_s: net.time_s(),
            ticks: net.ticks(),
            quantum_deg: net.quantum_deg(),
            targets: net.targets(),
            measured,
            flags: self.flags(),
            pose: self.kin.pose(&measured),
            limits: Actuator::ALL
                .into_iter()
                .map(|a| {
                    let l = self.desc.actuator_limits(a);
                    (a, [l.min_deg, l.max_deg])
                })
                .collect(),
            self_lock_margin_deg: Actuator::ALL
                .into_iter()
                .map(|a| (a, self.desc.self_lock(a).map(|s| s.margin_deg)))
                .collect(),
            self_locking: Actuator::ALL
                .into_iter()
                .map(|a| (a, net.channel(a).self_locking))
                .collect(),
            teleop: self.teleop_status(),
            replay: self.replay_status(&measured),
            bus: self.master.stats(),
        }
    }
}

struct SessionFault(ErrorCode, String);

impl SessionFault {
    fn with_id(self, id: Option<String>) -> ServerMessage {
        error(id, self.0, self.1)
    }
}

fn error(id: Option<String>, code: ErrorCode, message: String) -> ServerMessage {
    ServerMessage::Error(ErrorRecord { id, code, message })
}

fn ack(id: Option<String>, of: &'static str, applied: BTreeMap<Actuator, AppliedTarget>) -> ServerMessage {
    ServerMessage::Ack(Ack { id, of, applied })
}

#[cfg(test)]
mod tests {
    use super::*;
    use hand_twin::default_hand;

    fn session() -> Session {
        Session::new(default_hand()).unwrap()
    }

    #[test]
    fn slider_reaches_target() {
        let mut s = session();
        let out = s.handle_text(1, r#"{"type":"slider","actuator":"D2_MCP","deg":45}"#);
        assert!(matches!(&out[0].message, ServerMessage::Ack(a) if a.applied[&Actuator::D2Mcp].deg == 45.0));
        for _ in 0..1000 {
            s.step();
        }
        let q = s.master().network().quantum_deg();
        assert!((s.master().snapshot().get(Actuator::D2Mcp) - 45.0).abs() <= q);
    }

    #[test]
    fn duplicate_id_is_applied_once() {
        let mut s = session();
        let msg = r#"{"type":"slider","id":"x1","actuator":"D3_PIP","deg":20}"#;
        let first = s.handle_text(1, msg);
        s.handle_text(1, r#"{"type":"slider","actuator":"D3_PIP","deg":10}"#);
        let again = s.handle_text(2, msg);
        assert_eq!(first[0].message, again[0].message);
        assert_eq!(s.master().network().targets().get(Actuator::D3Pip), 10.0);
    }

    #[test]
    fn malformed_keeps_id() {
        let mut s = session();
        let out = s.handle_text(3, r#"{"type":"slider","id":"q","actuator":"NOPE","deg":1}"#);
        match &out[0].message {
            ServerMessage::Error(e) => {
                assert_eq!(e.code, ErrorCode::Malformed);
                assert_eq!(e.id.as_deref(), Some("q"));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(out[0].to, 3);
    }

    #[test]
    fn drag_reachable_and_not() {
        let mut s = session();
        let kin = HandKinematics::new(s.desc());
        let goal = HandState::zero().with(Actuator::D2Mcp, 30.0).with(Actuator::D2Pip, 40.0);
        let tip = kin.site(&goal, DigitId::D2, Site::Tip);
        let out = s.handle(1, ClientMessage::Drag {
            id: None,
            digit: DigitId::D2,
            tip: [tip.x, tip.y, tip.z],
        });
        match &out[0].message {
            ServerMessage::IkResult(r) => assert!(r.reachable && r.residual_mm < REACH_TOL_MM),
            other => panic!("{other:?}"),
        }
        let before = s.master().network().targets();
        let out = s.handle(1, ClientMessage::Drag {
            id: None,
            digit: DigitId::D2,
            tip: [900.0, 0.0, 0.0],
        });
        match &out[0].message {
            ServerMessage::IkResult(r) => {
                assert!(!r.reachable && r.residual_mm > 100.0);
                assert_eq!(r.targets, before);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn frames_out_of_order_rejected() {
        let mut s = session();
        let f = |t| format!(r#"{{"type":"frame","frame":{{"t_ms":{t},"fingers":{{}}}}}}"#);
        assert!(matches!(s.handle_text(1, &f(10))[0].message, ServerMessage::Ack(_)));
        assert!(matches!(&s.handle_text(1, &f(5))[0].message, ServerMessage::Error(e) if e.code == ErrorCode::OutOfOrder));
    }

    #[test]
    fn frame_queue_drops_oldest() {
        let mut s = session();
        for t in 0..(FRAME_QUEUE_CAPACITY as i64 + 5) {
            s.handle(1, ClientMessage::Frame {
                id: None,
                frame: RetargetFrame {
                    t_ms: t,
                    fingers: BTreeMap::new(),
                    wrist: None,
                },
            });
        }
        let st = s.snapshot();
        assert_eq!(st.teleop.frames_dropped, 5);
        assert_eq!(st.teleop.queued, FRAME_QUEUE_CAPACITY);
    }

    #[test]
    fn infeasible_wrist_corner_rejected() {
        let mut s = session();
        let out = s.handle_text(1, r#"{"type":"wrist_pad","fe_deg":52,"rud_deg":18}"#);
        assert!(matches!(&out[0].message, ServerMessage::Error(e) if e.code == ErrorCode::InfeasibleWristPose));
        let out = s.handle_text(1, r#"{"type":"wrist_pad","fe_deg":10,"rud_deg":-5}"#);
        assert!(matches!(out[0].message, ServerMessage::Ack(_)));
    }
}
