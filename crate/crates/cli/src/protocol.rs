//! JSON messages exchanged on the `/control` socket. Every message is one
//! text frame holding one object tagged by `type`.

use std::collections::BTreeMap;

use hand_twin::bus::MasterStats;
use hand_twin::kinematics::HandPose;
use hand_twin::teleop::RetargetFrame;
use hand_twin::{Actuator, DigitId, HandState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    /// Set one actuator target, in its own units.
    Slider {
        #[serde(default)]
        id: Option<String>,
        actuator: Actuator,
        deg: f64,
    },
    /// Move a fingertip to a point in the hand frame; the DIP follows.
    Drag {
        #[serde(default)]
        id: Option<String>,
        digit: DigitId,
        tip: [f64; 3],
    },
    WristPad {
        #[serde(default)]
        id: Option<String>,
        fe_deg: f64,
        rud_deg: f64,
    },
    /// One glove record, queued for retargeting.
    Frame {
        #[serde(default)]
        id: Option<String>,
        frame: RetargetFrame,
    },
    Replay {
        #[serde(default)]
        id: Option<String>,
        action: ReplayAction,
        #[serde(default)]
        trace: Option<BundledTrace>,
    },
}

impl ClientMessage {
    pub fn id(&self) -> Option<&str> {
        match self {
            ClientMessage::Slider { id, .. }
            | ClientMessage::Drag { id, .. }
            | ClientMessage::WristPad { id, .. }
            | ClientMessage::Frame { id, .. }
            | ClientMessage::Replay { id, .. } => id.as_deref(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplayAction {
    Start,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundledTrace {
    Opposition,
    Sample,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Ack(Ack),
    IkResult(IkResult),
    Error(ErrorRecord),
    Telemetry(Box<TelemetryMessage>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ack {
    pub id: Option<String>,
    /// The message kind acknowledged.
    pub of: &'static str,
    /// Targets as applied by the bus, for slider and wrist pad.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub applied: BTreeMap<Actuator, AppliedTarget>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AppliedTarget {
    pub deg: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IkResult {
    pub id: Option<String>,
    pub digit: DigitId,
    pub reachable: bool,
    /// Best tip distance found, mm.
    pub residual_mm: f64,
    pub iterations: usize,
    /// Commanded targets after the drag; unchanged when unreachable.
    pub targets: HandState,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub id: Option<String>,
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Malformed,
    InvalidValue,
    OutOfOrder,
    InfeasibleWristPose,
    BusFault,
    Solver,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TelemetryMessage {
    pub seq: u64,
    pub t_s: f64,
    pub targets: HandState,
    pub measured: HandState,
    /// Bit 1 clamped, 2 drive off, 4 settled.
    pub flags: BTreeMap<Actuator, u8>,
    /// Forward kinematics of the measured state.
    pub pose: HandPose,
    /// Thumb tip to each fingertip, measured state, mm.
    pub thumb_distance_mm: BTreeMap<DigitId, f64>,
    pub teleop: TeleopStatus,
    pub replay: Option<ReplayStatus>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TeleopStatus {
    pub last_t_ms: Option<i64>,
    pub held: bool,
    /// No accepted frame for longer than the staleness limit.
    pub stale: bool,
    pub residual_mm: f64,
    pub queued: usize,
    pub frames_processed: u64,
    pub frames_held: u64,
    /// Frames discarded because the queue was full (oldest first).
    pub frames_dropped: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayStatus {
    pub trace: BundledTrace,
    pub active: bool,
    pub index: usize,
    pub total: usize,
    pub t_ms: i64,
    /// Fingers within the contact distance of the thumb tip.
    pub contacts: Vec<DigitId>,
}

/// Body of `GET /state`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSnapshot {
    pub t_s: f64,
    pub ticks: u64,
    pub quantum_deg: f64,
    pub targets: HandState,
    pub measured: HandState,
    pub flags: BTreeMap<Actuator, u8>,
    pub pose: HandPose,
    pub limits: BTreeMap<Actuator, [f64; 2]>,
    /// Friction minus lead angle for screw and worm stages, degrees.
    pub self_lock_margin_deg: BTreeMap<Actuator, Option<f64>>,
    pub self_locking: BTreeMap<Actuator, bool>,
    pub teleop: TeleopStatus,
    pub replay: Option<ReplayStatus>,
    pub bus: MasterStats,
}
