use serde::Serialize;

use super::frame::{deg_to_payload, payload_to_deg, BusFault, BusFrame, Command};
use super::{BusConfig, NodeRole};
use crate::kinematics::{Actuator, HandState};
use crate::model::{HandDescription, JointLimits, ModelError};

pub const FLAG_CLAMPED: u8 = 1;
pub const FLAG_DRIVE_OFF: u8 = 2;
pub const FLAG_SETTLED: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Telemetry {
    pub t: f64,
    pub joint: Actuator,
    pub target_deg: f64,
    pub measured_deg: f64,
    pub flags: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotorChannel {
    pub actuator: Actuator,
    pub limits: JointLimits,
    pub target_deg: f64,
    /// Simulated shaft angle; the encoder reports it quantized.
    pub true_deg: f64,
    pub counts_per_rev: u32,
    pub max_speed_deg_s: f64,
    pub kp_per_s: f64,
    pub self_locking: bool,
    pub drive_enabled: bool,
    pub clamped: bool,
    /// Standing external torque, N mm; only its sign matters.
    pub external_torque_nmm: f64,
}

impl MotorChannel {
    pub fn quantum_deg(&self) -> f64 {
        360.0 / self.counts_per_rev as f64
    }

    pub fn reading_deg(&self) -> f64 {
        let q = self.quantum_deg();
        self.limits.clamp((self.true_deg / q).round() * q)
    }

    pub fn flags(&self) -> u8 {
        let mut f = 0;
        if self.clamped {
            f |= FLAG_CLAMPED;
        }
        if !self.drive_enabled {
            f |= FLAG_DRIVE_OFF;
        }
        if (self.target_deg - self.reading_deg()).abs() <= self.quantum_deg() {
            f |= FLAG_SETTLED;
        }
        f
    }

    fn advance(&mut self, dt: f64) {
        if self.drive_enabled {
            self.true_deg = reference_trajectory(self.true_deg, self.target_deg, self.max_speed_deg_s, self.kp_per_s, dt);
        } else if !self.self_locking && self.external_torque_nmm != 0.0 {
            let step = self.external_torque_nmm.signum() * self.max_speed_deg_s * dt;
            self.true_deg = self.limits.clamp(self.true_deg + step);
        }
    }
}

/// Position after `t` seconds of the rate-limited proportional loop
/// `x' = sign(e) min(kp |e|, vmax)` started at `x0`. The simulator advances
/// every channel with this exact solution, so sampling it at tick instants
/// reproduces the simulated trace.
pub fn reference_trajectory(x0: f64, target: f64, vmax: f64, kp: f64, t: f64) -> f64 {
    let e0 = (target - x0).abs();
    let dir = (target - x0).signum();
    let knee = vmax / kp;
    let e = if e0 > knee {
        let t_ramp = (e0 - knee) / vmax;
        if t <= t_ramp {
            e0 - vmax * t
        } else {
            knee * (-kp * (t - t_ramp)).exp()
        }
    } else {
        e0 * (-kp * t).exp()
    };
    if e0 == 0.0 {
        target
    } else {
        target - dir * e
    }
}

#[derive(Debug, Clone)]
struct Node {
    address: u8,
    role: NodeRole,
    channels: Vec<Actuator>,
}

/// The simulated network. Not thread-safe; the owner serializes access.
#[derive(Debug, Clone)]
pub struct Network {
    config: BusConfig,
    nodes: Vec<Node>,
    channels: Vec<MotorChannel>,
    last_emitted: Vec<(f64, f64, u8)>,
    time_s: f64,
    ticks: u64,
}

impl Network {
    pub fn new(desc: &HandDescription) -> Result<Self, ModelError> {
        desc.bus.validate().map_err(ModelError::Bus)?;
        let config = desc.bus.clone();
        let channels: Vec<MotorChannel> = Actuator::ALL
            .iter()
            .map(|&a| {
                let limits = desc.actuator_limits(a);
                MotorChannel {
                    actuator: a,
                    limits,
                    target_deg: limits.clamp(0.0),
                    true_deg: limits.clamp(0.0),
                    counts_per_rev: config.counts_per_rev,
                    max_speed_deg_s: config.speed_deg_s(a),
                    kp_per_s: config.kp_per_s,
                    self_locking: self_locking(desc, a),
                    drive_enabled: true,
                    clamped: false,
                    external_torque_nmm: 0.0,
                }
            })
            .collect();
        let nodes = config
            .nodes
            .iter()
            .map(|n| Node {
                address: n.address,
                role: n.role,
                channels: n.channels.clone(),
            })
            .collect();
        let mut net = Self {
            config,
            nodes,
            channels,
            last_emitted: Vec::new(),
            time_s: 0.0,
            ticks: 0,
        };
        net.last_emitted = net.channels.iter().map(|c| (c.reading_deg(), c.target_deg, c.flags())).collect();
        Ok(net)
    }

    pub fn config(&self) -> &BusConfig {
        &self.config
    }

    pub fn quantum_deg(&self) -> f64 {
        self.config.quantum_deg()
    }

    pub fn time_s(&self) -> f64 {
        self.time_s
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn tick_period_s(&self) -> f64 {
        1.0 / self.config.tick_hz
    }

    pub fn channel(&self, a: Actuator) -> &MotorChannel {
        &self.channels[a.index()]
    }

    /// Address and joint index that reach an actuator.
    pub fn route(&self, a: Actuator) -> (u8, u8) {
        self.nodes
            .iter()
            .find_map(|n| n.channels.iter().position(|c| *c == a).map(|k| (n.address, k as u8)))
            .expect("validated map covers every actuator")
    }

    pub fn master_address(&self) -> u8 {
        self.nodes
            .iter()
            .find(|n| n.role == NodeRole::Master)
            .map(|n| n.address)
            .expect("validated map has a master")
    }

    /// Decodes, executes and answers one raw frame.
    pub fn send_bytes(&mut self, bytes: &[u8]) -> Result<[u8; super::FRAME_LEN], BusFault> {
        let frame = BusFrame::decode(bytes)?;
        self.send(&frame).map(|r| r.encode())
    }

    /// Executes one request. Every request gets exactly one reply or fault;
    /// a fault leaves the network unchanged.
    pub fn send(&mut self, frame: &BusFrame) -> Result<BusFrame, BusFault> {
        if !frame.command.is_request() {
            return Err(BusFault::Malformed(format!("{:?} is a reply code", frame.command)));
        }
        let node = self
            .nodes
            .iter()
            .find(|n| n.address == frame.address && n.role != NodeRole::Master)
            .ok_or(BusFault::UnknownAddress(frame.address))?;
        let act = *node.channels.get(frame.joint as usize).ok_or(BusFault::UnknownJoint {
            address: frame.address,
            joint: frame.joint,
        })?;
        let ch = &mut self.channels[act.index()];
        let reply = |command, payload| BusFrame::new(frame.address, command, frame.joint, payload);
        Ok(match frame.command {
            Command::SetTarget => {
                let want = frame.payload_deg();
                let applied = ch.limits.clamp(want);
                ch.target_deg = applied;
                ch.clamped = applied != want;
                reply(
                    if ch.clamped { Command::AckClamped } else { Command::Ack },
                    deg_to_payload(applied),
                )
            }
            Command::ReadEncoder => reply(Command::Ack, deg_to_payload(ch.reading_deg())),
            Command::ReadTarget => reply(Command::Ack, deg_to_payload(ch.target_deg)),
            Command::SetDrive => {
                ch.drive_enabled = frame.payload != 0;
                reply(Command::Ack, frame.payload)
            }
            Command::Ack | Command::AckClamped => unreachable!("filtered above"),
        })
    }

    /// Sets a standing external torque on a joint. It moves the joint only
    /// while the drive is off and the transmission is not self-locking.
    pub fn inject_torque(&mut self, a: Actuator, torque_nmm: f64) {
        self.channels[a.index()].external_torque_nmm = if torque_nmm.is_finite() { torque_nmm } else { 0.0 };
    }

    /// Advances every channel by `dt` seconds and returns one record for
    /// each channel whose reading, target or flags changed since it was last
    /// reported. Non-positive `dt` is a no-op.
    pub fn tick(&mut self, dt: f64) -> Vec<Telemetry> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Vec::new();
        }
        self.ticks += 1;
        self.time_s += dt;
        let mut out = Vec::new();
        for (ch, last) in self.channels.iter_mut().zip(&mut self.last_emitted) {
            ch.advance(dt);
            let now = (ch.reading_deg(), ch.target_deg, ch.flags());
            if now != *last {
                *last = now;
                out.push(Telemetry {
                    t: self.time_s,
                    joint: ch.actuator,
                    target_deg: now.1,
                    measured_deg: now.0,
                    flags: now.2,
                });
            }
        }
        out
    }

    /// Runs whole ticks at the configured rate for `seconds`.
    pub fn run_for(&mut self, seconds: f64) -> Vec<Telemetry> {
        let n = (seconds * self.config.tick_hz).round().max(0.0) as u64;
        let dt = self.tick_period_s();
        let mut out = Vec::new();
        for _ in 0..n {
            out.extend(self.tick(dt));
        }
        out
    }

    /// Encoder readings of every channel.
    pub fn snapshot(&self) -> HandState {
        let mut v = [0.0; 18];
        for (x, ch) in v.iter_mut().zip(&self.channels) {
            *x = ch.reading_deg();
        }
        HandState::from_values(v)
    }

    pub fn targets(&self) -> HandState {
        let mut v = [0.0; 18];
        for (x, ch) in v.iter_mut().zip(&self.channels) {
            *x = ch.target_deg;
        }
        HandState::from_values(v)
    }

    pub fn true_state(&self) -> HandState {
        let mut v = [0.0; 18];
        for (x, ch) in v.iter_mut().zip(&self.channels) {
            *x = ch.true_deg;
        }
        HandState::from_values(v)
    }

    /// Flags of every channel in actuator order.
    pub fn flags(&self) -> [u8; 18] {
        let mut f = [0; 18];
        for (x, ch) in f.iter_mut().zip(&self.channels) {
            *x = ch.flags();
        }
        f
    }

    pub fn all_settled(&self) -> bool {
        self.channels.iter().all(|c| c.flags() & FLAG_SETTLED != 0)
    }
}

/// Leadscrew and worm stages hold under load, as does the servo's worm
/// train; the wrist linear actuators are treated as back-drivable.
fn self_locking(desc: &HandDescription, a: Actuator) -> bool {
    match a {
        Actuator::WristFe | Actuator::WristRud => false,
        Actuator::AbductionServo => true,
        other => desc.self_lock(other).is_some_and(|s| s.locking),
    }
}

/// Decodes a reply payload to degrees.
pub(crate) fn reply_deg(frame: &BusFrame) -> f64 {
    payload_to_deg(frame.payload)
}
