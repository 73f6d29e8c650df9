//! Simulated control network: one master, four dual-channel joint
//! controllers (the thumb CMC rides on the first), the abduction servo node
//! and the wrist node. Everything advances only through explicit `send` and
//! `tick` calls.

mod frame;
mod master;
mod network;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::kinematics::Actuator;

pub use frame::{deg_to_payload, payload_to_deg, BusFault, BusFrame, Command, FRAME_LEN};
pub use master::{LossyConfig, Master, MasterStats, SetTargetAck};
pub use network::{
    reference_trajectory, MotorChannel, Network, Telemetry, FLAG_CLAMPED, FLAG_DRIVE_OFF, FLAG_SETTLED,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeRole {
    Master,
    JointCtl1,
    JointCtl2,
    JointCtl3,
    JointCtl4,
    Servo,
    Wrist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    /// 7-bit bus address.
    pub address: u8,
    pub role: NodeRole,
    /// Channel `k` of the node answers joint index `k` in frames.
    #[serde(default)]
    pub channels: Vec<Actuator>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BusConfig {
    pub tick_hz: f64,
    pub counts_per_rev: u32,
    /// Proportional gain of every position loop, 1/s.
    pub kp_per_s: f64,
    pub finger_speed_deg_s: f64,
    pub cmc_speed_deg_s: f64,
    /// In servo degrees.
    pub servo_speed_deg_s: f64,
    pub wrist_speed_deg_s: f64,
    /// Allowance beyond the pure travel time when judging a step settled.
    pub settle_margin_s: f64,
    pub nodes: Vec<NodeSpec>,
}

impl Default for BusConfig {
    fn default() -> Self {
        use Actuator::*;
        let node = |address, role, channels: &[Actuator]| NodeSpec {
            address,
            role,
            channels: channels.to_vec(),
        };
        Self {
            tick_hz: 1000.0,
            counts_per_rev: 4096,
            kp_per_s: 20.0,
            finger_speed_deg_s: 91.5,
            cmc_speed_deg_s: 91.5,
            servo_speed_deg_s: 720.0,
            wrist_speed_deg_s: 40.0,
            settle_margin_s: 0.2,
            nodes: vec![
                node(0x01, NodeRole::Master, &[]),
                node(0x10, NodeRole::JointCtl1, &[D1Cmc, D1Mcp, D1Ip]),
                node(0x11, NodeRole::JointCtl2, &[D2Mcp, D2Pip, D2Dip, D3Mcp]),
                node(0x12, NodeRole::JointCtl3, &[D3Pip, D3Dip, D4Mcp, D4Pip]),
                node(0x13, NodeRole::JointCtl4, &[D4Dip, D5Mcp, D5Pip, D5Dip]),
                node(0x20, NodeRole::Servo, &[AbductionServo]),
                node(0x30, NodeRole::Wrist, &[WristFe, WristRud]),
            ],
        }
    }
}

impl BusConfig {
    pub fn quantum_deg(&self) -> f64 {
        360.0 / self.counts_per_rev as f64
    }

    pub fn master(&self) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.role == NodeRole::Master)
    }

    /// Maximum speed of a channel in its own units per second.
    pub fn speed_deg_s(&self, a: Actuator) -> f64 {
        match a {
            Actuator::D1Cmc => self.cmc_speed_deg_s,
            Actuator::AbductionServo => self.servo_speed_deg_s,
            Actuator::WristFe | Actuator::WristRud => self.wrist_speed_deg_s,
            _ => self.finger_speed_deg_s,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("tick_hz", self.tick_hz),
            ("kp_per_s", self.kp_per_s),
            ("finger_speed_deg_s", self.finger_speed_deg_s),
            ("cmc_speed_deg_s", self.cmc_speed_deg_s),
            ("servo_speed_deg_s", self.servo_speed_deg_s),
            ("wrist_speed_deg_s", self.wrist_speed_deg_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.settle_margin_s >= 0.0 && self.settle_margin_s.is_finite()) {
            return Err(format!("settle_margin_s must be non-negative, got {}", self.settle_margin_s));
        }
        if self.counts_per_rev == 0 {
            return Err("counts_per_rev must be positive".into());
        }
        let mut addresses = BTreeSet::new();
        let mut roles = BTreeSet::new();
        let mut seen = [false; 18];
        for n in &self.nodes {
            if n.address > 0x7f {
                return Err(format!("address {:#04x} is not 7-bit", n.address));
            }
            if !addresses.insert(n.address) {
                return Err(format!("address {:#04x} used twice", n.address));
            }
            if !roles.insert(format!("{:?}", n.role)) {
                return Err(format!("role {:?} used twice", n.role));
            }
            if n.role == NodeRole::Master && !n.channels.is_empty() {
                return Err("the master node drives no channels".into());
            }
            if n.channels.len() > 255 {
                return Err(format!("node {:#04x} has too many channels", n.address));
            }
            for a in &n.channels {
                if std::mem::replace(&mut seen[a.index()], true) {
                    return Err(format!("{a} is mapped to more than one channel"));
                }
            }
        }
        if self.master().is_none() {
            return Err("no master node".into());
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(format!("{} is not mapped to any channel", Actuator::ALL[i]));
        }
        Ok(())
    }
}
