use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::frame::{deg_to_payload, BusFault, BusFrame, Command};
use super::network::{reply_deg, Network, Telemetry};
use crate::kinematics::{Actuator, HandState};

/// Seeded frame loss. Requests and replies are each dropped with
/// `drop_probability`; the master retransmits on timeout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossyConfig {
    pub drop_probability: f64,
    pub seed: u64,
    pub max_attempts: u32,
}

impl Default for LossyConfig {
    fn default() -> Self {
        Self {
            drop_probability: 0.05,
            seed: 0,
            max_attempts: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct MasterStats {
    pub requests: u64,
    pub transmissions: u64,
    pub dropped_requests: u64,
    pub dropped_replies: u64,
    pub retries: u64,
    pub timeouts: u64,
    pub faults: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetTargetAck {
    pub applied_deg: f64,
    pub clamped: bool,
}

/// Sole initiator on the bus; owns the network.
#[derive(Debug, Clone)]
pub struct Master {
    net: Network,
    lossy: Option<(LossyConfig, ChaCha8Rng)>,
    stats: MasterStats,
}

impl Master {
    pub fn new(net: Network) -> Self {
        Self {
            net,
            lossy: None,
            stats: MasterStats::default(),
        }
    }

    pub fn with_lossy(mut self, cfg: LossyConfig) -> Self {
        self.lossy = Some((cfg, ChaCha8Rng::seed_from_u64(cfg.seed)));
        self
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    pub fn stats(&self) -> MasterStats {
        self.stats
    }

    /// Sends a request and waits for its reply, retransmitting lost frames.
    /// Requests are idempotent, so a retransmission after a lost reply is
    /// harmless.
    pub fn transact(&mut self, frame: BusFrame) -> Result<BusFrame, BusFault> {
        self.stats.requests += 1;
        let attempts = self.lossy.as_ref().map_or(1, |(c, _)| c.max_attempts.max(1));
        for attempt in 0..attempts {
            if attempt > 0 {
                self.stats.retries += 1;
            }
            self.stats.transmissions += 1;
            if self.drop() {
                self.stats.dropped_requests += 1;
                continue;
            }
            let reply = self.net.send_bytes(&frame.encode());
            if self.drop() {
                self.stats.dropped_replies += 1;
                continue;
            }
            return match reply {
                Ok(bytes) => Ok(BusFrame::decode(&bytes)?),
                Err(f) => {
                    self.stats.faults += 1;
                    Err(f)
                }
            };
        }
        self.stats.timeouts += 1;
        Err(BusFault::Timeout {
            address: frame.address,
            attempts,
        })
    }

    fn drop(&mut self) -> bool {
        match &mut self.lossy {
            Some((cfg, rng)) => rng.random::<f64>() < cfg.drop_probability,
            None => false,
        }
    }

    pub fn set_target(&mut self, a: Actuator, deg: f64) -> Result<SetTargetAck, BusFault> {
        let (addr, j) = self.net.route(a);
        let r = self.transact(BusFrame::new(addr, Command::SetTarget, j, deg_to_payload(deg)))?;
        Ok(SetTargetAck {
            applied_deg: reply_deg(&r),
            clamped: r.command == Command::AckClamped,
        })
    }

    pub fn read_encoder(&mut self, a: Actuator) -> Result<f64, BusFault> {
        let (addr, j) = self.net.route(a);
        self.transact(BusFrame::new(addr, Command::ReadEncoder, j, 0)).map(|r| reply_deg(&r))
    }

    pub fn read_target(&mut self, a: Actuator) -> Result<f64, BusFault> {
        let (addr, j) = self.net.route(a);
        self.transact(BusFrame::new(addr, Command::ReadTarget, j, 0)).map(|r| reply_deg(&r))
    }

    pub fn set_drive(&mut self, a: Actuator, enabled: bool) -> Result<(), BusFault> {
        let (addr, j) = self.net.route(a);
        self.transact(BusFrame::new(addr, Command::SetDrive, j, enabled as i32)).map(|_| ())
    }

    pub fn tick(&mut self, dt: f64) -> Vec<Telemetry> {
        self.net.tick(dt)
    }

    pub fn run_for(&mut self, seconds: f64) -> Vec<Telemetry> {
        self.net.run_for(seconds)
    }

    pub fn snapshot(&self) -> HandState {
        self.net.snapshot()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_hand;

    #[test]
    fn lossy_retransmit_applies_everything() {
        let desc = default_hand();
        let mut m = Master::new(Network::new(&desc).unwrap()).with_lossy(LossyConfig {
            drop_probability: 0.05,
            seed: 11,
            max_attempts: 10,
        });
        for k in 0..500 {
            let a = Actuator::ALL[k % 15];
            let v = (k % 40) as f64;
            m.set_target(a, v).unwrap();
            assert_eq!(m.network().channel(a).target_deg, v);
        }
        let s = m.stats();
        assert!(s.dropped_requests + s.dropped_replies > 0);
        assert_eq!(s.timeouts, 0);
    }

    #[test]
    fn timeout_when_everything_drops() {
        let desc = default_hand();
        let mut m = Master::new(Network::new(&desc).unwrap()).with_lossy(LossyConfig {
            drop_probability: 1.0,
            seed: 0,
            max_attempts: 3,
        });
        assert!(matches!(m.read_encoder(Actuator::D2Mcp), Err(BusFault::Timeout { attempts: 3, .. })));
    }
}
