use serde::Serialize;
use thiserror::Error;

pub const FRAME_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[repr(u8)]
pub enum Command {
    SetTarget = 0x01,
    ReadEncoder = 0x02,
    ReadTarget = 0x03,
    /// Payload 0 disables the drive, anything else enables it.
    SetDrive = 0x04,
    Ack = 0x80,
    AckClamped = 0x81,
}

impl Command {
    pub fn from_code(code: u8) -> Option<Command> {
        Some(match code {
            0x01 => Command::SetTarget,
            0x02 => Command::ReadEncoder,
            0x03 => Command::ReadTarget,
            0x04 => Command::SetDrive,
            0x80 => Command::Ack,
            0x81 => Command::AckClamped,
            _ => return None,
        })
    }

    pub fn is_request(self) -> bool {
        (self as u8) < 0x80
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "fault", rename_all = "snake_case")]
pub enum BusFault {
    #[error("no node at address {0:#04x}")]
    UnknownAddress(u8),
    #[error("checksum {found:#04x} does not match {expected:#04x}")]
    BadChecksum { expected: u8, found: u8 },
    #[error("unknown command code {0:#04x}")]
    UnknownCommand(u8),
    #[error("node {address:#04x} has no joint {joint}")]
    UnknownJoint { address: u8, joint: u8 },
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("no reply from {address:#04x} after {attempts} attempts")]
    Timeout { address: u8, attempts: u32 },
}

/// `[address, command, joint, payload (i32 LE), checksum]`; the checksum is
/// the XOR of the seven preceding bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BusFrame {
    pub address: u8,
    pub command: Command,
    pub joint: u8,
    /// Micro-degrees.
    pub payload: i32,
}

pub fn deg_to_payload(deg: f64) -> i32 {
    (deg * 1e6).round().clamp(i32::MIN as f64, i32::MAX as f64) as i32
}

pub fn payload_to_deg(payload: i32) -> f64 {
    payload as f64 * 1e-6
}

fn checksum(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0, |a, b| a ^ b)
}

impl BusFrame {
    pub fn new(address: u8, command: Command, joint: u8, payload: i32) -> Self {
        Self {
            address,
            command,
            joint,
            payload,
        }
    }

    pub fn encode(&self) -> [u8; FRAME_LEN] {
        let mut out = [0u8; FRAME_LEN];
        out[0] = self.address;
        out[1] = self.command as u8;
        out[2] = self.joint;
        out[3..7].copy_from_slice(&self.payload.to_le_bytes());
        out[7] = checksum(&out[..7]);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, BusFault> {
        if bytes.len() != FRAME_LEN {
            return Err(BusFault::Malformed(format!("expected {FRAME_LEN} bytes, got {}", bytes.len())));
        }
        let expected = checksum(&bytes[..7]);
        if expected != bytes[7] {
            return Err(BusFault::BadChecksum {
                expected,
                found: bytes[7],
            });
        }
        let command = Command::from_code(bytes[1]).ok_or(BusFault::UnknownCommand(bytes[1]))?;
        Ok(Self {
            address: bytes[0],
            command,
            joint: bytes[2],
            payload: i32::from_le_bytes(bytes[3..7].try_into().expect("4 bytes")),
        })
    }

    pub fn payload_deg(&self) -> f64 {
        payload_to_deg(self.payload)
    }
}
