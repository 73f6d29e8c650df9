use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::DigitId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerTargets {
    pub dip: [f64; 3],
    pub tip: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WristHint {
    pub fe_deg: f64,
    pub rud_deg: f64,
}

/// One glove sample, positions in millimetres in the glove frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetargetFrame {
    pub t_ms: i64,
    pub fingers: BTreeMap<DigitId, FingerTargets>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wrist: Option<WristHint>,
}

impl RetargetFrame {
    pub fn is_finite(&self) -> bool {
        self.fingers
            .values()
            .all(|f| f.dip.iter().chain(&f.tip).all(|v| v.is_finite()))
            && self.wrist.is_none_or(|w| w.fe_deg.is_finite() && w.rud_deg.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: non-finite value")]
    NonFinite { line: usize },
    #[error("line {line}: timestamp {t_ms} ms precedes {previous_ms} ms")]
    Regression { line: usize, t_ms: i64, previous_ms: i64 },
}

impl TraceError {
    pub fn line(&self) -> usize {
        match *self {
            TraceError::Malformed { line, .. } | TraceError::NonFinite { line } | TraceError::Regression { line, .. } => {
                line
            }
        }
    }
}

/// Parses JSON Lines; blank lines are skipped and line numbers are 1-based.
pub fn parse_trace(text: &str) -> Result<Vec<RetargetFrame>, TraceError> {
    let mut out: Vec<RetargetFrame> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let frame: RetargetFrame = serde_json::from_str(raw).map_err(|e| TraceError::Malformed {
            line,
            message: e.to_string(),
        })?;
        if !frame.is_finite() {
            return Err(TraceError::NonFinite { line });
        }
        if let Some(prev) = out.last() {
            if frame.t_ms < prev.t_ms {
                return Err(TraceError::Regression {
                    line,
                    t_ms: frame.t_ms,
                    previous_ms: prev.t_ms,
                });
            }
        }
        out.push(frame);
    }
    Ok(out)
}

pub fn write_trace(frames: &[RetargetFrame]) -> String {
    let mut out = String::new();
    for f in frames {
        out.push_str(&serde_json::to_string(f).expect("frame serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = r#"{"t_ms": 0, "fingers": {"D2": {"dip": [1, 2, 3], "tip": [4, 5, 6]}}, "wrist": {"fe_deg": 1.5, "rud_deg": -2}}"#;

    #[test]
    fn empty_and_blank() {
        assert!(parse_trace("").unwrap().is_empty());
        assert_eq!(parse_trace(&format!("\n{LINE}\n\n")).unwrap().len(), 1);
    }

    #[test]
    fn regression_names_line() {
        let text = format!("{}\n{}\n", LINE.replace("\"t_ms\": 0", "\"t_ms\": 20"), LINE);
        assert_eq!(
            parse_trace(&text),
            Err(TraceError::Regression {
                line: 2,
                t_ms: 0,
                previous_ms: 20
            })
        );
    }

    #[test]
    fn malformed_names_line() {
        let text = format!("{LINE}\n{{\"t_ms\": 5, \"fingers\": {{\"D7\": {{}}}}}}\n");
        assert_eq!(parse_trace(&text).unwrap_err().line(), 2);
    }

    #[test]
    fn round_trip() {
        let frames = parse_trace(LINE).unwrap();
        assert_eq!(parse_trace(&write_trace(&frames)).unwrap(), frames);
    }
}
