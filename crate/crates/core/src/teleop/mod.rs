//! Glove-trace retargeting: parse DIP and fingertip streams, map them into
//! the hand frame, solve for joint commands and drive the bus.

mod fixtures;
mod pipeline;
mod retarget;
mod trace;

pub use fixtures::{frame_from_state, opposition_trace, sample_trace, HoldSegment, FIXTURE_RATE_HZ};
pub use pipeline::{run_pipeline, CommandRecord, FrameRecord, PipelineError, PipelineOptions, PipelineOutput};
pub use retarget::{mapped_targets, retarget_frame, Mapping, MappingError, RetargetOptions, RetargetOutcome, DEFAULT_SCALE};
pub use trace::{parse_trace, write_trace, FingerTargets, RetargetFrame, TraceError, WristHint};
