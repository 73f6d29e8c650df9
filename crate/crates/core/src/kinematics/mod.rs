//! Forward and inverse kinematics of the whole hand.
//!
//! Hand frame: origin at the wrist universal joint, x toward the fingers,
//! z dorsal, y toward the thumb. Flexion rotates about the local y axis and
//! moves the tip palmar; abduction rotates about the local z axis, positive
//! toward the thumb side.

mod fk;
mod ik;
mod jacobian;
mod opposition;
mod rom;
mod state;
mod workspace;

pub use fk::{forward_kinematics, ChainLink, DigitChain, DigitFrames, DigitPose, HandKinematics, HandPose, Pose, Site};
pub use ik::{
    default_free, solve_ik, solve_with, targets_to_objectives, IkError, IkOptions, IkReport, IkStatus, Objective,
    DIP_WEIGHT, TIP_WEIGHT,
};
pub use jacobian::jacobian;
pub use opposition::{
    opposition_check, OppositionContact, OppositionError, OppositionOptions, CONTACT_RESOLUTION_MM,
};
pub use rom::{rom_report, RomKind, RomReport, RomRow, HUMAN_REFERENCE};
pub use state::{Actuator, HandState, StateError, LIMIT_SLACK_DEG};
pub use workspace::{
    proximity, sample_workspace, Proximity, WorkspaceCloud, WorkspaceError, WORKSPACE_MAGIC,
};
