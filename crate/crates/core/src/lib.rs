//! Digital twin of an 18-DoF leadscrew-actuated anthropomorphic hand.
//!
//! The crate is split along the physical subsystems of the hand:
//!
//! * [`model`] - the parametric hand description and its JSON config format.
//! * [`actuation`] - leadscrew rocker joints, self-locking analysis, the thumb
//!   CMC worm drive, the coupled abduction train and fingertip statics.
//! * [`kinematics`] - forward kinematics, Jacobians, damped least-squares IK,
//!   workspace sampling, thumb opposition and range-of-motion reporting.
//! * [`wrist`] - the two-actuator parallel wrist platform.
//! * [`bus`] - a deterministic, tick-driven simulation of the control network.
//! * [`teleop`] - glove trace parsing and fingertip retargeting.
//!
//! Lengths are millimetres and angles are degrees on every public surface;
//! trigonometry happens in radians internally.

pub mod actuation;
pub mod bus;
pub mod kinematics;
pub mod model;
pub mod teleop;
pub mod wrist;

pub use kinematics::{Actuator, HandState};
pub use model::{default_hand, load_config, scale_hand, DigitId, HandDescription};
