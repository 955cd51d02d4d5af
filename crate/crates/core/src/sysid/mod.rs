//! Passive-joint friction and gripper-delay identification from logs.

mod delay;
mod friction_fit;
mod logs;

pub use delay::{estimate_release_delay, DelayEstimate};
pub use friction_fit::{fit_friction, pitch_pendulum_length, simulate_pendulum, FitConfig, FrictionFit};
pub use logs::{OscillationLog, ReleaseEventLog};
