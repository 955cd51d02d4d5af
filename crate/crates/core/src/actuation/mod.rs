//! Low-level joint velocity control, gripper release delay and command
//! randomization.

mod command;
mod controller;
mod delay;

pub use command::{randomize_velocity_command, CommandNoise, VelocityCommand};
pub use controller::{
    id_velocity_control, pid_velocity_control, ControllerConfig, ControllerKind, IdController, LowLevelController,
    PidController, PidGains, PidTuning, TorqueLimits,
};
pub use delay::{DelayConfig, DelayLine, ReleasePoll};
