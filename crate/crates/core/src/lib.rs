//! Simulation, learning, identification and evaluation toolkit for dynamic
//! throwing with an underactuated material handler.
//!
//! The machine is a six-joint serial chain whose last two joints (gripper
//! pitch and roll) are unactuated. A learned policy commands joint velocities
//! of the four actuated joints and decides when to open the gripper; the
//! released payload then flies ballistically to a ground target.

pub mod actuation;
pub mod config;
pub mod dynamics;
pub mod env;
pub mod error;
pub mod eval;
pub mod learner;
pub mod model;
pub mod sysid;

pub use error::{Error, Result};
pub use model::{JointVector, MachineModel};
