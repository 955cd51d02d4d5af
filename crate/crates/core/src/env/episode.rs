use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector3;
use rand::Rng;

use super::config::{EnvConfig, Variant};
use crate::dynamics::{check_collision, forward_kinematics, MachineState};
use crate::error::{Error, Result};
use crate::model::{JointVector, MachineModel, NUM_ACTUATED};

/// Number of past states in the observation (current step included).
pub const HISTORY: usize = 4;
/// Command vector length: four joint-velocity commands and the release command.
pub const COMMAND_DIM: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThrowTarget {
    pub position: Vector3<f64>,
}

impl ThrowTarget {
    /// Target on the ground at horizontal `distance` and `heading` (rad from +x).
    pub fn at(distance: f64, heading: f64) -> Self {
        ThrowTarget {
            position: Vector3::new(distance * heading.cos(), distance * heading.sin(), 0.0),
        }
    }

    pub fn distance(&self) -> f64 {
        self.position.x.hypot(self.position.y)
    }

    pub fn heading(&self) -> f64 {
        self.position.y.atan2(self.position.x)
    }
}

/// Horizontal and 3D distances from `p` to the target.
pub fn target_errors(target: &ThrowTarget, p: &Vector3<f64>) -> (f64, f64) {
    let d = target.position - p;
    (d.x.hypot(d.y), d.norm())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeProgress {
    pub best_err_2d: f64,
    pub best_err_3d: f64,
    /// Release has been commanded (latched).
    pub opened: bool,
    pub step: usize,
    /// Commands of the previous control step.
    pub prev_command: [f64; COMMAND_DIM],
    /// Control-step states, newest first.
    pub history: [MachineState; HISTORY],
}

impl EpisodeProgress {
    pub fn new(state: &MachineState, target: &ThrowTarget, model: &MachineModel) -> Self {
        let (e2, e3) = target_errors(target, &forward_kinematics(model, &state.q).position);
        EpisodeProgress {
            best_err_2d: e2,
            best_err_3d: e3,
            opened: false,
            step: 0,
            prev_command: [0.0; COMMAND_DIM],
            history: [*state; HISTORY],
        }
    }

    pub fn push_state(&mut self, state: &MachineState) {
        self.history.rotate_right(1);
        self.history[0] = *state;
    }
}

/// Uniform radius in `[r_min, r_max_factor * r_max]`; uniform heading for the
/// spatial variant, the +x axis for the planar one.
pub fn sample_target<R: Rng + ?Sized>(rng: &mut R, model: &MachineModel, cfg: &EnvConfig) -> ThrowTarget {
    let reach = model.static_reach();
    let r = rng.random_range(cfg.r_min_factor * reach..=cfg.r_max_factor * reach);
    let heading = match cfg.variant {
        Variant::Spatial => rng.random_range(-PI..PI),
        Variant::Planar => 0.0,
    };
    ThrowTarget::at(r, heading)
}

/// Passive joint angles that make the gripper hang straight down.
pub fn hanging_passive(q: &JointVector) -> (f64, f64) {
    (-FRAC_PI_2 - (q[1] + q[2]), 0.0)
}

/// Random collision-free configuration at rest with a hanging gripper. With
/// `yaw` set, the cabin turn is fixed to that angle.
pub fn sample_start<R: Rng + ?Sized>(
    rng: &mut R,
    model: &MachineModel,
    yaw: Option<f64>,
    attempts: usize,
) -> Result<MachineState> {
    for _ in 0..attempts {
        let mut q = JointVector::zeros();
        for i in 0..NUM_ACTUATED {
            let j = model.joint(i);
            q[i] = rng.random_range(j.lower..j.upper);
        }
        if let Some(y) = yaw {
            q[0] = y;
        }
        let (pitch, roll) = hanging_passive(&q);
        q[4] = pitch;
        q[5] = roll;
        let inside = (4..6).all(|i| q[i] > model.joint(i).lower && q[i] < model.joint(i).upper);
        if inside && !check_collision(model, &q).any() {
            return Ok(MachineState::at_rest(q));
        }
    }
    Err(Error::ResetExhausted(attempts))
}

/// Fresh episode: start state, target and progress. The planar variant faces
/// the cabin towards the target.
pub fn reset<R: Rng + ?Sized>(
    rng: &mut R,
    model: &MachineModel,
    cfg: &EnvConfig,
    target: Option<ThrowTarget>,
) -> Result<(MachineState, ThrowTarget, EpisodeProgress)> {
    let target = match target {
        Some(t) => t,
        None => sample_target(rng, model, cfg),
    };
    let yaw = match cfg.variant {
        Variant::Planar => Some(target.heading()),
        Variant::Spatial => None,
    };
    let state = sample_start(rng, model, yaw, cfg.reset_attempts)?;
    let progress = EpisodeProgress::new(&state, &target, model);
    Ok((state, target, progress))
}
