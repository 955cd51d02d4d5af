use nalgebra::Vector3;

use super::config::RewardWeights;
use super::episode::{target_errors, ThrowTarget, COMMAND_DIM};
use super::payload::BallState;
use crate::dynamics::{check_collision, MachineState};
use crate::model::MachineModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Termination {
    Running,
    Collided,
    Limits,
    Landed,
    Timeout,
    /// Non-finite simulation state.
    Diverged,
}

impl Termination {
    pub fn is_done(self) -> bool {
        self != Termination::Running
    }

    /// Terminations that receive the penalty `p_term`.
    pub fn is_failure(self) -> bool {
        matches!(self, Termination::Collided | Termination::Limits | Termination::Diverged)
    }

    pub fn name(self) -> &'static str {
        match self {
            Termination::Running => "running",
            Termination::Collided => "collided",
            Termination::Limits => "limits",
            Termination::Landed => "landed",
            Termination::Timeout => "timeout",
            Termination::Diverged => "diverged",
        }
    }
}

/// Termination with priority collided > limits > landed > timeout.
pub fn check_termination(
    model: &MachineModel,
    state: &MachineState,
    ball: &BallState,
    step: usize,
    max_steps: usize,
    check_limits: bool,
) -> Termination {
    if !state.is_finite() {
        return Termination::Diverged;
    }
    if check_collision(model, &state.q).any() {
        return Termination::Collided;
    }
    if check_limits && state.limit_contacts(model).iter().any(|&c| c) {
        return Termination::Limits;
    }
    if ball.impacted {
        return Termination::Landed;
    }
    if step >= max_steps {
        return Termination::Timeout;
    }
    Termination::Running
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RewardTerms {
    pub delta_err: f64,
    pub err_3d: f64,
    pub act_diff: f64,
    pub act: f64,
    pub termination: f64,
    pub total: f64,
}

/// Per-step reward. `best` holds the best horizontal and 3D errors before
/// this step, `position` is the ball once released and the gripper center
/// before that. `terminal_err_3d` is the landing error used for the bonus.
#[allow(clippy::too_many_arguments)]
pub fn compute_reward(
    weights: &RewardWeights,
    best: (f64, f64),
    target: &ThrowTarget,
    position: &Vector3<f64>,
    u: &[f64; COMMAND_DIM],
    u_prev: &[f64; COMMAND_DIM],
    opened: bool,
    termination: Termination,
) -> RewardTerms {
    let (e2, e3) = target_errors(target, position);
    let delta_err = (best.0 - e2).max(0.0) + (best.1 - e3).max(0.0);
    let err_3d = (-weights.b1 * e3 * e3).exp();
    let act_diff: f64 = u.iter().zip(u_prev).map(|(a, b)| (a - b) * (a - b)).sum();
    let act = if opened { u.iter().map(|a| a * a).sum() } else { 0.0 };
    let term = match termination {
        t if t.is_failure() => weights.p_term,
        Termination::Landed => weights.w_term * (-weights.b2 * e3 * e3).exp(),
        _ => 0.0,
    };
    let total = weights.c1 * delta_err + weights.c2 * err_3d - weights.c3 * act_diff - weights.c4 * act + term;
    RewardTerms {
        delta_err,
        err_3d,
        act_diff,
        act,
        termination: term,
        total,
    }
}
