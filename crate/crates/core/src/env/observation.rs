use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{ObservationNoise, Variant};
use super::episode::{EpisodeProgress, ThrowTarget, COMMAND_DIM, HISTORY};
use crate::dynamics::{forward_kinematics, gripper_velocity};
use crate::model::{MachineModel, NUM_JOINTS};

/// Observation layout, in order: joint positions for the last four control
/// steps (newest first), joint velocities likewise, previous commands,
/// gripper-center position and velocity, horizontal and 3D errors, target
/// position, release flag. The planar variant drops every cabin-turn entry.
pub fn build_observation<R: Rng + ?Sized>(
    model: &MachineModel,
    progress: &EpisodeProgress,
    target: &ThrowTarget,
    errors: (f64, f64),
    variant: Variant,
    noise: &ObservationNoise,
    rng: &mut R,
) -> Vec<f64> {
    let first = match variant {
        Variant::Planar => 1,
        Variant::Spatial => 0,
    };
    let mut obs = Vec::with_capacity(variant.obs_dim());
    let mut push = |obs: &mut Vec<f64>, v: f64, std: f64| {
        let n: f64 = if std > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
        obs.push(v + std * n);
    };

    for s in &progress.history[..HISTORY] {
        for i in first..NUM_JOINTS {
            push(&mut obs, s.q[i], noise.joint_position);
        }
    }
    for s in &progress.history[..HISTORY] {
        for i in first..NUM_JOINTS {
            push(&mut obs, s.dq[i], noise.joint_velocity);
        }
    }
    for &u in &progress.prev_command[first..COMMAND_DIM] {
        obs.push(u);
    }
    let now = &progress.history[0];
    let p = forward_kinematics(model, &now.q).position;
    let v = gripper_velocity(model, &now.q, &now.dq);
    for k in 0..3 {
        push(&mut obs, p[k], noise.gripper_position);
    }
    for k in 0..3 {
        push(&mut obs, v[k], noise.gripper_velocity);
    }
    obs.push(errors.0);
    obs.push(errors.1);
    obs.extend(target.position.iter());
    obs.push(if progress.opened { 1.0 } else { 0.0 });
    debug_assert_eq!(obs.len(), variant.obs_dim());
    obs
}
