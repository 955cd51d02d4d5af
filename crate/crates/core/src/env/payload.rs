//! Released payload: a drag-free point mass.

use nalgebra::Vector3;

use crate::dynamics::{forward_kinematics, gripper_velocity, MachineState};
use crate::model::MachineModel;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BallState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub released: bool,
    pub impacted: bool,
    /// Time of flight so far (s).
    pub flight_time: f64,
}

impl BallState {
    pub fn in_flight(&self) -> bool {
        self.released && !self.impacted
    }

    pub fn impact_point(&self) -> Option<Vector3<f64>> {
        self.impacted.then_some(self.position)
    }
}

/// Ball at the gripper center moving with the gripper-center velocity.
pub fn spawn_payload(model: &MachineModel, state: &MachineState) -> BallState {
    BallState {
        position: forward_kinematics(model, &state.q).position,
        velocity: gripper_velocity(model, &state.q, &state.dq),
        released: true,
        impacted: false,
        flight_time: 0.0,
    }
}

/// Earliest `t >= 0` with `z + vz t - g t^2 / 2 = 0`.
pub fn ground_time(z: f64, vz: f64, g: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if g == 0.0 {
        return if vz < 0.0 { -z / vz } else { f64::INFINITY };
    }
    // Positive root written to avoid cancellation.
    let disc = (vz * vz + 2.0 * g * z).sqrt();
    if vz >= 0.0 {
        (vz + disc) / g
    } else {
        2.0 * z / (disc - vz)
    }
}

/// Advance a released ball by `dt`. The flight is evaluated in closed form, so
/// an impact inside the step lands exactly on `z = 0`; the ball is frozen
/// afterwards.
pub fn step_payload(ball: &BallState, gravity: f64, dt: f64) -> BallState {
    if !ball.in_flight() {
        return *ball;
    }
    let g = Vector3::new(0.0, 0.0, -gravity);
    let t_hit = ground_time(ball.position.z, ball.velocity.z, gravity);
    let (t, impacted) = if t_hit <= dt { (t_hit, true) } else { (dt, false) };
    let mut position = ball.position + ball.velocity * t + g * (0.5 * t * t);
    if impacted {
        position.z = 0.0;
    }
    BallState {
        position,
        velocity: ball.velocity + g * t,
        released: true,
        impacted,
        flight_time: ball.flight_time + t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn launch(p: Vector3<f64>, v: Vector3<f64>) -> BallState {
        BallState {
            position: p,
            velocity: v,
            released: true,
            ..Default::default()
        }
    }

    fn fly(mut b: BallState, g: f64, dt: f64) -> BallState {
        for _ in 0..100_000 {
            if b.impacted {
                break;
            }
            b = step_payload(&b, g, dt);
        }
        b
    }

    #[test]
    fn drop_from_4_905_lands_after_one_second() {
        let b = fly(launch(Vector3::new(1.0, 2.0, 4.905), Vector3::zeros()), 9.81, 0.01);
        assert!(b.impacted);
        assert!((b.flight_time - 1.0).abs() < 1e-12);
        assert!((b.position - Vector3::new(1.0, 2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn downrange_matches_closed_form() {
        let (h, vx, vz, g) = (3.0, 6.0, 2.5, 9.81);
        let b = fly(launch(Vector3::new(0.0, 0.0, h), Vector3::new(vx, 0.0, vz)), g, 0.01);
        let t = (vz + (vz * vz + 2.0 * g * h).sqrt()) / g;
        assert!((b.position.x - vx * t).abs() < 1e-9);
        assert_eq!(b.position.z, 0.0);
    }

    #[test]
    fn frozen_after_impact() {
        let b = fly(launch(Vector3::new(0.0, 0.0, 1.0), Vector3::new(1.0, 0.0, 0.0)), 9.81, 0.01);
        assert_eq!(step_payload(&b, 9.81, 0.01), b);
    }

    #[test]
    fn unreleased_ball_does_not_move() {
        let b = BallState::default();
        assert_eq!(step_payload(&b, 9.81, 0.01), b);
    }
}
