//! Passive-joint friction expressed as a joint acceleration: a viscous part
//! proportional to the joint rate plus a constant part that only depends on
//! the direction of motion. The acceleration always opposes the motion.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrictionParams {
    /// Damping coefficient (1/s).
    pub upsilon: f64,
    /// Velocity-independent friction magnitude (rad/s^2).
    pub eta: f64,
}

impl Default for FrictionParams {
    fn default() -> Self {
        FrictionParams { upsilon: 0.03, eta: 0.1 }
    }
}

impl FrictionParams {
    pub const FRICTIONLESS: FrictionParams = FrictionParams { upsilon: 0.0, eta: 0.0 };

    pub fn is_valid(&self) -> bool {
        self.upsilon >= 0.0 && self.eta >= 0.0 && self.upsilon.is_finite() && self.eta.is_finite()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        FrictionParams {
            upsilon: self.upsilon * factor,
            eta: self.eta * factor,
        }
    }
}

/// Signed friction acceleration for joint rate `dtheta`. Zero at rest.
pub fn friction_accel(params: &FrictionParams, dtheta: f64) -> f64 {
    if dtheta == 0.0 {
        return 0.0;
    }
    -dtheta.signum() * (params.upsilon * dtheta.abs() + params.eta)
}

/// Friction acceleration for one integration step of length `dt`.
///
/// `predicted` is the joint rate the step would reach without friction.
/// Friction may bring that rate to zero but never past it, and it is dropped
/// for a step in which the other forces already reverse the motion. The
/// velocity change is also capped by the current rate, which keeps the
/// semi-implicit position update from gaining potential energy.
pub fn step_friction_accel(params: &FrictionParams, dtheta: f64, predicted: f64, dt: f64) -> f64 {
    let a = friction_accel(params, dtheta);
    if a == 0.0 || dt <= 0.0 || predicted * dtheta <= 0.0 {
        return 0.0;
    }
    let cap = predicted.abs().min(dtheta.abs()) / dt;
    a.signum() * a.abs().min(cap)
}
