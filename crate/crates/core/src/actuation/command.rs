use nalgebra::Vector4;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::model::{MachineModel, NUM_ACTUATED};

/// Velocity references for the cabin turn, boom, dipper and telescope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VelocityCommand {
    pub dq_ref: Vector4<f64>,
    pub time: f64,
}

impl VelocityCommand {
    pub fn new(dq_ref: Vector4<f64>, time: f64) -> Self {
        VelocityCommand { dq_ref, time }
    }

    pub fn zero(time: f64) -> Self {
        VelocityCommand::new(Vector4::zeros(), time)
    }

    pub fn clamped(mut self, model: &MachineModel) -> Self {
        for i in 0..NUM_ACTUATED {
            let lim = model.joint(i).velocity_limit;
            self.dq_ref[i] = self.dq_ref[i].clamp(-lim, lim);
        }
        self
    }
}

/// Multiplicative and additive perturbation of velocity commands.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommandNoise {
    pub scale_range: [f64; 2],
    /// Standard deviation of the additive noise as a fraction of each joint's
    /// velocity limit.
    pub additive_std: f64,
}

impl Default for CommandNoise {
    fn default() -> Self {
        CommandNoise {
            scale_range: [0.9, 1.1],
            additive_std: 0.02,
        }
    }
}

impl CommandNoise {
    pub const NONE: CommandNoise = CommandNoise {
        scale_range: [1.0, 1.0],
        additive_std: 0.0,
    };

    pub fn is_valid(&self) -> bool {
        let [lo, hi] = self.scale_range;
        lo.is_finite() && hi.is_finite() && lo <= 1.0 && 1.0 <= hi && self.additive_std >= 0.0
    }
}

/// Per-joint scale drawn uniformly from `scale_range`, additive Gaussian
/// noise, then clamping to the velocity limits. Always draws the same number
/// of samples so the RNG stream does not depend on the configuration.
pub fn randomize_velocity_command<R: Rng + ?Sized>(
    cmd: &VelocityCommand,
    rng: &mut R,
    noise: &CommandNoise,
    model: &MachineModel,
) -> VelocityCommand {
    let [lo, hi] = noise.scale_range;
    let mut out = *cmd;
    for i in 0..NUM_ACTUATED {
        let u: f64 = rng.random();
        let n: f64 = rng.sample(StandardNormal);
        let scale = lo + (hi - lo) * u;
        let lim = model.joint(i).velocity_limit;
        out.dq_ref[i] = cmd.dq_ref[i] * scale + n * noise.additive_std * lim;
    }
    out.clamped(model)
}
