use crate::env::Variant;
use crate::error::{Error, Result};
use crate::learner::{policy_mean_action, ActorCritic, Checkpoint, RunningNormalizer};

/// Deterministic controller mapping observations to raw actions.
pub trait Policy: Sync {
    fn obs_dim(&self) -> usize;
    fn act_dim(&self) -> usize;
    /// `step` counts control steps since the episode reset.
    fn act(&self, obs: &[f64], step: usize) -> Result<Vec<f64>>;

    fn check(&self, variant: Variant) -> Result<()> {
        if self.obs_dim() != variant.obs_dim() || self.act_dim() != variant.act_dim() {
            return Err(Error::Shape(format!(
                "policy is {}->{} but the {} variant needs {}->{}",
                self.obs_dim(),
                self.act_dim(),
                variant.name(),
                variant.obs_dim(),
                variant.act_dim()
            )));
        }
        Ok(())
    }
}

/// Mean action of a trained actor.
#[derive(Clone, Copy, Debug)]
pub struct MeanPolicy<'a> {
    pub policy: &'a ActorCritic,
    pub normalizer: &'a RunningNormalizer,
}

impl Policy for MeanPolicy<'_> {
    fn obs_dim(&self) -> usize {
        self.policy.obs_dim()
    }

    fn act_dim(&self) -> usize {
        self.policy.act_dim()
    }

    fn act(&self, obs: &[f64], _step: usize) -> Result<Vec<f64>> {
        policy_mean_action(self.policy, self.normalizer, obs)
    }
}

impl Policy for Checkpoint {
    fn obs_dim(&self) -> usize {
        self.policy.obs_dim()
    }

    fn act_dim(&self) -> usize {
        self.policy.act_dim()
    }

    fn act(&self, obs: &[f64], _step: usize) -> Result<Vec<f64>> {
        policy_mean_action(&self.policy, &self.normalizer, obs)
    }
}

/// Open-loop throw: constant normalized joint velocities, gripper opened
/// from control step `release_at` on. The planar variant ignores the cabin
/// entry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScriptedThrow {
    pub variant: Variant,
    pub velocities: [f64; 4],
    pub release_at: usize,
}

impl Policy for ScriptedThrow {
    fn obs_dim(&self) -> usize {
        self.variant.obs_dim()
    }

    fn act_dim(&self) -> usize {
        self.variant.act_dim()
    }

    fn act(&self, _obs: &[f64], step: usize) -> Result<Vec<f64>> {
        let mut a = match self.variant {
            Variant::Planar => self.velocities[1..].to_vec(),
            Variant::Spatial => self.velocities.to_vec(),
        };
        a.push(if step >= self.release_at { 5.0 } else { -5.0 });
        Ok(a)
    }
}
