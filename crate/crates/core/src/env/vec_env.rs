use std::sync::Arc;

use rayon::prelude::*;

use super::config::EnvConfig;
use super::reward::Termination;
use super::throw_env::{EpisodeSummary, ThrowEnv};
use crate::error::{Error, Result};
use crate::model::MachineModel;

/// Result of stepping every environment once. Finished environments are
/// reset automatically; `observations` then holds the first observation of
/// the new episode.
#[derive(Clone, Debug, Default)]
pub struct VecStep {
    pub observations: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub terminations: Vec<Termination>,
    pub finished: Vec<EpisodeSummary>,
}

/// A batch of independent environments. Environment `i` draws from stream `i`
/// of the seeded generator, so results do not depend on the thread count.
pub struct VecEnv {
    envs: Vec<ThrowEnv>,
    obs_dim: usize,
    act_dim: usize,
}

impl VecEnv {
    pub fn new(model: Arc<MachineModel>, cfg: EnvConfig, num_envs: usize, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if num_envs == 0 {
            return Err(Error::config("num_envs", "must be at least 1"));
        }
        let controller = cfg.controller.build(&model);
        let obs_dim = cfg.variant.obs_dim();
        let act_dim = cfg.variant.act_dim();
        let cfg = Arc::new(cfg);
        let envs = (0..num_envs as u64)
            .map(|i| ThrowEnv::new(Arc::clone(&model), Arc::clone(&cfg), controller.clone(), seed, i))
            .collect();
        Ok(VecEnv { envs, obs_dim, act_dim })
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    pub fn envs(&self) -> &[ThrowEnv] {
        &self.envs
    }

    pub fn reset_all(&mut self) -> Result<Vec<f64>> {
        let parts: Vec<Vec<f64>> = self.envs.par_iter_mut().map(|e| e.reset(None)).collect::<Result<_>>()?;
        Ok(parts.concat())
    }

    /// `actions` is row-major, one row of `act_dim` per environment.
    pub fn step(&mut self, actions: &[f64]) -> Result<VecStep> {
        if actions.len() != self.envs.len() * self.act_dim {
            return Err(Error::Shape(format!(
                "{} actions for {} environments of action size {}",
                actions.len(),
                self.envs.len(),
                self.act_dim
            )));
        }
        let results: Vec<_> = self
            .envs
            .par_iter_mut()
            .zip(actions.par_chunks(self.act_dim))
            .map(|(env, a)| {
                let out = env.step(a, None)?;
                if out.termination.is_done() {
                    let summary = env.summary(out.termination);
                    let obs = env.reset(None)?;
                    Ok((obs, out.reward, out.termination, Some(summary)))
                } else {
                    Ok((out.observation, out.reward, out.termination, None))
                }
            })
            .collect::<Result<_>>()?;

        let n = results.len();
        let mut step = VecStep {
            observations: Vec::with_capacity(n * self.obs_dim),
            rewards: Vec::with_capacity(n),
            dones: Vec::with_capacity(n),
            terminations: Vec::with_capacity(n),
            finished: Vec::new(),
        };
        for (obs, r, t, summary) in results {
            step.observations.extend(obs);
            step.rewards.push(r);
            step.dones.push(t.is_done());
            step.terminations.push(t);
            step.finished.extend(summary);
        }
        Ok(step)
    }
}
