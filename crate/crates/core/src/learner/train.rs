use std::fs::File;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::normalizer::RunningNormalizer;
use super::policy::ActorCritic;
use super::ppo::{ppo_update, PpoConfig, RolloutBuffer};
use crate::env::{Termination, VecEnv};
use crate::error::{Error, Result};

/// Generator stream reserved for the learner; environments use streams
/// `0..num_envs`.
const LEARNER_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub num_envs: usize,
    pub iterations: usize,
    pub steps_per_iter: usize,
    pub hidden: Vec<usize>,
    pub init_log_std: f64,
    pub normalize_obs: bool,
    /// Write a checkpoint every this many iterations (0: only at the end).
    pub checkpoint_every: usize,
    pub ppo: PpoConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            num_envs: 8192,
            iterations: 4000,
            steps_per_iter: 32,
            hidden: vec![256, 128],
            init_log_std: 0.0,
            normalize_obs: true,
            checkpoint_every: 100,
            ppo: PpoConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_envs == 0 {
            return Err(Error::config("train.num_envs", "must be >= 1"));
        }
        if self.steps_per_iter == 0 {
            return Err(Error::config("train.steps_per_iter", "must be >= 1"));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::config("train.hidden", "need at least one non-empty hidden layer"));
        }
        if !self.init_log_std.is_finite() {
            return Err(Error::config("train.init_log_std", "must be finite"));
        }
        if self.ppo.num_minibatches > self.num_envs * self.steps_per_iter {
            return Err(Error::config("train.ppo.num_minibatches", "exceeds the number of samples per iteration"));
        }
        self.ppo.validate()
    }
}

/// One row of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub iteration: usize,
    pub env_steps: u64,
    /// Simulated experience in seconds (control steps times control period).
    pub experience_s: f64,
    pub mean_step_reward: f64,
    pub episodes: usize,
    pub mean_return: f64,
    pub mean_length: f64,
    pub landed_rate: f64,
    pub mean_impact_error: f64,
    pub mean_impact_distance: f64,
    pub failure_rate: f64,
    pub surrogate_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub learning_rate: f64,
    pub mean_std: f64,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

pub struct Trainer {
    env: VecEnv,
    cfg: TrainConfig,
    pub policy: ActorCritic,
    pub normalizer: RunningNormalizer,
    opt: Adam,
    lr: f64,
    rng: ChaCha8Rng,
    buffer: RolloutBuffer,
    obs: Array2<f64>,
    iteration: usize,
    env_steps: u64,
    control_dt: f64,
}

impl Trainer {
    /// Resets every environment and initializes the networks from `seed`.
    pub fn new(mut env: VecEnv, cfg: TrainConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if env.len() != cfg.num_envs {
            return Err(Error::config(
                "train.num_envs",
                format!("environment batch has {} instances, config says {}", env.len(), cfg.num_envs),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(LEARNER_STREAM);
        let (obs_dim, act_dim) = (env.obs_dim(), env.act_dim());
        let policy = ActorCritic::new(obs_dim, act_dim, &cfg.hidden, cfg.init_log_std, &mut rng);
        let first = env.reset_all()?;
        let obs = Array2::from_shape_vec((env.len(), obs_dim), first).map_err(|e| Error::Shape(e.to_string()))?;
        let control_dt = env.envs()[0].config().dt * env.envs()[0].config().decimation as f64;
        Ok(Trainer {
            opt: Adam::new(policy.num_params()),
            lr: cfg.ppo.learning_rate,
            normalizer: RunningNormalizer::new(obs_dim, cfg.normalize_obs),
            buffer: RolloutBuffer::new(cfg.steps_per_iter, env.len(), obs_dim, act_dim),
            policy,
            env,
            cfg,
            rng,
            obs,
            iteration: 0,
            env_steps: 0,
            control_dt,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn iterations_done(&self) -> usize {
        self.iteration
    }

    pub fn env(&self) -> &VecEnv {
        &self.env
    }

    /// Collect one rollout and run one PPO update.
    pub fn iteration(&mut self) -> Result<TrainLogRow> {
        let n = self.env.len();
        let obs_dim = self.env.obs_dim();
        let act_dim = self.env.act_dim();
        let mut reward_sum = 0.0;
        let mut returns = Vec::new();
        let mut lengths = Vec::new();
        let mut impact_err = Vec::new();
        let mut impact_dist = Vec::new();
        let mut failures = 0usize;

        self.buffer.clear();
        for _ in 0..self.cfg.steps_per_iter {
            self.normalizer.update(self.obs.view());
            let x = self.normalizer.normalize(self.obs.view());
            let (actions, log_probs, values) = self.policy.act(x.view(), &mut self.rng)?;
            let flat: Vec<f64> = actions.iter().copied().collect();
            let step = self.env.step(&flat)?;
            self.buffer.push(
                x.view(),
                actions.view(),
                log_probs.as_slice().expect("contiguous"),
                values.as_slice().expect("contiguous"),
                &step.rewards,
                &step.dones,
            )?;
            reward_sum += step.rewards.iter().sum::<f64>();
            for ep in &step.finished {
                returns.push(ep.episode_return);
                lengths.push(ep.length as f64);
                if ep.termination.is_failure() {
                    failures += 1;
                }
                if ep.termination == Termination::Landed {
                    if let Some(p) = ep.impact {
                        impact_err.push(ep.impact_error().unwrap_or(f64::NAN));
                        impact_dist.push(p.x.hypot(p.y));
                    }
                }
            }
            self.obs = Array2::from_shape_vec((n, obs_dim), step.observations).map_err(|e| Error::Shape(e.to_string()))?;
        }
        self.env_steps += (n * self.cfg.steps_per_iter) as u64;
        let last = self.policy.value(self.normalizer.normalize(self.obs.view()).view())?;
        self.buffer.finish(last.as_slice().expect("contiguous"), self.cfg.ppo.gamma, self.cfg.ppo.lambda)?;
        let stats = ppo_update(&mut self.policy, &mut self.opt, &mut self.lr, &self.buffer, &self.cfg.ppo, &mut self.rng)?;
        self.iteration += 1;

        let episodes = returns.len();
        let rate = |k: usize| if episodes == 0 { f64::NAN } else { k as f64 / episodes as f64 };
        Ok(TrainLogRow {
            iteration: self.iteration,
            env_steps: self.env_steps,
            experience_s: self.env_steps as f64 * self.control_dt,
            mean_step_reward: reward_sum / (n * self.cfg.steps_per_iter) as f64,
            episodes,
            mean_return: mean(&returns),
            mean_length: mean(&lengths),
            landed_rate: rate(impact_err.len()),
            mean_impact_error: mean(&impact_err),
            mean_impact_distance: mean(&impact_dist),
            failure_rate: rate(failures),
            surrogate_loss: stats.surrogate,
            value_loss: stats.value,
            entropy: stats.entropy,
            approx_kl: stats.approx_kl,
            clip_fraction: stats.clip_fraction,
            learning_rate: stats.learning_rate,
            mean_std: self.policy.log_std.iter().map(|l| l.exp()).sum::<f64>() / act_dim as f64,
        })
    }
}

/// Run `cfg.iterations` iterations, calling `on_iteration` after each.
pub fn train<F>(env: VecEnv, cfg: TrainConfig, seed: u64, mut on_iteration: F) -> Result<(Trainer, Vec<TrainLogRow>)>
where
    F: FnMut(&Trainer, &TrainLogRow) -> Result<()>,
{
    let iterations = cfg.iterations;
    let mut trainer = Trainer::new(env, cfg, seed)?;
    let mut log = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let row = trainer.iteration()?;
        on_iteration(&trainer, &row)?;
        log.push(row);
    }
    Ok((trainer, log))
}

/// Incremental CSV writer for the training log.
pub struct TrainLogWriter {
    inner: csv::Writer<File>,
}

impl TrainLogWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(TrainLogWriter {
            inner: csv::Writer::from_writer(f),
        })
    }

    pub fn write(&mut self, row: &TrainLogRow) -> Result<()> {
        self.inner.serialize(row)?;
        self.inner.flush()?;
        Ok(())
    }
}

/// Normalize and evaluate the deterministic (mean) action.
pub fn policy_mean_action(policy: &ActorCritic, normalizer: &RunningNormalizer, obs: &[f64]) -> Result<Vec<f64>> {
    let x = ArrayView2::from_shape((1, obs.len()), obs).map_err(|e| Error::Shape(e.to_string()))?;
    let m = policy.mean(normalizer.normalize(x).view())?;
    Ok(m.row(0).to_vec())
}
