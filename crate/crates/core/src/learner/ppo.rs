use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::gae::{compute_gae, normalize_advantages};
use super::policy::{gaussian_entropy, ActorCritic};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LrSchedule {
    Fixed,
    /// Scale the learning rate by 1.5 whenever the KL estimate leaves
    /// `[desired_kl / 2, 2 desired_kl]`.
    Adaptive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lambda: f64,
    /// Ratio clip range; `inf` disables clipping.
    pub clip: f64,
    pub learning_rate: f64,
    pub schedule: LrSchedule,
    pub desired_kl: f64,
    pub epochs: usize,
    pub num_minibatches: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub clip_value_loss: bool,
    /// Global gradient-norm cap; `0` disables it.
    pub max_grad_norm: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.2,
            learning_rate: 3e-4,
            schedule: LrSchedule::Fixed,
            desired_kl: 0.01,
            epochs: 5,
            num_minibatches: 4,
            entropy_coef: 0.005,
            value_coef: 1.0,
            clip_value_loss: true,
            max_grad_norm: 1.0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        if !unit(self.gamma) {
            return Err(Error::config("train.gamma", "must lie in (0, 1]"));
        }
        if !unit(self.lambda) {
            return Err(Error::config("train.lambda", "must lie in (0, 1]"));
        }
        if !(self.clip > 0.0) {
            return Err(Error::config("train.clip", "must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("train.learning_rate", "must be positive"));
        }
        if !(self.desired_kl > 0.0) {
            return Err(Error::config("train.desired_kl", "must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::config("train.epochs", "must be >= 1"));
        }
        if self.num_minibatches == 0 {
            return Err(Error::config("train.num_minibatches", "must be >= 1"));
        }
        for (k, v) in [
            ("train.entropy_coef", self.entropy_coef),
            ("train.value_coef", self.value_coef),
            ("train.max_grad_norm", self.max_grad_norm),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(k, "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// Rollout storage, step-major: row `t * envs + e`.
#[derive(Clone, Debug)]
pub struct RolloutBuffer {
    pub steps: usize,
    pub envs: usize,
    pub obs: Array2<f64>,
    pub actions: Array2<f64>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    filled: usize,
}

impl RolloutBuffer {
    pub fn new(steps: usize, envs: usize, obs_dim: usize, act_dim: usize) -> Self {
        let n = steps * envs;
        RolloutBuffer {
            steps,
            envs,
            obs: Array2::zeros((n, obs_dim)),
            actions: Array2::zeros((n, act_dim)),
            log_probs: vec![0.0; n],
            values: vec![0.0; n],
            rewards: vec![0.0; n],
            dones: vec![false; n],
            advantages: vec![0.0; n],
            returns: vec![0.0; n],
            filled: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.steps * self.envs
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_full(&self) -> bool {
        self.filled == self.steps
    }

    pub fn clear(&mut self) {
        self.filled = 0;
    }

    /// Store one step for every environment.
    pub fn push(
        &mut self,
        obs: ArrayView2<f64>,
        actions: ArrayView2<f64>,
        log_probs: &[f64],
        values: &[f64],
        rewards: &[f64],
        dones: &[bool],
    ) -> Result<()> {
        if self.is_full() {
            return Err(Error::Shape("rollout buffer is full".into()));
        }
        let e = self.envs;
        if obs.dim() != (e, self.obs.ncols())
            || actions.dim() != (e, self.actions.ncols())
            || [log_probs.len(), values.len(), rewards.len(), dones.len()].iter().any(|&l| l != e)
        {
            return Err(Error::Shape("rollout step does not match the buffer layout".into()));
        }
        let r = self.filled * e;
        self.obs.slice_mut(ndarray::s![r..r + e, ..]).assign(&obs);
        self.actions.slice_mut(ndarray::s![r..r + e, ..]).assign(&actions);
        self.log_probs[r..r + e].copy_from_slice(log_probs);
        self.values[r..r + e].copy_from_slice(values);
        self.rewards[r..r + e].copy_from_slice(rewards);
        self.dones[r..r + e].copy_from_slice(dones);
        self.filled += 1;
        Ok(())
    }

    /// Advantages and returns per environment column, then batch-normalized
    /// advantages.
    pub fn finish(&mut self, last_values: &[f64], gamma: f64, lambda: f64) -> Result<()> {
        if !self.is_full() {
            return Err(Error::Shape("rollout buffer is not full".into()));
        }
        if last_values.len() != self.envs {
            return Err(Error::Shape("one bootstrap value per environment expected".into()));
        }
        let (t_max, e_max) = (self.steps, self.envs);
        for e in 0..e_max {
            let col = |v: &[f64]| (0..t_max).map(|t| v[t * e_max + e]).collect::<Vec<_>>();
            let dones: Vec<bool> = (0..t_max).map(|t| self.dones[t * e_max + e]).collect();
            let (adv, ret) = compute_gae(&col(&self.rewards), &col(&self.values), &dones, last_values[e], gamma, lambda);
            for t in 0..t_max {
                self.advantages[t * e_max + e] = adv[t];
                self.returns[t * e_max + e] = ret[t];
            }
        }
        normalize_advantages(&mut self.advantages);
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossParts {
    pub surrogate: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Loss of one minibatch and its exact gradient with respect to all
/// parameters.
pub fn ppo_loss_and_grad(
    policy: &ActorCritic,
    buf: &RolloutBuffer,
    idx: &[usize],
    cfg: &PpoConfig,
) -> Result<(LossParts, ActorCritic)> {
    let n = idx.len();
    if n == 0 {
        return Err(Error::Shape("empty minibatch".into()));
    }
    let nf = n as f64;
    let obs = buf.obs.select(Axis(0), idx);
    let actions = buf.actions.select(Axis(0), idx);
    let (mean, actor_cache) = policy.actor.forward_cached(obs.view())?;
    let (values, critic_cache) = policy.critic.forward_cached(obs.view())?;

    let act_dim = policy.act_dim();
    let inv_var: Vec<f64> = policy.log_std.iter().map(|ls| (-2.0 * ls).exp()).collect();
    let eps = cfg.clip;
    let mut parts = LossParts::default();
    let mut grad_mean = Array2::zeros((n, act_dim));
    let mut grad_log_std = vec![0.0; act_dim];
    let mut grad_value = Array2::zeros((n, 1));

    for (k, &i) in idx.iter().enumerate() {
        let a = actions.row(k);
        let m = mean.row(k);
        let lp = super::policy::gaussian_log_prob(m, policy.log_std.view(), a);
        let log_ratio = lp - buf.log_probs[i];
        let ratio = log_ratio.exp();
        let adv = buf.advantages[i];
        let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
        let unclipped_obj = ratio * adv;
        let clipped_obj = clipped * adv;
        parts.surrogate -= unclipped_obj.min(clipped_obj) / nf;
        parts.approx_kl += ((ratio - 1.0) - log_ratio) / nf;
        if (ratio - 1.0).abs() > eps {
            parts.clip_fraction += 1.0 / nf;
        }
        let g_lp = if unclipped_obj <= clipped_obj { -adv * ratio / nf } else { 0.0 };
        if g_lp != 0.0 {
            for j in 0..act_dim {
                let d = a[j] - m[j];
                grad_mean[[k, j]] = g_lp * d * inv_var[j];
                grad_log_std[j] += g_lp * (d * d * inv_var[j] - 1.0);
            }
        }

        let v = values[[k, 0]];
        let ret = buf.returns[i];
        let v_old = buf.values[i];
        let l1 = (v - ret) * (v - ret);
        let (loss, g) = if cfg.clip_value_loss {
            let vc = v_old + (v - v_old).clamp(-eps, eps);
            let l2 = (vc - ret) * (vc - ret);
            if l1 >= l2 {
                (l1, 2.0 * (v - ret))
            } else if (v - v_old).abs() < eps {
                (l2, 2.0 * (vc - ret))
            } else {
                (l2, 0.0)
            }
        } else {
            (l1, 2.0 * (v - ret))
        };
        parts.value += loss / nf;
        grad_value[[k, 0]] = cfg.value_coef * g / nf;
    }
    parts.entropy = gaussian_entropy(policy.log_std.view());
    parts.total = parts.surrogate + cfg.value_coef * parts.value - cfg.entropy_coef * parts.entropy;
    if !parts.total.is_finite() {
        return Err(Error::Divergence(format!("non-finite PPO loss {}", parts.total)));
    }
    for g in &mut grad_log_std {
        *g -= cfg.entropy_coef;
    }

    let grads = ActorCritic {
        actor: policy.actor.backward(&actor_cache, grad_mean.view()),
        critic: policy.critic.backward(&critic_cache, grad_value.view()),
        log_std: grad_log_std.into(),
    };
    Ok((parts, grads))
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub surrogate: f64,
    pub value: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
    pub learning_rate: f64,
}

/// Scale `grads` so that their global norm is at most `max_norm`; returns the
/// norm before scaling.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if max_norm > 0.0 && norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

/// Epochs of shuffled minibatch updates over a finished buffer.
pub fn ppo_update<R: Rng + ?Sized>(
    policy: &mut ActorCritic,
    opt: &mut Adam,
    lr: &mut f64,
    buf: &RolloutBuffer,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats> {
    let n = buf.len();
    let mb = n.div_ceil(cfg.num_minibatches);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut stats = UpdateStats::default();
    let mut count = 0.0;
    let mut params = policy.to_flat();
    for _ in 0..cfg.epochs {
        perm.shuffle(rng);
        for chunk in perm.chunks(mb) {
            let (parts, grads) = ppo_loss_and_grad(policy, buf, chunk, cfg)?;
            let mut g = grads.to_flat();
            let norm = clip_grad_norm(&mut g, cfg.max_grad_norm);
            if !norm.is_finite() {
                return Err(Error::Divergence("non-finite gradient".into()));
            }
            opt.step(&mut params, &g, *lr);
            policy.set_flat(&params);
            if cfg.schedule == LrSchedule::Adaptive {
                if parts.approx_kl > 2.0 * cfg.desired_kl {
                    *lr = (*lr / 1.5).max(1e-5);
                } else if parts.approx_kl < 0.5 * cfg.desired_kl && parts.approx_kl > 0.0 {
                    *lr = (*lr * 1.5).min(1e-2);
                }
            }
            stats.surrogate += parts.surrogate;
            stats.value += parts.value;
            stats.entropy += parts.entropy;
            stats.approx_kl += parts.approx_kl;
            stats.clip_fraction += parts.clip_fraction;
            stats.grad_norm += norm;
            count += 1.0;
        }
    }
    if count > 0.0 {
        stats.surrogate /= count;
        stats.value /= count;
        stats.entropy /= count;
        stats.approx_kl /= count;
        stats.clip_fraction /= count;
        stats.grad_norm /= count;
    }
    stats.learning_rate = *lr;
    if !policy.is_finite() {
        return Err(Error::Divergence("non-finite policy parameters after update".into()));
    }
    Ok(stats)
}
