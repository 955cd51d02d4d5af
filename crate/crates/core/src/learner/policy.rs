use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use super::mlp::Mlp;
use crate::error::{Error, Result};

/// Actor and critic networks plus a state-independent log standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct ActorCritic {
    pub actor: Mlp,
    pub critic: Mlp,
    pub log_std: Array1<f64>,
}

impl ActorCritic {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, act_dim: usize, hidden: &[usize], init_log_std: f64, rng: &mut R) -> Self {
        let sizes = |out: usize| {
            let mut s = vec![obs_dim];
            s.extend_from_slice(hidden);
            s.push(out);
            s
        };
        ActorCritic {
            actor: Mlp::new(&sizes(act_dim), 0.01, rng),
            critic: Mlp::new(&sizes(1), 1.0, rng),
            log_std: Array1::from_elem(act_dim, init_log_std),
        }
    }

    /// All-zero parameters with the same shapes.
    pub fn zeros_like(&self) -> Self {
        ActorCritic {
            actor: Mlp::zeros(&self.actor.sizes()),
            critic: Mlp::zeros(&self.critic.sizes()),
            log_std: Array1::zeros(self.log_std.len()),
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn hidden(&self) -> Vec<usize> {
        let s = self.actor.sizes();
        s[1..s.len() - 1].to_vec()
    }

    pub fn num_params(&self) -> usize {
        self.actor.num_params() + self.critic.num_params() + self.log_std.len()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_params());
        self.actor.write_flat(&mut v);
        self.critic.write_flat(&mut v);
        v.extend(self.log_std.iter());
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params());
        let mut k = self.actor.read_flat(flat);
        k += self.critic.read_flat(&flat[k..]);
        for (d, s) in self.log_std.iter_mut().zip(&flat[k..]) {
            *d = *s;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.actor.is_finite() && self.critic.is_finite() && self.log_std.iter().all(|v| v.is_finite())
    }

    pub fn mean(&self, obs: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.actor.forward(obs)
    }

    pub fn value(&self, obs: ArrayView2<f64>) -> Result<Array1<f64>> {
        Ok(self.critic.forward(obs)?.index_axis_move(Axis(1), 0))
    }

    /// Sample one action per row; returns actions, log-probabilities and values.
    pub fn act<R: Rng + ?Sized>(
        &self,
        obs: ArrayView2<f64>,
        rng: &mut R,
    ) -> Result<(Array2<f64>, Array1<f64>, Array1<f64>)> {
        let mean = self.mean(obs)?;
        let std = self.log_std.mapv(f64::exp);
        let mut actions = mean.clone();
        for mut row in actions.rows_mut() {
            for (a, s) in row.iter_mut().zip(&std) {
                let xi: f64 = rng.sample(StandardNormal);
                *a += s * xi;
            }
        }
        let log_probs = Array1::from_iter(
            mean.rows()
                .into_iter()
                .zip(actions.rows())
                .map(|(m, a)| gaussian_log_prob(m, self.log_std.view(), a)),
        );
        Ok((actions, log_probs, self.value(obs)?))
    }
}

/// Diagonal-Gaussian log density.
pub fn gaussian_log_prob(mean: ArrayView1<f64>, log_std: ArrayView1<f64>, action: ArrayView1<f64>) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((m, ls), a)| {
            let z = (a - m) * (-ls).exp();
            -0.5 * z * z - ls - 0.5 * (2.0 * PI).ln()
        })
        .sum()
}

/// Differential entropy of the diagonal Gaussian.
pub fn gaussian_entropy(log_std: ArrayView1<f64>) -> f64 {
    log_std.iter().map(|ls| ls + 0.5 * (1.0 + (2.0 * PI).ln())).sum()
}

/// Single-observation sampling helper: `mean + std * xi`.
pub fn gaussian_policy_sample<R: Rng + ?Sized>(policy: &ActorCritic, obs: &[f64], rng: &mut R) -> Result<(Vec<f64>, f64)> {
    if obs.len() != policy.obs_dim() {
        return Err(Error::Shape(format!("observation has {} entries, expected {}", obs.len(), policy.obs_dim())));
    }
    let x = ArrayView2::from_shape((1, obs.len()), obs).map_err(|e| Error::Shape(e.to_string()))?;
    let (a, lp, _) = policy.act(x, rng)?;
    Ok((a.row(0).to_vec(), lp[0]))
}
