//! Fixtures shared by the criterion benches.

use std::sync::Arc;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use throw_core::env::{EnvConfig, VecEnv, Variant};
use throw_core::learner::{ActorCritic, RolloutBuffer};
use throw_core::{JointVector, MachineModel};

/// Random joint state inside the limits of every joint.
pub fn random_state(model: &MachineModel, rng: &mut ChaCha8Rng) -> (JointVector, JointVector) {
    let mut q = JointVector::zeros();
    let mut dq = JointVector::zeros();
    for i in 0..q.len() {
        let j = model.joint(i);
        q[i] = rng.random_range(j.lower.max(-3.0)..j.upper.min(3.0));
        dq[i] = rng.random_range(-0.5..0.5);
    }
    (q, dq)
}

pub fn vec_env(variant: Variant, num_envs: usize) -> VecEnv {
    let cfg = EnvConfig {
        variant,
        ..EnvConfig::default()
    };
    VecEnv::new(Arc::new(MachineModel::nominal()), cfg, num_envs, 0).expect("valid environment")
}

/// Full buffer of random transitions for a policy of the given shape.
pub fn random_buffer(policy: &ActorCritic, steps: usize, envs: usize, seed: u64) -> RolloutBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (od, ad) = (policy.obs_dim(), policy.act_dim());
    let mut buf = RolloutBuffer::new(steps, envs, od, ad);
    for _ in 0..steps {
        let obs = Array2::from_shape_fn((envs, od), |_| rng.random_range(-1.0..1.0));
        let act = Array2::from_shape_fn((envs, ad), |_| rng.random_range(-1.0..1.0));
        let lp: Vec<f64> = (0..envs).map(|_| rng.random_range(-8.0..-2.0)).collect();
        let v: Vec<f64> = (0..envs).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r: Vec<f64> = (0..envs).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d: Vec<bool> = (0..envs).map(|_| rng.random_bool(0.05)).collect();
        buf.push(obs.view(), act.view(), &lp, &v, &r, &d).expect("layout");
    }
    buf.finish(&vec![0.0; envs], 0.99, 0.95).expect("full buffer");
    buf
}
