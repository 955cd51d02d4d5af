use std::sync::Arc;

use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use throw_core::env::{EnvConfig, VecEnv, Variant};
use throw_core::learner::*;
use throw_core::MachineModel;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| r.sample::<f64, _>(StandardNormal))
}

/// Buffer filled with random data; log-probs taken from `policy` so that the
/// ratio starts at one.
fn random_buffer(policy: &ActorCritic, n: usize, seed: u64) -> RolloutBuffer {
    let mut r = rng(seed);
    let obs = random_matrix(&mut r, n, policy.obs_dim());
    let mean = policy.mean(obs.view()).unwrap();
    let actions = &mean + &random_matrix(&mut r, n, policy.act_dim());
    let mut buf = RolloutBuffer::new(1, n, policy.obs_dim(), policy.act_dim());
    let lp: Vec<f64> =
        (0..n).map(|i| gaussian_log_prob(mean.row(i), policy.log_std.view(), actions.row(i))).collect();
    let values: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let rewards: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    buf.push(obs.view(), actions.view(), &lp, &values, &rewards, &vec![true; n]).unwrap();
    buf.finish(&vec![0.0; n], 0.99, 0.95).unwrap();
    buf
}

fn loss(policy: &ActorCritic, buf: &RolloutBuffer, cfg: &PpoConfig) -> f64 {
    let idx: Vec<usize> = (0..buf.len()).collect();
    ppo_loss_and_grad(policy, buf, &idx, cfg).unwrap().0.total
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Central differences on a subset of parameters (all when `sample` is None).
fn max_fd_error(policy: &ActorCritic, buf: &RolloutBuffer, cfg: &PpoConfig, sample: Option<usize>) -> f64 {
    let idx: Vec<usize> = (0..buf.len()).collect();
    let (_, grads) = ppo_loss_and_grad(policy, buf, &idx, cfg).unwrap();
    let g = grads.to_flat();
    let base = policy.to_flat();
    let mut which: Vec<usize> = (0..base.len()).collect();
    if let Some(k) = sample {
        let mut r = rng(77);
        which = (0..k).map(|_| r.random_range(0..base.len())).collect();
        // always include the log-std entries
        which.extend(base.len() - policy.act_dim()..base.len());
    }
    let h = 1e-5;
    let mut p = policy.clone();
    let mut worst: f64 = 0.0;
    for &i in &which {
        let mut x = base.clone();
        x[i] += h;
        p.set_flat(&x);
        let up = loss(&p, buf, cfg);
        x[i] -= 2.0 * h;
        p.set_flat(&x);
        let down = loss(&p, buf, cfg);
        let fd = (up - down) / (2.0 * h);
        worst = worst.max(relative_error(g[i], fd));
    }
    worst
}

fn smooth_cfg() -> PpoConfig {
    PpoConfig {
        clip: f64::INFINITY,
        clip_value_loss: false,
        ..PpoConfig::default()
    }
}

#[test]
fn gradients_match_finite_differences_small() {
    let policy = ActorCritic::new(6, 3, &[9, 7], -0.3, &mut rng(1));
    let buf = random_buffer(&policy, 40, 2);
    let err = max_fd_error(&policy, &buf, &smooth_cfg(), None);
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn gradients_match_finite_differences_full_size() {
    let mut policy = ActorCritic::new(56, 4, &[256, 128], 0.0, &mut rng(3));
    // larger output weights so the actor gradients are not tiny
    for l in policy.actor.layers.iter_mut() {
        l.w.mapv_inplace(|w| w * 3.0);
    }
    let buf = random_buffer(&policy, 32, 4);
    let err = max_fd_error(&policy, &buf, &smooth_cfg(), Some(400));
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn clipped_loss_gradients_match_away_from_kinks() {
    // after one update the ratios differ from one; clipped branches are
    // piecewise smooth so finite differences still agree almost everywhere
    let mut policy = ActorCritic::new(5, 2, &[8], 0.0, &mut rng(5));
    let buf = random_buffer(&policy, 30, 6);
    let cfg = PpoConfig {
        clip: 0.05,
        ..PpoConfig::default()
    };
    let mut opt = Adam::new(policy.num_params());
    let mut lr = 0.02;
    ppo_update(&mut policy, &mut opt, &mut lr, &buf, &PpoConfig { epochs: 1, num_minibatches: 1, ..cfg.clone() }, &mut rng(0))
        .unwrap();
    let err = max_fd_error(&policy, &buf, &cfg, None);
    assert!(err < 1e-4, "max relative error {err}");
}

/// `O(T^2)` advantage oracle summing discounted TD errors directly.
fn brute_force_gae(r: &[f64], v: &[f64], d: &[bool], last: f64, g: f64, l: f64) -> Vec<f64> {
    let n = r.len();
    let next_v = |k: usize| if k + 1 < n { v[k + 1] } else { last };
    (0..n)
        .map(|t| {
            let mut total = 0.0;
            for k in t..n {
                let delta = r[k] + if d[k] { 0.0 } else { g * next_v(k) } - v[k];
                total += (g * l).powi((k - t) as i32) * delta;
                if d[k] {
                    break;
                }
            }
            total
        })
        .collect()
}

proptest! {
    #[test]
    fn gae_matches_brute_force(
        seq in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, prop::bool::weighted(0.2)), 1..60),
        last in -5.0f64..5.0, g in 0.5f64..1.0, l in 0.0f64..=1.0,
    ) {
        let r: Vec<f64> = seq.iter().map(|s| s.0).collect();
        let v: Vec<f64> = seq.iter().map(|s| s.1).collect();
        let d: Vec<bool> = seq.iter().map(|s| s.2).collect();
        let (adv, ret) = compute_gae(&r, &v, &d, last, g, l);
        let oracle = brute_force_gae(&r, &v, &d, last, g, l);
        for t in 0..r.len() {
            prop_assert!((adv[t] - oracle[t]).abs() < 1e-10);
            prop_assert!((ret[t] - adv[t] - v[t]).abs() < 1e-12);
        }
    }
}

#[test]
fn buffer_advantages_are_normalized() {
    let policy = ActorCritic::new(4, 2, &[8], 0.0, &mut rng(8));
    let buf = random_buffer(&policy, 500, 9);
    let n = buf.advantages.len() as f64;
    let mean = buf.advantages.iter().sum::<f64>() / n;
    let std = (buf.advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    assert!(mean.abs() < 1e-10);
    assert!((std - 1.0).abs() < 1e-6);
}

#[test]
fn unclipped_step_equals_vanilla_policy_gradient() {
    let policy = ActorCritic::new(7, 3, &[16, 12], -0.2, &mut rng(10));
    let buf = random_buffer(&policy, 64, 11);
    let cfg = PpoConfig {
        clip: f64::INFINITY,
        value_coef: 0.0,
        entropy_coef: 0.0,
        max_grad_norm: 0.0,
        epochs: 1,
        num_minibatches: 1,
        ..PpoConfig::default()
    };
    let idx: Vec<usize> = (0..buf.len()).collect();
    let (_, grads) = ppo_loss_and_grad(&policy, &buf, &idx, &cfg).unwrap();

    // oracle: -(1/n) sum A_i grad log pi(a_i | s_i), one sample at a time
    let n = buf.len() as f64;
    let mut oracle = vec![0.0; policy.num_params()];
    let std2: Vec<f64> = policy.log_std.iter().map(|l| (2.0 * l).exp()).collect();
    for i in 0..buf.len() {
        let x = buf.obs.row(i).insert_axis(ndarray::Axis(0)).to_owned();
        let (m, cache) = policy.actor.forward_cached(x.view()).unwrap();
        let a = buf.actions.row(i);
        let dmu = Array2::from_shape_fn((1, policy.act_dim()), |(_, j)| (a[j] - m[[0, j]]) / std2[j]);
        let g_actor = policy.actor.backward(&cache, dmu.view());
        let g_ls = Array1::from_shape_fn(policy.act_dim(), |j| (a[j] - m[[0, j]]).powi(2) / std2[j] - 1.0);
        let mut g = policy.zeros_like();
        g.actor = g_actor;
        g.log_std = g_ls;
        for (o, v) in oracle.iter_mut().zip(g.to_flat()) {
            *o -= buf.advantages[i] * v / n;
        }
    }
    let got = grads.to_flat();
    let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in got.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-8 * scale.max(1.0), "{a} vs {b}");
    }

    // and one optimizer step lands on the same parameters
    let mut p1 = policy.clone();
    let mut lr = 1e-3;
    ppo_update(&mut p1, &mut Adam::new(policy.num_params()), &mut lr, &buf, &cfg, &mut rng(0)).unwrap();
    let mut p2 = policy.to_flat();
    Adam::new(policy.num_params()).step(&mut p2, &oracle, 1e-3);
    for (a, b) in p1.to_flat().iter().zip(&p2) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn zero_advantages_give_zero_actor_gradient() {
    let policy = ActorCritic::new(5, 2, &[8], 0.0, &mut rng(12));
    let mut buf = random_buffer(&policy, 20, 13);
    buf.advantages.fill(0.0);
    let cfg = PpoConfig {
        entropy_coef: 0.0,
        ..PpoConfig::default()
    };
    let idx: Vec<usize> = (0..buf.len()).collect();
    let (_, g) = ppo_loss_and_grad(&policy, &buf, &idx, &cfg).unwrap();
    let mut flat = Vec::new();
    g.actor.write_flat(&mut flat);
    assert!(flat.iter().all(|&v| v == 0.0));
    assert!(g.log_std.iter().all(|&v| v == 0.0));
}

#[test]
fn bandit_learns_the_positive_action() {
    let envs = 64;
    let mut policy = ActorCritic::new(1, 1, &[16], 0.0, &mut rng(14));
    let cfg = PpoConfig {
        learning_rate: 1e-3,
        ..PpoConfig::default()
    };
    let mut opt = Adam::new(policy.num_params());
    let mut lr = cfg.learning_rate;
    let mut r = rng(15);
    let obs = Array2::from_elem((envs, 1), 1.0);
    let mut best = 0.0;
    for _ in 0..200 {
        let (actions, lp, values) = policy.act(obs.view(), &mut r).unwrap();
        let rewards: Vec<f64> = actions.iter().map(|&a| if a > 0.0 { 1.0 } else { 0.0 }).collect();
        let rate = rewards.iter().sum::<f64>() / envs as f64;
        best = rate;
        if rate > 0.95 {
            break;
        }
        let mut buf = RolloutBuffer::new(1, envs, 1, 1);
        buf.push(obs.view(), actions.view(), lp.as_slice().unwrap(), values.as_slice().unwrap(), &rewards, &vec![true; envs])
            .unwrap();
        buf.finish(&vec![0.0; envs], cfg.gamma, cfg.lambda).unwrap();
        let stats = ppo_update(&mut policy, &mut opt, &mut lr, &buf, &cfg, &mut r).unwrap();
        assert!((0.0..=1.0).contains(&stats.clip_fraction));
        assert!(stats.approx_kl >= -1e-12);
    }
    assert!(best > 0.95, "optimal action rate {best}");
}

#[test]
fn adam_minimizes_quadratic_bowl() {
    let target = [1.5, -2.0, 0.25, 4.0];
    let curv = [1.0, 10.0, 0.1, 3.0];
    let mut x = vec![0.0; 4];
    let mut opt = Adam::new(4);
    for _ in 0..10_000 {
        let g: Vec<f64> = (0..4).map(|i| 2.0 * curv[i] * (x[i] - target[i])).collect();
        adam_step(&mut opt, &mut x, &g, 0.01);
    }
    for i in 0..4 {
        assert!((x[i] - target[i]).abs() < 1e-6, "{i}: {}", x[i]);
    }
}

#[test]
fn sampled_log_prob_matches_entropy() {
    let mut r = rng(16);
    let policy = ActorCritic::new(3, 4, &[8], 0.0, &mut r);
    let mut policy = policy;
    policy.log_std = Array1::from(vec![0.3, -0.7, 0.0, 1.1]);
    let obs = [0.2, -0.4, 0.9];
    let n = 100_000;
    let mut sum = 0.0;
    for _ in 0..n {
        let (_, lp) = gaussian_policy_sample(&policy, &obs, &mut r).unwrap();
        sum -= lp;
    }
    let h = gaussian_entropy(policy.log_std.view());
    assert!(((sum / n as f64) - h).abs() < 0.01 * h.abs());
}

#[test]
fn checkpoint_file_round_trip_is_bit_exact() {
    let mut r = rng(17);
    let policy = ActorCritic::new(65, 5, &[256, 128], 0.0, &mut r);
    let mut normalizer = RunningNormalizer::new(65, true);
    normalizer.update(random_matrix(&mut r, 100, 65).view());
    let ck = Checkpoint {
        variant: Variant::Spatial,
        iteration: 3,
        config_hash: sha256(b"x"),
        policy,
        normalizer,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.ckpt");
    ck.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    let obs = random_matrix(&mut r, 10, 65);
    let x1 = ck.normalizer.normalize(obs.view());
    let x2 = back.normalizer.normalize(obs.view());
    let y1 = ck.policy.mean(x1.view()).unwrap();
    let y2 = back.policy.mean(x2.view()).unwrap();
    assert!(y1.iter().zip(y2.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_eq!(ck.policy.value(x1.view()).unwrap(), back.policy.value(x2.view()).unwrap());
}

fn tiny_config() -> (EnvConfig, TrainConfig) {
    let env = EnvConfig {
        variant: Variant::Planar,
        max_steps: 20,
        ..EnvConfig::default()
    };
    let train = TrainConfig {
        num_envs: 4,
        iterations: 3,
        steps_per_iter: 8,
        hidden: vec![16, 8],
        ..TrainConfig::default()
    };
    (env, train)
}

#[test]
fn zero_iterations_return_initial_parameters() {
    let (env_cfg, mut cfg) = tiny_config();
    cfg.iterations = 0;
    let m = Arc::new(MachineModel::nominal());
    let venv = VecEnv::new(Arc::clone(&m), env_cfg.clone(), cfg.num_envs, 5).unwrap();
    let (trainer, log) = train(venv, cfg.clone(), 5, |_, _| Ok(())).unwrap();
    assert!(log.is_empty());
    let fresh = Trainer::new(VecEnv::new(m, env_cfg, cfg.num_envs, 5).unwrap(), cfg, 5).unwrap();
    assert_eq!(trainer.policy, fresh.policy);
}

#[test]
fn training_is_deterministic() {
    let run = || {
        let (env_cfg, cfg) = tiny_config();
        let venv = VecEnv::new(Arc::new(MachineModel::nominal()), env_cfg, cfg.num_envs, 21).unwrap();
        let (trainer, log) = train(venv, cfg, 21, |_, _| Ok(())).unwrap();
        (trainer.policy.to_flat(), log)
    };
    let (p1, l1) = run();
    let (p2, l2) = run();
    assert_eq!(p1.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), p2.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    assert_eq!(format!("{l1:?}"), format!("{l2:?}"));
    assert_eq!(l1.len(), 3);
    assert!(l1.iter().all(|r| (0.0..=1.0).contains(&r.clip_fraction)));
}

#[test]
fn trainer_rejects_mismatched_batch() {
    let (env_cfg, cfg) = tiny_config();
    let venv = VecEnv::new(Arc::new(MachineModel::nominal()), env_cfg, 3, 0).unwrap();
    assert!(Trainer::new(venv, cfg, 0).is_err());
}
