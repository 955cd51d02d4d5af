//! Acceptance checks, one line per criterion.
//!
//! `cargo test -p throw-core --test acceptance` runs every check except the
//! desk-scale training run (AC7), which takes most of an hour on one core.
//! Set `THROW_ACCEPT_FULL=1` to include it. The process exits non-zero when
//! any executed check fails.

use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{Vector2, Vector3, Vector4};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use throw_core::actuation::{ControllerKind, DelayConfig, DelayLine};
use throw_core::config::RunConfig;
use throw_core::dynamics::{
    forward_dynamics, hybrid_dynamics, inverse_dynamics, mass_matrix, mechanical_energy, passive_swing_step,
    FrictionParams, MachineState, SIM_DT,
};
use throw_core::env::{
    ground_time, save_trace, step_payload, BallState, EnvConfig, ThrowEnv, ThrowTarget, TraceRow, VecEnv, Variant,
};
use throw_core::eval::{
    export_report, fixed_start, impact_statistics, run_episode, run_target_sweep, ImpactRecord, Outcome,
    ScriptedThrow, SweepConfig,
};
use throw_core::learner::{
    compute_gae, gaussian_log_prob, ppo_loss_and_grad, ppo_update, train, ActorCritic, Adam, Checkpoint, PpoConfig,
    RolloutBuffer, TrainConfig,
};
use throw_core::sysid::{fit_friction, pitch_pendulum_length, simulate_pendulum, FitConfig, OscillationLog};
use throw_core::{JointVector, MachineModel, Result};

type Check = std::result::Result<String, String>;

fn ensure(ok: bool, msg: String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn lib<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn secs(d: Duration) -> String {
    format!("{:.1} s", d.as_secs_f64())
}

// AC1: friction identification on a reference oscillation log.
fn ac1() -> Check {
    let model = MachineModel::nominal();
    let length = pitch_pendulum_length(&model);
    let truth = FrictionParams { upsilon: 0.03, eta: 0.1 };
    let t: Vec<f64> = (0..2000).map(|k| 1.0 + k as f64 * 0.01).collect();
    let angle = simulate_pendulum(length, model.gravity, &truth, 0.5, 0.0, &t, 1e-4);
    let log = lib(OscillationLog::new(t, angle, "pitch"))?;
    let start = Instant::now();
    let fit = lib(fit_friction(&log, length, &FitConfig::default()))?;
    let elapsed = start.elapsed();
    let du = (fit.params.upsilon - 0.03).abs() / 0.03;
    let de = (fit.params.eta - 0.1).abs() / 0.1;
    ensure(
        du <= 0.1 && de <= 0.1 && fit.rms < 0.01 && elapsed < Duration::from_secs(10),
        format!("upsilon {:.5} eta {:.5} rms {:.2e} in {}", fit.params.upsilon, fit.params.eta, fit.rms, secs(elapsed)),
    )?;
    Ok(format!(
        "upsilon {:.5} ({:.2}%), eta {:.5} ({:.2}%), rms {:.2e} rad, {}",
        fit.params.upsilon,
        100.0 * du,
        fit.params.eta,
        100.0 * de,
        fit.rms,
        secs(elapsed)
    ))
}

// AC2: release delay.
fn ac2() -> Check {
    let mut line = DelayLine::new(DelayConfig::default(), SIM_DT);
    line.push(0, &mut rng(0));
    ensure(line.effective_step() == Some(26), format!("deterministic delay gives {:?} steps", line.effective_step()))?;
    let cfg = DelayConfig {
        randomize: true,
        ..DelayConfig::default()
    };
    let mut r = rng(2);
    let n = 10_000;
    let samples: Vec<f64> = (0..n).map(|_| cfg.sample(&mut r)).collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let std = (samples.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let msg = format!("26 steps; randomized mean {:.2} ms, std {:.2} ms", 1e3 * mean, 1e3 * std);
    ensure((mean - 0.258).abs() <= 1e-3 && (std - 0.015).abs() <= 1.5e-3, msg.clone())?;
    Ok(msg)
}

fn random_q(model: &MachineModel, r: &mut ChaCha8Rng) -> JointVector {
    JointVector::from_fn(|i, _| {
        let j = model.joint(i);
        r.random_range(j.lower..j.upper)
    })
}

fn hanging(q2: f64, q3: f64, q4: f64) -> JointVector {
    let mut q = JointVector::zeros();
    q[1] = q2;
    q[2] = q3;
    q[3] = q4;
    q[4] = -std::f64::consts::FRAC_PI_2 - (q2 + q3);
    q
}

/// Swing energy over 10 s of passive motion, relative to the hanging rest.
fn swing_energy(model: &MachineModel, friction: FrictionParams) -> std::result::Result<Vec<f64>, String> {
    let base = hanging(0.5, -0.9, 0.4);
    let mut s = MachineState::at_rest(base);
    s.q[4] += 0.5;
    s.q[5] = 0.3;
    let rest = mechanical_energy(model, &base, &JointVector::zeros());
    let mut e = vec![mechanical_energy(model, &s.q, &s.dq) - rest];
    for _ in 0..1000 {
        s = lib(passive_swing_step(model, &s, &[friction; 2], SIM_DT))?;
        e.push(mechanical_energy(model, &s.q, &s.dq) - rest);
    }
    Ok(e)
}

fn window_mean(e: &[f64]) -> f64 {
    e.iter().sum::<f64>() / e.len() as f64
}

// AC3: rigid-body dynamics.
fn ac3() -> Check {
    let model = MachineModel::nominal();
    let mut r = rng(3);
    let (mut sym, mut rt, mut hyb) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let q = random_q(&model, &mut r);
        let dq = JointVector::from_fn(|_, _| r.random_range(-1.0..1.0));
        let m = mass_matrix(&model, &q);
        sym = sym.max((m - m.transpose()).abs().max());
        ensure(m.cholesky().is_some(), format!("mass matrix not positive definite at {q:?}"))?;
        let ddq = JointVector::from_fn(|_, _| r.random_range(-2.0..2.0));
        let tau = inverse_dynamics(&model, &q, &dq, &ddq);
        let back = lib(forward_dynamics(&model, &q, &dq, &tau))?;
        rt = rt.max((back - ddq).abs().max());
        let acc = Vector4::from_fn(|_, _| r.random_range(-2.0..2.0));
        let tp = Vector2::from_fn(|_, _| r.random_range(-50.0..50.0));
        let sol = lib(hybrid_dynamics(&model, &q, &dq, &acc, &tp))?;
        let mut tau = JointVector::zeros();
        tau.fixed_rows_mut::<4>(0).copy_from(&sol.tau_actuated);
        tau.fixed_rows_mut::<2>(4).copy_from(&tp);
        let full = lib(forward_dynamics(&model, &q, &dq, &tau))?;
        hyb = hyb.max((full.fixed_rows::<4>(0) - acc).abs().max()).max((full.fixed_rows::<2>(4) - sol.ddq_passive).abs().max());
    }
    ensure(sym < 1e-9 && rt < 1e-8 && hyb < 1e-6, format!("symmetry {sym:.1e}, round trip {rt:.1e}, closure {hyb:.1e}"))?;

    let free = swing_energy(&model, FrictionParams::FRICTIONLESS)?;
    let drift = (window_mean(&free[901..]) - window_mean(&free[..100])) / free[0];
    let damped = swing_energy(&model, FrictionParams::default())?;
    let windows: Vec<f64> = damped.chunks(100).map(window_mean).collect();
    let increase = windows.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let msg = format!(
        "symmetry {sym:.1e}, FD/ID {rt:.1e}, hybrid {hyb:.1e}, drift {:.3}%, damped energy {:.3} -> {:.3} J",
        100.0 * drift,
        damped[0],
        damped[damped.len() - 1]
    );
    ensure(drift.abs() < 0.01 && increase <= 0.0, format!("{msg}, largest window increase {increase:.2e} J"))?;
    Ok(msg)
}

/// Quadratic-formula landing time, written independently of the library.
fn landing_time(z: f64, vz: f64, g: f64) -> f64 {
    (vz + (vz * vz + 2.0 * g * z).sqrt()) / g
}

// AC4: ballistic flight.
fn ac4() -> Check {
    let g = 9.81;
    let mut r = rng(4);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p0 = Vector3::new(r.random_range(-3.0..3.0), r.random_range(-3.0..3.0), r.random_range(0.5..6.0));
        let v0 = Vector3::new(r.random_range(-10.0..10.0), r.random_range(-10.0..10.0), r.random_range(-4.0..10.0));
        let mut ball = BallState {
            position: p0,
            velocity: v0,
            released: true,
            ..BallState::default()
        };
        let mut t = 0.0;
        while ball.in_flight() {
            ball = step_payload(&ball, g, SIM_DT);
            t += SIM_DT;
            if ball.in_flight() {
                let want = p0 + v0 * t + Vector3::new(0.0, 0.0, -0.5 * g * t * t);
                worst = worst.max((ball.position - want).norm());
            }
        }
        let th = landing_time(p0.z, v0.z, g);
        let want = Vector3::new(p0.x + v0.x * th, p0.y + v0.y * th, 0.0);
        worst = worst.max((ball.position - want).norm());
        worst = worst.max((ground_time(p0.z, v0.z, g) - th).abs());
    }
    let msg = format!("max deviation {worst:.2e} m over 1000 launches");
    ensure(worst < 1e-6, msg.clone())?;
    Ok(msg)
}

// AC5: observation layout and single release.
fn ac5() -> Check {
    let model = Arc::new(MachineModel::nominal());
    let mut steps = 0;
    let mut released = 0;
    for (variant, want) in [(Variant::Spatial, 65), (Variant::Planar, 56)] {
        let cfg = Arc::new(EnvConfig {
            variant,
            ..EnvConfig::default()
        });
        let controller = cfg.controller.build(&model);
        let mut env = ThrowEnv::new(Arc::clone(&model), cfg, controller, 5, 0);
        let mut r = rng(50);
        for ep in 0..100 {
            let obs = lib(env.reset(None))?;
            ensure(obs.len() == want, format!("{} reset observation has {} entries", variant, obs.len()))?;
            let mut fired = 0;
            loop {
                // A wide release channel opens the gripper in most episodes.
                let mut a: Vec<f64> = (0..variant.act_dim()).map(|_| r.random_range(-1.0..1.0)).collect();
                a[variant.act_dim() - 1] = r.random_range(-2.0..1.4);
                let out = lib(env.step(&a, None))?;
                steps += 1;
                ensure(
                    out.observation.len() == want,
                    format!("{} episode {ep}: observation has {} entries", variant, out.observation.len()),
                )?;
                fired += usize::from(out.released);
                if out.termination.is_done() {
                    break;
                }
            }
            ensure(fired <= 1, format!("{variant} episode {ep} released {fired} times"))?;
            released += fired;
        }
    }
    Ok(format!("65/56 entries on {steps} steps, {released} of 200 episodes released once"))
}

fn random_buffer(policy: &ActorCritic, n: usize, seed: u64) -> RolloutBuffer {
    let mut r = rng(seed);
    let obs = Array2::from_shape_fn((n, policy.obs_dim()), |_| r.sample::<f64, _>(StandardNormal));
    let mean = policy.mean(obs.view()).unwrap();
    let noise = Array2::from_shape_fn((n, policy.act_dim()), |_| r.sample::<f64, _>(StandardNormal));
    let actions = &mean + &noise;
    let lp: Vec<f64> = (0..n).map(|i| gaussian_log_prob(mean.row(i), policy.log_std.view(), actions.row(i))).collect();
    let values: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let rewards: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let mut buf = RolloutBuffer::new(1, n, policy.obs_dim(), policy.act_dim());
    buf.push(obs.view(), actions.view(), &lp, &values, &rewards, &vec![true; n]).unwrap();
    buf.finish(&vec![0.0; n], 0.99, 0.95).unwrap();
    buf
}

fn fd_error() -> f64 {
    let policy = ActorCritic::new(6, 3, &[12, 8], -0.3, &mut rng(60));
    let buf = random_buffer(&policy, 40, 61);
    let cfg = PpoConfig {
        clip: f64::INFINITY,
        clip_value_loss: false,
        max_grad_norm: 0.0,
        ..PpoConfig::default()
    };
    let idx: Vec<usize> = (0..buf.len()).collect();
    let loss = |p: &ActorCritic| ppo_loss_and_grad(p, &buf, &idx, &cfg).unwrap().0.total;
    let g = ppo_loss_and_grad(&policy, &buf, &idx, &cfg).unwrap().1.to_flat();
    let base = policy.to_flat();
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut p = policy.clone();
    for i in 0..base.len() {
        let mut x = base.clone();
        x[i] += h;
        p.set_flat(&x);
        let up = loss(&p);
        x[i] -= 2.0 * h;
        p.set_flat(&x);
        let down = loss(&p);
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-6));
    }
    worst
}

fn gae_error() -> f64 {
    let mut r = rng(62);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = r.random_range(1..80);
        let rew: Vec<f64> = (0..n).map(|_| r.random_range(-5.0..5.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| r.random_range(-5.0..5.0)).collect();
        let d: Vec<bool> = (0..n).map(|_| r.random_bool(0.15)).collect();
        let (last, g, l) = (r.random_range(-5.0..5.0), r.random_range(0.9..1.0), r.random_range(0.0..=1.0));
        let (adv, _) = compute_gae(&rew, &v, &d, last, g, l);
        for t in 0..n {
            let mut total = 0.0;
            for k in t..n {
                let next = if k + 1 < n { v[k + 1] } else { last };
                let delta = rew[k] + if d[k] { 0.0 } else { g * next } - v[k];
                total += (g * l).powi((k - t) as i32) * delta;
                if d[k] {
                    break;
                }
            }
            worst = worst.max((adv[t] - total).abs());
        }
    }
    worst
}

fn vanilla_gap() -> f64 {
    let policy = ActorCritic::new(7, 3, &[16, 12], -0.2, &mut rng(63));
    let buf = random_buffer(&policy, 64, 64);
    let cfg = PpoConfig {
        clip: f64::INFINITY,
        value_coef: 0.0,
        entropy_coef: 0.0,
        max_grad_norm: 0.0,
        ..PpoConfig::default()
    };
    let idx: Vec<usize> = (0..buf.len()).collect();
    let got = ppo_loss_and_grad(&policy, &buf, &idx, &cfg).unwrap().1.to_flat();
    let n = buf.len() as f64;
    let var: Vec<f64> = policy.log_std.iter().map(|l| (2.0 * l).exp()).collect();
    let mut oracle = vec![0.0; got.len()];
    for i in 0..buf.len() {
        let x = buf.obs.row(i).insert_axis(ndarray::Axis(0)).to_owned();
        let (m, cache) = policy.actor.forward_cached(x.view()).unwrap();
        let a = buf.actions.row(i);
        let dmu = Array2::from_shape_fn((1, policy.act_dim()), |(_, j)| (a[j] - m[[0, j]]) / var[j]);
        let mut g = policy.zeros_like();
        g.actor = policy.actor.backward(&cache, dmu.view());
        g.log_std = Array1::from_shape_fn(policy.act_dim(), |j| (a[j] - m[[0, j]]).powi(2) / var[j] - 1.0);
        for (o, v) in oracle.iter_mut().zip(g.to_flat()) {
            *o -= buf.advantages[i] * v / n;
        }
    }
    let scale = oracle.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    got.iter().zip(&oracle).map(|(a, b)| (a - b).abs() / scale).fold(0.0, f64::max)
}

fn bandit() -> (usize, f64) {
    let envs = 64;
    let mut policy = ActorCritic::new(1, 1, &[16], 0.0, &mut rng(65));
    let cfg = PpoConfig {
        learning_rate: 1e-3,
        ..PpoConfig::default()
    };
    let mut opt = Adam::new(policy.num_params());
    let mut lr = cfg.learning_rate;
    let mut r = rng(66);
    let obs = Array2::from_elem((envs, 1), 1.0);
    let mut rate = 0.0;
    for it in 0..200 {
        let (actions, lp, values) = policy.act(obs.view(), &mut r).unwrap();
        let rewards: Vec<f64> = actions.iter().map(|&a| f64::from(u8::from(a > 0.0))).collect();
        rate = rewards.iter().sum::<f64>() / envs as f64;
        if rate > 0.95 {
            return (it, rate);
        }
        let mut buf = RolloutBuffer::new(1, envs, 1, 1);
        buf.push(obs.view(), actions.view(), lp.as_slice().unwrap(), values.as_slice().unwrap(), &rewards, &vec![true; envs])
            .unwrap();
        buf.finish(&vec![0.0; envs], cfg.gamma, cfg.lambda).unwrap();
        ppo_update(&mut policy, &mut opt, &mut lr, &buf, &cfg, &mut r).unwrap();
    }
    (200, rate)
}

// AC6: learner numerics.
fn ac6() -> Check {
    let start = Instant::now();
    let fd = fd_error();
    let gae = gae_error();
    let pg = vanilla_gap();
    let (iters, rate) = bandit();
    let elapsed = start.elapsed();
    let msg = format!(
        "FD {fd:.1e}, GAE {gae:.1e}, unclipped vs vanilla {pg:.1e}, bandit {:.0}% after {iters} iterations, {}",
        100.0 * rate,
        secs(elapsed)
    );
    ensure(fd < 1e-4 && gae < 1e-10 && pg < 1e-8 && rate > 0.95 && elapsed < Duration::from_secs(300), msg.clone())?;
    Ok(msg)
}

fn desk_config() -> std::result::Result<RunConfig, String> {
    lib(RunConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/desk_2d.toml")))
}

// AC7: desk-scale training and evaluation at a fixed 8.5 m target.
fn ac7() -> Check {
    let cfg = desk_config()?;
    let model = Arc::new(lib(cfg.load_model())?);
    let r_max = model.static_reach();
    ensure(
        cfg.env.variant == Variant::Planar
            && (r_max - 7.5).abs() < 1e-9
            && cfg.train.num_envs == 1024
            && cfg.train.iterations <= 800,
        format!("desk configuration is off-scale: r_max {r_max}, {} envs, {} iterations", cfg.train.num_envs, cfg.train.iterations),
    )?;
    let start = Instant::now();
    let venv = lib(VecEnv::new(Arc::clone(&model), cfg.env.clone(), cfg.train.num_envs, cfg.seed))?;
    let (trainer, _) = lib(train(venv, cfg.train.clone(), cfg.seed, |_, _| Ok(())))?;
    let train_time = start.elapsed();
    let policy = Checkpoint {
        variant: cfg.env.variant,
        iteration: trainer.iterations_done() as u64,
        config_hash: [0; 32],
        policy: trainer.policy.clone(),
        normalizer: trainer.normalizer.clone(),
    };
    let mut env_cfg = cfg.env.clone();
    env_cfg.controller.kind = ControllerKind::Id;
    let env_cfg = Arc::new(env_cfg);
    let controller = env_cfg.controller.build(&model);
    let (mut landed, mut err, mut dist) = (0usize, 0.0, 0.0);
    for k in 0..100 {
        let mut env = ThrowEnv::new(Arc::clone(&model), Arc::clone(&env_cfg), controller.clone(), cfg.seed + 1, k);
        let s = lib(run_episode(&mut env, &policy, Some(ThrowTarget::at(8.5, 0.0)), None, None))?;
        if let (Some(p), Some(e)) = (s.impact, s.impact_error()) {
            landed += 1;
            err += e;
            dist += p.x.hypot(p.y);
        }
    }
    let n = landed.max(1) as f64;
    let (err, dist) = (err / n, dist / n);
    let msg = format!(
        "landed {landed}/100, mean error {err:.3} m, mean impact distance {dist:.3} m (> {:.3}), {} iterations in {}",
        1.05 * r_max,
        trainer.iterations_done(),
        secs(train_time)
    );
    ensure(
        landed >= 80 && err <= 0.5 && dist > 1.05 * r_max && train_time <= Duration::from_secs(3600),
        msg.clone(),
    )?;
    Ok(msg)
}

fn script() -> ScriptedThrow {
    ScriptedThrow {
        variant: Variant::Planar,
        velocities: [0.0, 0.3, 0.6, 0.0],
        release_at: 4,
    }
}

fn trace_bytes(
    model: &Arc<MachineModel>,
    cfg: &EnvConfig,
    start: MachineState,
) -> std::result::Result<(Vec<u8>, Vec<TraceRow>), String> {
    let cfg = Arc::new(cfg.clone());
    let controller = cfg.controller.build(model);
    let mut env = ThrowEnv::new(Arc::clone(model), cfg, controller, 1, 0);
    let mut rows = Vec::new();
    lib(run_episode(&mut env, &script(), Some(ThrowTarget::at(8.5, 0.0)), Some(start), Some(&mut rows)))?;
    let mut out = Vec::new();
    lib(throw_core::env::write_trace(&rows, &mut out))?;
    Ok((out, rows))
}

// AC8: target sweep, statistics and controller comparison.
fn ac8() -> Check {
    let model = MachineModel::nominal();
    let cfg = SweepConfig {
        distances: (0..6).map(|k| 7.5 + 0.5 * k as f64).collect(),
        repeats: 200,
        seed: 8,
        ..SweepConfig::default()
    };
    let start = Instant::now();
    let records = lib(run_target_sweep(&script(), &model, &cfg))?;
    let elapsed = start.elapsed();
    ensure(records.len() == 1200, format!("{} records", records.len()))?;
    let stats = impact_statistics(&records);
    let mut worst = 0.0f64;
    for s in &stats {
        let landed: Vec<&ImpactRecord> =
            records.iter().filter(|r| r.distance == s.distance && r.outcome == Outcome::Landed).collect();
        let n = landed.len() as f64;
        ensure((s.landing_rate - n / 200.0).abs() < 1e-12, format!("landing rate at {}", s.distance))?;
        if landed.len() < 2 {
            continue;
        }
        for (got_mean, got_std, pick) in [
            (s.mean_downrange_error, s.std_downrange, 0usize),
            (s.mean_crossrange_error, s.std_crossrange, 1),
        ] {
            let v: Vec<f64> =
                landed.iter().map(|r| if pick == 0 { r.downrange_error } else { r.crossrange_error }.unwrap()).collect();
            let mean = v.iter().sum::<f64>() / n;
            let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            worst = worst.max((got_mean.unwrap() - mean).abs()).max((got_std.unwrap() - std).abs());
        }
    }
    ensure(worst < 1e-12, format!("statistics deviate by {worst:.1e}"))?;

    let m = Arc::new(model);
    let q0 = lib(fixed_start(&m, 0.0, cfg.start_pose))?;
    let mut env_cfg = EnvConfig {
        variant: Variant::Planar,
        ..EnvConfig::default()
    };
    env_cfg.controller.kind = ControllerKind::Id;
    let (_, id_rows) = trace_bytes(&m, &env_cfg, q0)?;
    env_cfg.controller.kind = ControllerKind::Pid;
    let (_, pid_rows) = trace_bytes(&m, &env_cfg, q0)?;
    let gap = id_rows
        .iter()
        .zip(&pid_rows)
        .map(|(a, b)| (a.q - b.q).abs().max())
        .fold(0.0f64, f64::max);
    let landed = records.iter().filter(|r| r.outcome == Outcome::Landed).count();
    let msg = format!(
        "1200 records ({landed} landed), statistics within {worst:.1e}, ID/PID joint gap {gap:.3} rad, {}",
        secs(elapsed)
    );
    ensure(gap > 1e-3 && elapsed < Duration::from_secs(600), msg.clone())?;
    Ok(msg)
}

fn small_train(dir: &std::path::Path) -> std::result::Result<(), String> {
    let env = EnvConfig {
        variant: Variant::Planar,
        max_steps: 30,
        ..EnvConfig::default()
    };
    let cfg = TrainConfig {
        num_envs: 8,
        iterations: 3,
        steps_per_iter: 16,
        hidden: vec![32, 16],
        ..TrainConfig::default()
    };
    let venv = lib(VecEnv::new(Arc::new(MachineModel::nominal()), env, cfg.num_envs, 9))?;
    let mut log = lib(throw_core::learner::TrainLogWriter::create(dir.join("train_log.csv")))?;
    let (trainer, _) = lib(train(venv, cfg, 9, |_, row| log.write(row)))?;
    drop(log);
    let ckpt = Checkpoint {
        variant: Variant::Planar,
        iteration: trainer.iterations_done() as u64,
        config_hash: throw_core::learner::sha256(b"acceptance"),
        policy: trainer.policy.clone(),
        normalizer: trainer.normalizer.clone(),
    };
    lib(ckpt.save(dir.join("checkpoint.bin")))?;

    let model = MachineModel::nominal();
    let sweep = SweepConfig {
        distances: vec![8.0, 9.0],
        repeats: 5,
        seed: 9,
        ..SweepConfig::default()
    };
    let records = lib(run_target_sweep(&ckpt, &model, &sweep))?;
    lib(export_report(&impact_statistics(&records), &records, dir))?;

    let m = Arc::new(model);
    let env_cfg = Arc::new(sweep.env_config());
    let controller = env_cfg.controller.build(&m);
    let mut env = ThrowEnv::new(m, env_cfg, controller, 9, 0);
    let mut rows = Vec::new();
    lib(run_episode(&mut env, &ckpt, Some(ThrowTarget::at(8.5, 0.0)), None, Some(&mut rows)))?;
    lib(save_trace(&rows, dir.join("trace.csv")))
}

// AC9: byte-identical outputs across repeated runs.
fn ac9() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().map_err(|e| e.to_string())?;
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        pool.install(|| small_train(&dir))?;
    }
    let files = ["train_log.csv", "checkpoint.bin", "records.csv", "summary.csv", "scatter.csv", "trace.csv"];
    for f in files {
        let a = std::fs::read(tmp.path().join("a").join(f)).map_err(|e| e.to_string())?;
        let b = std::fs::read(tmp.path().join("b").join(f)).map_err(|e| e.to_string())?;
        ensure(a == b, format!("{f} differs between runs"))?;
    }
    Ok(format!("{} identical across two runs", files.join(", ")))
}

fn main() {
    let full = std::env::var("THROW_ACCEPT_FULL").is_ok_and(|v| v != "0" && !v.is_empty());
    // Wall-clock limits; AC1, AC6, AC7 and AC8 also time their own parts.
    let checks: [(&str, fn() -> Check, bool, u64); 9] = [
        ("AC1", ac1, true, 10),
        ("AC2", ac2, true, 5),
        ("AC3", ac3, true, 30),
        ("AC4", ac4, true, 5),
        ("AC5", ac5, true, 300),
        ("AC6", ac6, true, 300),
        ("AC7", ac7, full, 3600 + 600),
        ("AC8", ac8, true, 600),
        ("AC9", ac9, true, 300),
    ];
    let mut failed = 0;
    for (name, check, enabled, limit) in checks {
        if !enabled {
            println!("{name} skip  desk-scale training; set THROW_ACCEPT_FULL=1 to run");
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check);
        let elapsed = start.elapsed();
        let result = match result {
            Ok(Ok(msg)) if elapsed > Duration::from_secs(limit) => Err(format!("{msg}; took {} (limit {limit} s)", secs(elapsed))),
            Ok(r) => r,
            Err(_) => Err("panicked".to_string()),
        };
        match result {
            Ok(msg) => println!("{name} pass  {msg}"),
            Err(msg) => {
                failed += 1;
                println!("{name} FAIL  {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
