use nalgebra::Vector4;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use throw_core::actuation::{ControllerConfig, ControllerKind, DelayConfig, DelayLine, ReleasePoll, VelocityCommand};
use throw_core::dynamics::{forward_dynamics, FrictionParams, MachineState, SIM_DT};
use throw_core::{JointVector, MachineModel};

fn start() -> MachineState {
    let mut q = JointVector::zeros();
    q[1] = 0.2;
    q[2] = -0.7;
    q[3] = 0.3;
    q[4] = -std::f64::consts::FRAC_PI_2 - (q[1] + q[2]);
    MachineState::at_rest(q)
}

/// Boom velocity after each step of a 0.3 rad/s step reference.
fn boom_step_response(kind: ControllerKind, steps: usize) -> Vec<f64> {
    let model = MachineModel::nominal();
    let cfg = ControllerConfig {
        kind,
        ..ControllerConfig::default()
    };
    let mut ctrl = cfg.build(&model);
    let mut s = start();
    let cmd = VelocityCommand::new(Vector4::new(0.0, 0.3, 0.0, 0.0), 0.0);
    let f = [FrictionParams::default(); 2];
    (0..steps)
        .map(|_| {
            s = ctrl.step(&model, &s, &cmd, &f, SIM_DT).unwrap().state;
            s.dq[1]
        })
        .collect()
}

fn settling_step(v: &[f64], target: f64, band: f64) -> usize {
    v.iter().rposition(|x| ((x - target) / target).abs() > band).map_or(0, |k| k + 1)
}

#[test]
fn id_boom_step_tracks_within_two_tenths_of_a_second() {
    let v = boom_step_response(ControllerKind::Id, 20);
    assert!(((v[19] - 0.3) / 0.3).abs() < 0.05, "{}", v[19]);
}

#[test]
fn pid_settles_slower_than_id() {
    let id = boom_step_response(ControllerKind::Id, 150);
    let pid = boom_step_response(ControllerKind::Pid, 150);
    let (ts_id, ts_pid) = (settling_step(&id, 0.3, 0.05), settling_step(&pid, 0.3, 0.05));
    assert!(ts_pid > ts_id, "id {ts_id} pid {ts_pid}");
    let t = ts_pid as f64 * SIM_DT;
    assert!(t > 0.2 && t < 0.5, "pid settles in {t} s");
    let peak = pid.iter().cloned().fold(f64::MIN, f64::max);
    assert!(peak < 0.33, "overshoot {peak}");
    assert!(id.iter().zip(&pid).any(|(a, b)| (a - b).abs() > 1e-3));
}

#[test]
fn id_closure_at_every_substep() {
    let model = MachineModel::nominal();
    let mut ctrl = ControllerConfig::default().build(&model);
    let mut s = start();
    let f = [FrictionParams::default(); 2];
    let cmd = VelocityCommand::new(Vector4::new(0.2, 0.3, -0.4, 0.2), 0.0);
    for _ in 0..80 {
        let r = ctrl.step(&model, &s, &cmd, &f, SIM_DT).unwrap();
        let ddq = forward_dynamics(&model, &s.q, &s.dq, &r.tau).unwrap();
        let want = (cmd.dq_ref - s.dq.fixed_rows::<4>(0)) * 20.0;
        assert!((ddq.fixed_rows::<4>(0) - want).abs().max() < 1e-6);
        s = r.state;
    }
}

#[test]
fn randomized_delay_statistics() {
    let cfg = DelayConfig {
        randomize: true,
        ..DelayConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 10_000;
    let d: Vec<f64> = (0..n).map(|_| cfg.sample(&mut rng)).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let std = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    assert!((mean - 0.258).abs() < 1e-3, "{mean}");
    assert!((std - 0.015).abs() < 1.5e-3, "{std}");
    assert!(d.iter().all(|x| (x - 0.258).abs() <= 0.045 + 1e-12));
}

#[test]
fn release_is_reported_once() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut line = DelayLine::new(
        DelayConfig {
            randomize: true,
            ..DelayConfig::default()
        },
        SIM_DT,
    );
    line.push(0, &mut rng);
    let fires = (0..200).filter(|&k| line.poll(k) == ReleasePoll::Fire).count();
    assert_eq!(fires, 1);
}
