use std::sync::Arc;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::policy::Policy;
use crate::actuation::ControllerKind;
use crate::dynamics::{check_collision, MachineState};
use crate::env::{hanging_passive, EnvConfig, EpisodeProgress, EpisodeSummary, Termination, ThrowEnv, ThrowTarget, TraceRow, Variant};
use crate::error::{Error, Result};
use crate::model::{JointVector, MachineModel, NUM_ACTUATED};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Target distances from the cabin axis (m).
    pub distances: Vec<f64>,
    pub repeats: usize,
    pub variant: Variant,
    pub controller: ControllerKind,
    /// Downrange direction (rad from +x), fixed for the sweep.
    pub heading: f64,
    pub seed: u64,
    /// Random collision-free start per episode; otherwise every episode starts
    /// from `start_pose`.
    pub randomize_start: bool,
    /// Boom, dipper and telescope positions of the fixed start.
    pub start_pose: [f64; 3],
    /// Environment settings; `variant` and `controller` above take precedence.
    pub env: EnvConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            distances: (0..6).map(|k| 7.5 + 0.5 * k as f64).collect(),
            repeats: 200,
            variant: Variant::Planar,
            controller: ControllerKind::Pid,
            heading: 0.0,
            seed: 0,
            randomize_start: true,
            start_pose: [0.6, -1.2, 0.4],
            env: EnvConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::config("sweep.repeats", "must be >= 1"));
        }
        if self.distances.is_empty() {
            return Err(Error::config("sweep.distances", "must not be empty"));
        }
        if self.distances.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::config("sweep.distances", "distances must be positive"));
        }
        if !self.heading.is_finite() {
            return Err(Error::config("sweep.heading", "must be finite"));
        }
        self.env_config().validate()
    }

    /// Environment configuration with the sweep overrides applied.
    pub fn env_config(&self) -> EnvConfig {
        let mut env = self.env.clone();
        env.variant = self.variant;
        env.controller.kind = self.controller;
        env
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Landed,
    NoRelease,
    /// Collision, joint-limit contact or a diverged simulation.
    Collided,
    /// Released but still in flight when the episode ran out of steps.
    Timeout,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [Outcome::Landed, Outcome::NoRelease, Outcome::Collided, Outcome::Timeout];

    pub fn name(self) -> &'static str {
        match self {
            Outcome::Landed => "landed",
            Outcome::NoRelease => "no_release",
            Outcome::Collided => "collided",
            Outcome::Timeout => "timeout",
        }
    }

    pub fn from_summary(s: &EpisodeSummary) -> Self {
        match s.termination {
            Termination::Landed => Outcome::Landed,
            Termination::Collided | Termination::Limits | Termination::Diverged => Outcome::Collided,
            Termination::Timeout | Termination::Running => {
                if s.release_step.is_some() {
                    Outcome::Timeout
                } else {
                    Outcome::NoRelease
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImpactRecord {
    pub distance: f64,
    pub repeat: usize,
    /// RNG stream of the episode under the sweep seed.
    pub episode_seed: u64,
    pub outcome: Outcome,
    pub target: Vector3<f64>,
    /// Landed records only.
    pub impact: Option<Vector3<f64>>,
    /// Impact minus target along the sweep heading (m).
    pub downrange_error: Option<f64>,
    /// Impact minus target perpendicular to the heading, positive to the left.
    pub crossrange_error: Option<f64>,
    pub release_step: Option<u64>,
}

impl ImpactRecord {
    pub fn from_summary(distance: f64, repeat: usize, episode_seed: u64, heading: f64, s: &EpisodeSummary) -> Self {
        let outcome = Outcome::from_summary(s);
        let impact = if outcome == Outcome::Landed { s.impact } else { None };
        let (down, cross) = (Vector3::new(heading.cos(), heading.sin(), 0.0), Vector3::new(-heading.sin(), heading.cos(), 0.0));
        let d = impact.map(|p| p - s.target.position);
        ImpactRecord {
            distance,
            repeat,
            episode_seed,
            outcome,
            target: s.target.position,
            impact,
            downrange_error: d.map(|d| d.dot(&down)),
            crossrange_error: d.map(|d| d.dot(&cross)),
            release_step: s.release_step,
        }
    }
}

/// Fixed start: the cabin faces `heading`, boom, dipper and telescope are at
/// `pose` and the gripper hangs.
pub fn fixed_start(model: &MachineModel, heading: f64, pose: [f64; 3]) -> Result<MachineState> {
    let mut q = JointVector::zeros();
    q[0] = heading;
    for (i, p) in (1..NUM_ACTUATED).zip(pose) {
        let j = model.joint(i);
        if !(p >= j.lower && p <= j.upper) {
            return Err(Error::config("sweep.start_pose", format!("{} = {p} is outside its limits", j.name)));
        }
        q[i] = p;
    }
    let (pitch, roll) = hanging_passive(&q);
    q[4] = pitch;
    q[5] = roll;
    if check_collision(model, &q).any() {
        return Err(Error::config("sweep.start_pose", "start configuration collides"));
    }
    Ok(MachineState::at_rest(q))
}

/// Run one episode to termination under `policy`.
pub fn run_episode<P: Policy + ?Sized>(
    env: &mut ThrowEnv,
    policy: &P,
    target: Option<ThrowTarget>,
    start: Option<MachineState>,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<EpisodeSummary> {
    policy.check(env.variant())?;
    let mut obs = env.reset(target)?;
    if let Some(s) = start {
        env.state = s;
        env.progress = EpisodeProgress::new(&s, &env.target, env.model());
        obs = env.observe();
    }
    if let Some(t) = trace.as_deref_mut() {
        t.push(TraceRow::sample(env, None, String::new()));
    }
    let mut step = 0;
    loop {
        let action = policy.act(&obs, step)?;
        let out = env.step(&action, trace.as_deref_mut())?;
        if out.termination.is_done() {
            return Ok(env.summary(out.termination));
        }
        obs = out.observation;
        step += 1;
    }
}

/// Every (distance, repeat) pair as one independent episode. Records come
/// back sorted by distance, then repeat, regardless of thread count.
pub fn run_target_sweep<P: Policy + ?Sized>(
    policy: &P,
    model: &MachineModel,
    cfg: &SweepConfig,
) -> Result<Vec<ImpactRecord>> {
    cfg.validate()?;
    policy.check(cfg.variant)?;
    let env_cfg = Arc::new(cfg.env_config());
    let model = Arc::new(model.clone());
    let controller = env_cfg.controller.build(&model);
    let start = if cfg.randomize_start {
        None
    } else {
        Some(fixed_start(&model, cfg.heading, cfg.start_pose)?)
    };
    let mut order: Vec<(usize, f64)> = cfg.distances.iter().copied().enumerate().collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let jobs: Vec<(f64, usize, u64)> = order
        .iter()
        .flat_map(|&(k, d)| (0..cfg.repeats).map(move |r| (d, r, (k * cfg.repeats + r) as u64)))
        .collect();
    jobs.par_iter()
        .map(|&(distance, repeat, stream)| {
            let mut env = ThrowEnv::new(Arc::clone(&model), Arc::clone(&env_cfg), controller.clone(), cfg.seed, stream);
            let target = ThrowTarget::at(distance, cfg.heading);
            let summary = run_episode(&mut env, policy, Some(target), start, None)?;
            Ok(ImpactRecord::from_summary(distance, repeat, stream, cfg.heading, &summary))
        })
        .collect()
}
