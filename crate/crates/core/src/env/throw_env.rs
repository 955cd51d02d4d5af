use std::sync::Arc;

use nalgebra::{Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{EnvConfig, Variant};
use super::episode::{reset, target_errors, EpisodeProgress, ThrowTarget, COMMAND_DIM};
use super::observation::build_observation;
use super::payload::{spawn_payload, step_payload, BallState};
use super::reward::{check_termination, compute_reward, RewardTerms, Termination};
use super::trace::TraceRow;
use crate::actuation::{
    randomize_velocity_command, DelayLine, LowLevelController, ReleasePoll, VelocityCommand,
};
use crate::dynamics::{forward_kinematics, gripper_velocity, MachineState, PassiveFriction};
use crate::error::{Error, Result};
use crate::model::{MachineModel, NUM_ACTUATED};

/// Squash the raw release action into `[0, 1]`.
pub fn release_level(raw: f64) -> f64 {
    0.5 * (raw.tanh() + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionOutcome {
    pub command: VelocityCommand,
    /// Commands as seen by the reward and the next observation: clipped
    /// normalized joint velocities and the release level.
    pub u: [f64; COMMAND_DIM],
    pub trigger: bool,
    pub assisted: bool,
}

/// Map a policy action to joint-velocity references and the release decision.
///
/// `gripper` holds the current 3D gripper-to-target distance and gripper speed,
/// used by the release assistance.
pub fn apply_action<R: Rng + ?Sized>(
    action: &[f64],
    cfg: &EnvConfig,
    model: &MachineModel,
    opened: bool,
    gripper: (f64, f64),
    time: f64,
    rng: &mut R,
) -> Result<ActionOutcome> {
    let variant = cfg.variant;
    if action.len() != variant.act_dim() {
        return Err(Error::Shape(format!(
            "{variant} action has {} entries, expected {}",
            action.len(),
            variant.act_dim()
        )));
    }
    let offset = NUM_ACTUATED + 1 - variant.act_dim();
    let mut u = [0.0; COMMAND_DIM];
    for (k, a) in action[..action.len() - 1].iter().enumerate() {
        u[offset + k] = if a.is_nan() { 0.0 } else { a.clamp(-1.0, 1.0) };
    }
    let level = release_level(action[action.len() - 1]);
    let mut trigger = !opened && level > cfg.release_threshold;
    let mut assisted = false;
    let a = &cfg.assist;
    if !opened && !trigger && a.enabled && gripper.0 < a.distance && gripper.1 < a.speed {
        let draw: f64 = rng.random();
        if draw < a.probability {
            trigger = true;
            assisted = true;
        }
    }
    u[COMMAND_DIM - 1] = if assisted { 1.0 } else { level };
    let dq_ref = Vector4::from_fn(|i, _| u[i] * model.joint(i).velocity_limit);
    Ok(ActionOutcome {
        command: VelocityCommand::new(dq_ref, time),
        u,
        trigger,
        assisted,
    })
}

/// Summary of a finished episode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeSummary {
    pub termination: Termination,
    pub episode_return: f64,
    pub length: usize,
    pub target: ThrowTarget,
    pub impact: Option<Vector3<f64>>,
    /// Simulation step at which the payload left the gripper.
    pub release_step: Option<u64>,
}

impl EpisodeSummary {
    pub fn impact_error(&self) -> Option<f64> {
        self.impact.map(|p| (p - self.target.position).norm())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub terms: RewardTerms,
    pub termination: Termination,
    pub triggered: bool,
    pub released: bool,
}

/// One throwing environment with its own RNG stream, controller and delay line.
#[derive(Clone, Debug)]
pub struct ThrowEnv {
    model: Arc<MachineModel>,
    loaded: Option<Arc<MachineModel>>,
    cfg: Arc<EnvConfig>,
    controller: LowLevelController,
    delay: DelayLine,
    rng: ChaCha8Rng,
    pub state: MachineState,
    pub target: ThrowTarget,
    pub ball: BallState,
    pub progress: EpisodeProgress,
    pub friction: PassiveFriction,
    sim_step: u64,
    episode_return: f64,
    release_step: Option<u64>,
}

impl ThrowEnv {
    /// The environment starts in a placeholder state; call [`ThrowEnv::reset`].
    pub fn new(
        model: Arc<MachineModel>,
        cfg: Arc<EnvConfig>,
        controller: LowLevelController,
        seed: u64,
        stream: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let loaded = (cfg.held_payload_mass > 0.0).then(|| Arc::new(model.with_held_payload(cfg.held_payload_mass)));
        let state = MachineState::at_rest(model.clamp_to_limits(&Default::default()));
        let target = ThrowTarget::at(model.static_reach(), 0.0);
        let progress = EpisodeProgress::new(&state, &target, &model);
        ThrowEnv {
            delay: DelayLine::new(cfg.delay, cfg.dt),
            friction: cfg.friction,
            model,
            loaded,
            cfg,
            controller,
            rng,
            state,
            target,
            ball: BallState::default(),
            progress,
            sim_step: 0,
            episode_return: 0.0,
            release_step: None,
        }
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn model(&self) -> &MachineModel {
        &self.model
    }

    pub fn variant(&self) -> Variant {
        self.cfg.variant
    }

    pub fn sim_step(&self) -> u64 {
        self.sim_step
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn active_model(&self) -> &MachineModel {
        match &self.loaded {
            Some(m) if !self.ball.released => m,
            _ => &self.model,
        }
    }

    /// Start a new episode. `target` overrides the sampled target.
    pub fn reset(&mut self, target: Option<ThrowTarget>) -> Result<Vec<f64>> {
        let (state, target, progress) = reset(&mut self.rng, &self.model, &self.cfg, target)?;
        self.state = state;
        self.target = target;
        self.progress = progress;
        self.ball = BallState::default();
        self.delay.reset();
        self.controller.reset();
        self.sim_step = 0;
        self.episode_return = 0.0;
        self.release_step = None;
        self.friction = self.cfg.friction;
        let fr = &self.cfg.friction_randomization;
        if fr.enabled {
            let [lo, hi] = fr.scale_range;
            for f in self.friction.iter_mut() {
                let s = self.rng.random_range(lo..=hi);
                *f = f.scaled(s);
            }
        }
        Ok(self.observe())
    }

    /// Position scored against the target: the ball once released, the
    /// gripper center before.
    pub fn scored_position(&self) -> Vector3<f64> {
        if self.ball.released {
            self.ball.position
        } else {
            forward_kinematics(&self.model, &self.state.q).position
        }
    }

    pub fn observe(&mut self) -> Vec<f64> {
        let errors = target_errors(&self.target, &self.scored_position());
        build_observation(
            &self.model,
            &self.progress,
            &self.target,
            errors,
            self.cfg.variant,
            &self.cfg.observation_noise,
            &mut self.rng,
        )
    }

    fn poll_release(&mut self) {
        if self.delay.poll(self.sim_step) == ReleasePoll::Fire {
            self.ball = spawn_payload(&self.model, &self.state);
            self.release_step = Some(self.sim_step);
        }
    }

    pub fn summary(&self, termination: Termination) -> EpisodeSummary {
        EpisodeSummary {
            termination,
            episode_return: self.episode_return,
            length: self.progress.step,
            target: self.target,
            impact: self.ball.impact_point(),
            release_step: self.release_step,
        }
    }

    /// One control step: apply the action, run `decimation` simulation steps
    /// and score the result. Does not reset on termination.
    pub fn step(&mut self, action: &[f64], mut trace: Option<&mut Vec<TraceRow>>) -> Result<StepOutcome> {
        let cfg = Arc::clone(&self.cfg);
        let best = (self.progress.best_err_2d, self.progress.best_err_3d);
        let pose = forward_kinematics(&self.model, &self.state.q).position;
        let speed = gripper_velocity(&self.model, &self.state.q, &self.state.dq).norm();
        let dist = (self.target.position - pose).norm();
        let time = self.sim_step as f64 * cfg.dt;
        let act = apply_action(action, &cfg, &self.model, self.progress.opened, (dist, speed), time, &mut self.rng)?;
        let mut command = act.command;
        if cfg.command_noise_enabled {
            command = randomize_velocity_command(&command, &mut self.rng, &cfg.command_noise, &self.model);
        }
        if cfg.variant == Variant::Planar {
            command.dq_ref[0] = 0.0;
        }

        let released_before = self.ball.released;
        let first_row = trace.as_ref().map_or(0, |t| t.len());
        let mut pending: Vec<&'static str> = Vec::new();
        if act.trigger {
            self.progress.opened = true;
            self.delay.push(self.sim_step, &mut self.rng);
            pending.push(if act.assisted { "release_command_assisted" } else { "release_command" });
            let was = self.ball.released;
            self.poll_release();
            if !was && self.ball.released {
                pending.push("release");
            }
        }

        let mut termination = Termination::Running;
        for _ in 0..cfg.decimation {
            let model = match &self.loaded {
                Some(m) if !self.ball.released => Arc::clone(m),
                _ => Arc::clone(&self.model),
            };
            match self.controller.step(&model, &self.state, &command, &self.friction, cfg.dt) {
                Ok(r) => self.state = r.state,
                Err(Error::Divergence(_)) | Err(Error::SingularInertia) => {
                    termination = Termination::Diverged;
                    break;
                }
                Err(e) => return Err(e),
            }
            self.sim_step += 1;
            let impacted_before = self.ball.impacted;
            if self.ball.in_flight() {
                self.ball = step_payload(&self.ball, self.model.gravity, cfg.dt);
            }
            let was = self.ball.released;
            self.poll_release();
            if !was && self.ball.released {
                pending.push("release");
            }
            if self.ball.impacted && !impacted_before {
                pending.push("impact");
            }
            if let Some(t) = trace.as_deref_mut() {
                t.push(TraceRow::sample(self, Some(&command), pending.join(";")));
            }
            pending.clear();
            termination =
                check_termination(self.active_model(), &self.state, &self.ball, 0, usize::MAX, cfg.terminate_on_limits);
            if termination.is_done() {
                break;
            }
        }

        self.progress.step += 1;
        if !termination.is_done() && self.progress.step >= cfg.max_steps {
            termination = Termination::Timeout;
        }
        self.progress.push_state(&self.state);
        let position = self.scored_position();
        let terms = compute_reward(
            cfg.weights(),
            best,
            &self.target,
            &position,
            &act.u,
            &self.progress.prev_command,
            self.progress.opened,
            termination,
        );
        let (e2, e3) = target_errors(&self.target, &position);
        self.progress.best_err_2d = best.0.min(e2);
        self.progress.best_err_3d = best.1.min(e3);
        self.progress.prev_command = act.u;
        self.episode_return += terms.total;

        if let Some(t) = trace {
            for row in &mut t[first_row..] {
                row.reward = Some(terms);
            }
        }
        Ok(StepOutcome {
            observation: self.observe(),
            reward: terms.total,
            terms,
            termination,
            triggered: act.trigger,
            released: !released_before && self.ball.released,
        })
    }
}
