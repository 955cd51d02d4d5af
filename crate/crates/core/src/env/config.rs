use serde::{Deserialize, Serialize};

use crate::actuation::{CommandNoise, ControllerConfig, DelayConfig};
use crate::dynamics::{FrictionParams, SIM_DT};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Planar throw: the cabin turn is not commanded and the target lies on
    /// the downrange (+x) axis.
    #[serde(rename = "2d")]
    Planar,
    /// Full throw including cabin rotation.
    #[serde(rename = "3d")]
    Spatial,
}

impl Variant {
    pub fn obs_dim(self) -> usize {
        match self {
            Variant::Planar => 56,
            Variant::Spatial => 65,
        }
    }

    pub fn act_dim(self) -> usize {
        match self {
            Variant::Planar => 4,
            Variant::Spatial => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Planar => "2d",
            Variant::Spatial => "3d",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardWeights {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub b1: f64,
    pub b2: f64,
    pub p_term: f64,
    pub w_term: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            c1: 10.0,
            c2: 1.0,
            c3: 0.05,
            c4: 0.01,
            b1: 0.5,
            b2: 0.5,
            p_term: -10.0,
            w_term: 20.0,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self, key: &str) -> Result<()> {
        let all = [self.c1, self.c2, self.c3, self.c4, self.b1, self.b2, self.p_term, self.w_term];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(key, "weights must be finite"));
        }
        if [self.c1, self.c2, self.c3, self.c4, self.w_term].iter().any(|v| *v < 0.0) {
            return Err(Error::config(key, "c1..c4 and w_term must be >= 0"));
        }
        if self.b1 <= 0.0 || self.b2 <= 0.0 {
            return Err(Error::config(key, "b1 and b2 must be > 0"));
        }
        if self.p_term >= 0.0 {
            return Err(Error::config(key, "p_term must be < 0"));
        }
        Ok(())
    }
}

/// Release assistance: near the target and slow, the release command is
/// replaced by a constant release with a small per-step probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssistConfig {
    pub enabled: bool,
    pub distance: f64,
    pub speed: f64,
    pub probability: f64,
}

impl Default for AssistConfig {
    fn default() -> Self {
        AssistConfig {
            enabled: true,
            distance: 1.5,
            speed: 0.5,
            probability: 0.05,
        }
    }
}

/// Standard deviations of additive Gaussian observation noise per group.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservationNoise {
    pub joint_position: f64,
    pub joint_velocity: f64,
    pub gripper_position: f64,
    pub gripper_velocity: f64,
}

impl ObservationNoise {
    pub fn is_zero(&self) -> bool {
        self.joint_position == 0.0
            && self.joint_velocity == 0.0
            && self.gripper_position == 0.0
            && self.gripper_velocity == 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrictionRandomization {
    pub enabled: bool,
    /// Range of the per-episode multiplicative factor on both parameters.
    pub scale_range: [f64; 2],
}

impl Default for FrictionRandomization {
    fn default() -> Self {
        FrictionRandomization {
            enabled: false,
            scale_range: [0.5, 1.5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub variant: Variant,
    /// Minimum target radius as a fraction of the static reach.
    pub r_min_factor: f64,
    /// Maximum target radius as a fraction of the static reach.
    pub r_max_factor: f64,
    pub max_steps: usize,
    pub decimation: usize,
    pub dt: f64,
    pub release_threshold: f64,
    pub terminate_on_limits: bool,
    pub reset_attempts: usize,
    pub held_payload_mass: f64,
    pub assist: AssistConfig,
    pub delay: DelayConfig,
    pub controller: ControllerConfig,
    /// Pitch and roll friction.
    pub friction: [FrictionParams; 2],
    pub friction_randomization: FrictionRandomization,
    pub command_noise_enabled: bool,
    pub command_noise: CommandNoise,
    pub observation_noise: ObservationNoise,
    pub reward_2d: RewardWeights,
    pub reward_3d: RewardWeights,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            variant: Variant::Spatial,
            r_min_factor: 0.6,
            r_max_factor: 1.45,
            max_steps: 100,
            decimation: 8,
            dt: SIM_DT,
            release_threshold: 0.9,
            terminate_on_limits: true,
            reset_attempts: 10_000,
            held_payload_mass: 0.0,
            assist: AssistConfig::default(),
            delay: DelayConfig::default(),
            controller: ControllerConfig::default(),
            friction: [FrictionParams::default(); 2],
            friction_randomization: FrictionRandomization::default(),
            command_noise_enabled: false,
            command_noise: CommandNoise::default(),
            observation_noise: ObservationNoise::default(),
            reward_2d: RewardWeights::default(),
            reward_3d: RewardWeights::default(),
        }
    }
}

impl EnvConfig {
    pub fn weights(&self) -> &RewardWeights {
        match self.variant {
            Variant::Planar => &self.reward_2d,
            Variant::Spatial => &self.reward_3d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min_factor > 0.0 && self.r_min_factor < self.r_max_factor) {
            return Err(Error::config("env.r_min_factor", "need 0 < r_min_factor < r_max_factor"));
        }
        if !self.r_max_factor.is_finite() {
            return Err(Error::config("env.r_max_factor", "must be finite"));
        }
        if self.max_steps == 0 {
            return Err(Error::config("env.max_steps", "must be >= 1"));
        }
        if self.decimation == 0 {
            return Err(Error::config("env.decimation", "must be >= 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("env.dt", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.release_threshold) {
            return Err(Error::config("env.release_threshold", "must lie in [0, 1)"));
        }
        if self.reset_attempts == 0 {
            return Err(Error::config("env.reset_attempts", "must be >= 1"));
        }
        if !(self.held_payload_mass >= 0.0 && self.held_payload_mass.is_finite()) {
            return Err(Error::config("env.held_payload_mass", "must be >= 0"));
        }
        let a = &self.assist;
        if !(a.distance >= 0.0 && a.speed >= 0.0 && (0.0..=1.0).contains(&a.probability)) {
            return Err(Error::config("env.assist", "distance, speed >= 0 and probability in [0, 1]"));
        }
        if !self.delay.is_valid() {
            return Err(Error::config("env.delay", "mean and std must be finite and >= 0"));
        }
        if self.friction.iter().any(|f| !f.is_valid()) {
            return Err(Error::config("env.friction", "upsilon and eta must be finite and >= 0"));
        }
        let [lo, hi] = self.friction_randomization.scale_range;
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::config("env.friction_randomization.scale_range", "need 0 <= lo <= hi"));
        }
        if !self.command_noise.is_valid() {
            return Err(Error::config("env.command_noise", "scale_range must contain 1 and additive_std >= 0"));
        }
        let n = &self.observation_noise;
        if [n.joint_position, n.joint_velocity, n.gripper_position, n.gripper_velocity]
            .iter()
            .any(|v| !(*v >= 0.0 && v.is_finite()))
        {
            return Err(Error::config("env.observation_noise", "standard deviations must be >= 0"));
        }
        self.controller.validate()?;
        self.reward_2d.validate("env.reward_2d")?;
        self.reward_3d.validate("env.reward_3d")
    }
}
