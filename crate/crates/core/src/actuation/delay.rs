//! Gripper opening delay between the release command and the moment the
//! payload is actually free.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DelayConfig {
    /// Mean opening delay (s).
    pub mean: f64,
    /// Standard deviation of the delay (s), used when `randomize` is set.
    pub std: f64,
    pub randomize: bool,
}

impl Default for DelayConfig {
    fn default() -> Self {
        DelayConfig {
            mean: 0.258,
            std: 0.015,
            randomize: false,
        }
    }
}

impl DelayConfig {
    pub fn is_valid(&self) -> bool {
        self.mean >= 0.0 && self.std >= 0.0 && self.mean.is_finite() && self.std.is_finite()
    }

    /// Draw one delay. Randomized delays follow a normal distribution
    /// truncated at three standard deviations (by rejection) and floored at 0.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if !self.randomize || self.std == 0.0 {
            return self.mean;
        }
        let normal = Normal::new(self.mean, self.std).expect("validated delay distribution");
        loop {
            let d = normal.sample(rng);
            if (d - self.mean).abs() <= 3.0 * self.std {
                return d.max(0.0);
            }
        }
    }

    /// Delay rounded to whole simulation steps.
    pub fn steps(delay: f64, dt: f64) -> u64 {
        (delay / dt).round() as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReleasePoll {
    /// No release has been commanded.
    Idle,
    /// Commanded, waiting for the gripper to open.
    Pending,
    /// The gripper opens on this step.
    Fire,
    /// The gripper opened on an earlier step.
    Released,
}

/// One pending release per episode, counted in simulation steps.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayLine {
    config: DelayConfig,
    dt: f64,
    effective_step: Option<u64>,
    fired: bool,
}

impl DelayLine {
    pub fn new(config: DelayConfig, dt: f64) -> Self {
        DelayLine {
            config,
            dt,
            effective_step: None,
            fired: false,
        }
    }

    pub fn reset(&mut self) {
        self.effective_step = None;
        self.fired = false;
    }

    pub fn is_triggered(&self) -> bool {
        self.effective_step.is_some()
    }

    /// Register a release command at simulation step `step`. A second
    /// trigger in the same episode is ignored; returns whether this call
    /// armed the line.
    pub fn push<R: Rng + ?Sized>(&mut self, step: u64, rng: &mut R) -> bool {
        if self.effective_step.is_some() {
            return false;
        }
        let delay = self.config.sample(rng);
        self.effective_step = Some(step + DelayConfig::steps(delay, self.dt));
        true
    }

    pub fn poll(&mut self, step: u64) -> ReleasePoll {
        match self.effective_step {
            None => ReleasePoll::Idle,
            Some(_) if self.fired => ReleasePoll::Released,
            Some(at) if step >= at => {
                self.fired = true;
                ReleasePoll::Fire
            }
            Some(_) => ReleasePoll::Pending,
        }
    }

    pub fn effective_step(&self) -> Option<u64> {
        self.effective_step
    }
}
