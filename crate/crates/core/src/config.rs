//! Run configuration shared by every command.
//!
//! One TOML file holds the machine path, seed, output directory and one
//! table per workflow. Unknown keys are rejected; every key has a default.
//! The resolved configuration (after command-line overrides, with the model
//! path made absolute) is written next to every output as
//! [`SNAPSHOT_FILE`] and hashed into checkpoints.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::eval::SweepConfig;
use crate::learner::{sha256, TrainConfig};
use crate::model::MachineModel;
use crate::sysid::FitConfig;

pub const SNAPSHOT_FILE: &str = "config.resolved.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RolloutConfig {
    /// Target distance (m); sampled like in training when absent.
    pub distance: Option<f64>,
    /// Target heading (rad from +x).
    pub heading: f64,
    /// RNG stream of the rollout episode.
    pub stream: u64,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        RolloutConfig {
            distance: Some(8.5),
            heading: 0.0,
            stream: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentifyConfig {
    /// Equivalent pendulum length of the logged joint (m); derived from the
    /// machine model when absent.
    pub pendulum_length: Option<f64>,
    pub friction: FitConfig,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        IdentifyConfig {
            pendulum_length: None,
            friction: FitConfig::default(),
        }
    }
}

/// Sweep settings as written in the `[sweep]` table. Environment and seed
/// come from the run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub distances: Vec<f64>,
    pub repeats: usize,
    pub heading: f64,
    pub randomize_start: bool,
    pub start_pose: [f64; 3],
    /// Low-level controller of the evaluation; `env.controller` is used for
    /// its gains.
    pub controller: crate::actuation::ControllerKind,
}

impl Default for SweepSection {
    fn default() -> Self {
        let d = SweepConfig::default();
        SweepSection {
            distances: d.distances,
            repeats: d.repeats,
            heading: d.heading,
            randomize_start: d.randomize_start,
            start_pose: d.start_pose,
            controller: d.controller,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Machine description; the built-in nominal machine when absent.
    /// Relative paths are resolved against the configuration file.
    pub model: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub sweep: SweepSection,
    pub rollout: RolloutConfig,
    pub identify: IdentifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: None,
            seed: 0,
            out: PathBuf::from("runs/default"),
            env: EnvConfig::default(),
            train: TrainConfig::default(),
            sweep: SweepSection::default(),
            rollout: RolloutConfig::default(),
            identify: IdentifyConfig::default(),
        }
    }
}

/// Strip the `key` from a TOML error message such as "unknown field `x`" so
/// that config errors always name a key.
fn toml_key(e: &toml::de::Error) -> String {
    let msg = e.message();
    if let Some(start) = msg.find('`') {
        if let Some(len) = msg[start + 1..].find('`') {
            return msg[start + 1..start + 1 + len].to_string();
        }
    }
    "<file>".into()
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(toml_key(&e), e.to_string().trim_end().to_string()))
    }

    /// Parse and validate; a relative model path is made relative to the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(m) = &cfg.model {
            if m.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.model = Some(base.join(m));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(m) = &self.model {
            if !m.is_file() {
                return Err(Error::config("model", format!("machine file {} does not exist", m.display())));
            }
        }
        self.env.validate()?;
        self.train.validate()?;
        self.sweep_config().validate()?;
        if let Some(d) = self.rollout.distance {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::config("rollout.distance", "must be positive"));
            }
        }
        if let Some(l) = self.identify.pendulum_length {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::config("identify.pendulum_length", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn load_model(&self) -> Result<MachineModel> {
        match &self.model {
            Some(p) => MachineModel::load(p),
            None => Ok(MachineModel::nominal()),
        }
    }

    pub fn sweep_config(&self) -> SweepConfig {
        let s = &self.sweep;
        SweepConfig {
            distances: s.distances.clone(),
            repeats: s.repeats,
            variant: self.env.variant,
            controller: s.controller,
            heading: s.heading,
            seed: self.seed,
            randomize_start: s.randomize_start,
            start_pose: s.start_pose,
            env: self.env.clone(),
        }
    }

    /// Snapshot text: the model path is made absolute so the file reproduces
    /// the run from any working directory.
    pub fn resolved_toml(&self) -> Result<String> {
        let mut c = self.clone();
        if let Some(m) = &c.model {
            c.model = Some(std::fs::canonicalize(m).map_err(|e| Error::io(m, e))?);
        }
        toml::to_string(&c).map_err(|e| Error::Write(e.to_string()))
    }

    /// Hash of the snapshot with `out` cleared: the same experiment written
    /// to two directories hashes the same.
    pub fn hash(&self) -> Result<[u8; 32]> {
        let mut c = self.clone();
        c.out = PathBuf::new();
        Ok(sha256(c.resolved_toml()?.as_bytes()))
    }

    /// Create the output directory and write the snapshot into it.
    pub fn write_snapshot(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(SNAPSHOT_FILE);
        std::fs::write(&path, self.resolved_toml()?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
