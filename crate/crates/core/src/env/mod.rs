//! Throwing environment: targets, observations, rewards, the released
//! payload and a batched wrapper for training.

mod config;
mod episode;
mod observation;
mod payload;
mod reward;
mod throw_env;
mod trace;
mod vec_env;

pub use config::{AssistConfig, EnvConfig, FrictionRandomization, ObservationNoise, RewardWeights, Variant};
pub use episode::{
    hanging_passive, reset, sample_start, sample_target, target_errors, EpisodeProgress, ThrowTarget, COMMAND_DIM,
    HISTORY,
};
pub use observation::build_observation;
pub use payload::{ground_time, spawn_payload, step_payload, BallState};
pub use reward::{check_termination, compute_reward, RewardTerms, Termination};
pub use throw_env::{apply_action, release_level, ActionOutcome, EpisodeSummary, StepOutcome, ThrowEnv};
pub use trace::{save_trace, write_trace, TraceRow};
pub use vec_env::{VecEnv, VecStep};
