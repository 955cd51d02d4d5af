//! Actor-critic PPO learner built on `ndarray`.

mod adam;
mod checkpoint;
mod gae;
mod mlp;
mod normalizer;
mod policy;
mod ppo;
mod train;

pub use adam::{adam_step, Adam};
pub use checkpoint::{sha256, Checkpoint};
pub use gae::{compute_gae, normalize_advantages};
pub use mlp::{Dense, Mlp, MlpCache};
pub use normalizer::RunningNormalizer;
pub use policy::{gaussian_entropy, gaussian_log_prob, gaussian_policy_sample, ActorCritic};
pub use ppo::{clip_grad_norm, ppo_loss_and_grad, ppo_update, LossParts, LrSchedule, PpoConfig, RolloutBuffer, UpdateStats};
pub use train::{policy_mean_action, train, TrainConfig, TrainLogRow, TrainLogWriter, Trainer};
