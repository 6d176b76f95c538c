//! The RL loop: PPO with GAE, reward mixing, mirror-symmetry regularization,
//! scheduled constraint penalties and alternating discriminator updates.

mod config;
mod constraint;
mod gae;
mod policy;
mod ppo;
mod rollout;
mod runner;
mod symmetry;

pub use config::{Ablation, TrainConfig};
pub use constraint::{constraint_penalty, schedule_lambda, ConstraintLedger};
pub use gae::{gae, normalize_in_place};
pub use policy::{PolicyGrad, PolicyParams, OBS_DIM};
pub use ppo::{mix_reward, ppo_objective, ppo_surrogate, MiniBatch, PpoReport};
pub use rollout::{collect_rollouts, EnvInstance, RolloutBuffer};
pub use runner::{
    train_iteration, IterationMetrics, PriorSnapshot, ReplayReservoir, TrainState, METRIC_COLUMNS,
};
pub use symmetry::{mirror_obs, symmetry_loss};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite loss in {context}")]
    NonFinite { context: &'static str },
    #[error("prior error: {0}")]
    Prior(#[from] crate::prior::PriorError),
    #[error("empty rollout buffer")]
    EmptyBuffer,
}
