//! Actor-critic agent trained with the clipped surrogate objective.

mod checkpoint;
mod gae;
mod mlp;
mod normalize;
mod policy;
mod rollout;
mod train;
mod update;

pub use checkpoint::PolicyCheckpoint;
pub use gae::{compute_gae, compute_gae_with_dones};
pub use mlp::{MlpCache, MlpShape};
pub use normalize::{ObsNormalizer, RewardNormalizer};
pub use policy::{
    gaussian_entropy, gaussian_log_prob, policy_eval, sample_action, ActionMode, PolicyEval, PolicyParams,
    LOG_STD_MAX, LOG_STD_MIN,
};
pub use rollout::Rollout;
pub use train::{curves_csv, init_policy, train_policy, train_ppo, CurvePoint, TrainedPolicy};
pub use update::{
    clipped_objective, normalize_advantages, ppo_loss, ppo_update, Batch, EpochStats, LossParts, PpoConfig,
    UpdateStats,
};

use crate::env::EnvError;

#[derive(Debug, thiserror::Error)]
pub enum PpoError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("rollout has no advantages; run GAE first")]
    MissingAdvantages,
    #[error("non-finite loss in update epoch {update}")]
    Diverged { update: usize, stats: Vec<EpochStats> },
    #[error("training diverged (non-finite loss) at timestep {timestep}")]
    TrainingDiverged { timestep: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
}
