//! Allocation environment: observation layout, Top-K sparse projection and a
//! turnover- and sparsity-penalised log reward.

mod episode;
mod portfolio;
mod projection;
mod state;

pub use episode::{run_episode, Episode, PolicyOutput, WeightsHistory};
pub use portfolio::{EnvConfig, EnvData, PortfolioEnv, StepOutcome, StepRecord, NET_FLOOR};
pub use projection::{action_to_weights, top_k_indices, WeightVector};
pub use state::{build_state, EnvState, StateLayout};

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("step called after the episode finished")]
    StepAfterDone,
    #[error("invalid config: {0}")]
    Config(String),
    #[error("non-finite action")]
    NonFiniteAction,
}
