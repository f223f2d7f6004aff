//! Hybrid portfolio allocation engine.
//!
//! Weekly log-returns are forecast per asset by a univariate LSTM; the
//! forecasts enter the observation of an actor-critic agent trained with the
//! clipped surrogate objective. Actor logits are mapped to long-only sparse
//! weights by a Top-K softmax projection. The [`backtest`] module scores the
//! resulting weights (and a set of baselines) net of turnover costs.
//!
//! Module map:
//!
//! - [`data`]: ingestion, calendar alignment, weekly resampling, log-returns,
//!   z-score scaling, chronological splits.
//! - [`forecast`]: LSTM with exact backpropagation through time, Adam
//!   training with early stopping, walk-forward prediction.
//! - [`env`]: the allocation MDP (state layout, Top-K projection, reward).
//! - [`ppo`]: Gaussian MLP actor-critic, GAE, observation normalization,
//!   clipped-surrogate updates.
//! - [`backtest`]: costs, equity curves, metrics, strategies, comparisons.
//! - [`cli`]: config-driven orchestration behind the `hybrid-alloc` binary.

pub mod backtest;
pub mod cli;
pub mod data;
pub mod env;
pub mod forecast;
pub mod io;
pub mod optim;
pub mod ppo;
pub mod seed;
pub mod synth;

pub use backtest::{EquityCurve, MetricsReport, StrategyKind, StrategySpec};
pub use data::{PriceTable, ReturnMatrix, Scaler, SplitPlan};
pub use env::{EnvConfig, EnvState, PortfolioEnv, StepRecord, WeightVector};
pub use forecast::{ForecastMatrix, ForecasterConfig, ForecasterParams};
pub use ppo::{ObsNormalizer, PolicyParams, PpoConfig, Rollout};
