//! Cost-adjusted backtesting, performance metrics and strategy comparison.

mod compare;
mod costs;
mod equity;
mod metrics;
pub mod plot;
mod reported;
mod strategy;

pub use compare::{compare, Comparison, ComparisonRow, StrategyResult};
pub use costs::{apply_costs, gross_returns};
pub use equity::{equity_curve, EquityCurve};
pub use metrics::{compute_metrics, MetricsReport};
pub use reported::{ReportedRow, REPORTED_BENCHMARKS, REPORTED_STRATEGIES};
pub use strategy::{run_strategy, StrategyContext, StrategyKind, StrategySpec};

#[derive(Debug, thiserror::Error)]
pub enum BacktestError {
    #[error("length mismatch: {0}")]
    Length(String),
    #[error("net return {value} at period {period} is <= -1; equity would be non-positive")]
    Ruin { period: usize, value: f64 },
    #[error("need at least 2 periods, got {0}")]
    TooFewPeriods(usize),
    #[error("strategy `{strategy}` needs {missing}")]
    MissingInput { strategy: String, missing: String },
    #[error("invalid strategy `{strategy}`: {message}")]
    InvalidStrategy { strategy: String, message: String },
    #[error("strategies evaluated on different ranges: {0}")]
    RangeMismatch(String),
    #[error(transparent)]
    Env(#[from] crate::env::EnvError),
    #[error(transparent)]
    Policy(#[from] crate::ppo::PpoError),
}
