//! Univariate LSTM return forecaster.

mod checkpoint;
mod lstm;
mod train;
mod walk;

pub use checkpoint::ForecasterCheckpoint;
pub use lstm::{loss_and_gradients, lstm_forward, ForecasterParams, ForwardMode, ForwardPass};
pub use train::{
    build_windows, train_forecaster, train_forecasters, EarlyStopping, EpochLoss, ForecasterConfig, StopDecision,
    TrainedForecaster,
};
pub use walk::{predict_rows, walk_forward_predict, ForecastMatrix};

#[derive(Debug, thiserror::Error)]
pub enum ForecastError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite input at position {0}")]
    NonFiniteInput(usize),
    #[error("non-finite loss at epoch {epoch} (training diverged)")]
    Diverged { epoch: usize },
    #[error("series too short: {len} values cannot form training and validation windows of lookback {lookback}")]
    SeriesTooShort { len: usize, lookback: usize },
    #[error("insufficient history: first prediction row {first_row} needs {lookback} prior rows")]
    InsufficientHistory { first_row: usize, lookback: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid config: {0}")]
    Config(String),
}
