use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lstm::{loss_and_gradients, lstm_forward, ForecasterParams, ForwardMode};
use super::ForecastError;
use crate::optim::{Adam, AdamConfig};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecasterConfig {
    pub lookback: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub weight_decay: f64,
    pub patience: usize,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for ForecasterConfig {
    fn default() -> Self {
        Self {
            lookback: 30,
            hidden: 64,
            dropout: 0.2,
            learning_rate: 1e-3,
            batch_size: 64,
            max_epochs: 40,
            weight_decay: 1e-4,
            patience: 5,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

impl ForecasterConfig {
    pub fn validate(&self) -> Result<(), ForecastError> {
        let bad = |m: &str| Err(ForecastError::Config(m.to_string()));
        if self.lookback < 1 {
            return bad("lookback must be >= 1");
        }
        if self.hidden < 1 {
            return bad("hidden size must be >= 1");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || self.max_epochs == 0 {
            return bad("learning rate, batch size and epochs must be positive");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation fraction must be in [0, 1)");
        }
        if self.weight_decay < 0.0 {
            return bad("weight decay must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train: f64,
    pub val: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedForecaster {
    pub params: ForecasterParams,
    pub history: Vec<EpochLoss>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Patience-based early stopping on a validation loss.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            wait: 0,
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> StopDecision {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.wait = 0;
            return StopDecision::Improved;
        }
        self.wait += 1;
        if self.patience > 0 && self.wait >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }
}

/// Sliding windows of length `lookback` with the following value as target.
pub fn build_windows(series: &[f64], lookback: usize) -> Vec<(&[f64], f64)> {
    if series.len() <= lookback {
        return Vec::new();
    }
    (0..series.len() - lookback)
        .map(|s| (&series[s..s + lookback], series[s + lookback]))
        .collect()
}

fn eval_mse(params: &ForecasterParams, windows: &[(&[f64], f64)]) -> Result<f64, ForecastError> {
    let mut sum = 0.0;
    for (w, y) in windows {
        let p = lstm_forward(params, w, ForwardMode::Eval)?.prediction;
        sum += (p - y).powi(2);
    }
    Ok(sum / windows.len() as f64)
}

/// Fit one forecaster on a scaled return column.
///
/// The chronologically last `validation_fraction` of windows (at least one)
/// is held out. Minibatches are reshuffled each epoch from the config seed.
/// The returned parameters are those of the epoch with the lowest validation
/// loss.
pub fn train_forecaster(series: &[f64], config: &ForecasterConfig) -> Result<TrainedForecaster, ForecastError> {
    config.validate()?;
    if let Some(pos) = series.iter().position(|x| !x.is_finite()) {
        return Err(ForecastError::NonFiniteInput(pos));
    }
    let windows = build_windows(series, config.lookback);
    let n_val = ((windows.len() as f64 * config.validation_fraction).floor() as usize).max(1);
    if windows.len() < n_val + 1 {
        return Err(ForecastError::SeriesTooShort {
            len: series.len(),
            lookback: config.lookback,
        });
    }
    let (train, val) = windows.split_at(windows.len() - n_val);

    let mut params = ForecasterParams::init(config.hidden, seed::derive(config.seed, 0));
    let mut flat = params.flatten();
    let mut adam = Adam::new(AdamConfig::with_lr(config.learning_rate), flat.len());
    let mut shuffle_rng = seed::rng(seed::derive(config.seed, 1));
    let dropout_stream = seed::derive(config.seed, 2);

    let mut stopper = EarlyStopping::new(config.patience);
    let mut best = params.clone();
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut batch = Vec::with_capacity(config.batch_size);

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut train_loss = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            batch.clear();
            batch.extend(chunk.iter().map(|&k| train[k]));
            let mask_seed = seed::derive(dropout_stream, ((epoch as u64) << 32) | b as u64);
            let (loss, grads) = loss_and_gradients(&params, &batch, config.weight_decay, config.dropout, Some(mask_seed))
                .map_err(|e| match e {
                    ForecastError::Diverged { .. } => ForecastError::Diverged { epoch },
                    other => other,
                })?;
            // Report data loss only, weighted by batch size.
            let data_loss = loss - config.weight_decay * params.weight_norm_sq();
            train_loss += data_loss * chunk.len() as f64 / train.len() as f64;
            adam.step(&mut flat, &grads.flatten());
            params = ForecasterParams::unflatten(config.hidden, &flat);
        }
        let val_loss = eval_mse(&params, val)?;
        if !val_loss.is_finite() || !train_loss.is_finite() {
            return Err(ForecastError::Diverged { epoch });
        }
        history.push(EpochLoss {
            epoch,
            train: train_loss,
            val: val_loss,
        });
        match stopper.observe(epoch, val_loss) {
            StopDecision::Improved => best = params.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                log::debug!("early stop at epoch {epoch}, best {}", stopper.best_epoch());
                break;
            }
        }
    }
    Ok(TrainedForecaster {
        params: best,
        history,
        best_epoch: stopper.best_epoch(),
    })
}

/// Train one forecaster per column in parallel. Each asset gets a seed
/// derived from `config.seed` and its column index.
pub fn train_forecasters(
    scaled_columns: &[Vec<f64>],
    config: &ForecasterConfig,
) -> Result<Vec<TrainedForecaster>, ForecastError> {
    scaled_columns
        .par_iter()
        .enumerate()
        .map(|(i, col)| {
            let cfg = ForecasterConfig {
                seed: seed::derive(config.seed, 1000 + i as u64),
                ..config.clone()
            };
            train_forecaster(col, &cfg)
        })
        .collect()
}
