use std::ops::Range;
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{action_to_weights, build_state, EnvError, EnvState, StateLayout, WeightVector};
use crate::data::ReturnMatrix;
use crate::forecast::ForecastMatrix;

/// Lower bound applied to the net return before taking its log.
pub const NET_FLOOR: f64 = -0.999;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    /// Observation window in weeks.
    pub window: usize,
    /// Proportional cost per unit of L1 turnover.
    pub tc: f64,
    /// Weight floor applied after the Top-K softmax.
    pub tau: f64,
    pub lambda_sparse: f64,
    pub top_k: usize,
    pub n_assets: usize,
}

impl EnvConfig {
    pub fn new(window: usize, top_k: usize, n_assets: usize) -> Self {
        Self {
            window,
            tc: 0.001,
            tau: 0.01,
            lambda_sparse: 0.001,
            top_k,
            n_assets,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: String| Err(EnvError::Config(m));
        if self.window == 0 {
            return bad("window must be >= 1".into());
        }
        if !(self.tc >= 0.0) {
            return bad(format!("tc must be >= 0, got {}", self.tc));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return bad(format!("tau must be in [0, 1), got {}", self.tau));
        }
        if !(self.lambda_sparse >= 0.0) {
            return bad(format!("lambda_sparse must be >= 0, got {}", self.lambda_sparse));
        }
        // K above N is allowed and behaves as K = N.
        if self.n_assets == 0 || self.top_k == 0 {
            return bad(format!("need K >= 1 and N >= 1, got K={} N={}", self.top_k, self.n_assets));
        }
        Ok(())
    }

    pub fn layout(&self) -> StateLayout {
        StateLayout::new(self.window, self.n_assets)
    }

    pub fn state_len(&self) -> usize {
        self.layout().len()
    }
}

/// Immutable market data shared by environment instances.
///
/// `scores[t]` is the forecast for return row `t`; rows outside the forecast
/// coverage (and every row when no forecasts are supplied) are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvData {
    pub assets: Vec<String>,
    pub timestamps: Vec<NaiveDate>,
    pub returns: Vec<Vec<f64>>,
    pub scores: Vec<Vec<f64>>,
    pub score_rows: Option<Range<usize>>,
}

impl EnvData {
    pub fn new(returns: &ReturnMatrix, scores: Option<&ForecastMatrix>) -> Result<Self, EnvError> {
        let n = returns.n_assets();
        let mut rows = vec![vec![0.0; n]; returns.n_rows()];
        let mut score_rows = None;
        if let Some(f) = scores {
            if f.assets.len() != n {
                return Err(EnvError::Shape(format!("{} score columns for {} assets", f.assets.len(), n)));
            }
            if f.rows().end > returns.n_rows() {
                return Err(EnvError::Shape("forecasts extend past the return data".into()));
            }
            for (k, row) in f.scores.iter().enumerate() {
                rows[f.start_row + k].clone_from(row);
            }
            score_rows = Some(f.rows());
        }
        Ok(Self {
            assets: returns.assets.clone(),
            timestamps: returns.timestamps.clone(),
            returns: returns.returns.clone(),
            scores: rows,
            score_rows,
        })
    }

    /// Same returns with the scores segment zeroed.
    pub fn without_scores(&self) -> Self {
        let n = self.returns.first().map_or(0, Vec::len);
        Self {
            scores: vec![vec![0.0; n]; self.returns.len()],
            score_rows: None,
            ..self.clone()
        }
    }

    pub fn n_rows(&self) -> usize {
        self.returns.len()
    }
}

/// Everything that happened in one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Return row that was earned.
    pub row: usize,
    pub date: NaiveDate,
    pub gross: f64,
    pub turnover: f64,
    pub active: usize,
    pub net: f64,
    pub reward: f64,
    /// Net return was raised to [`NET_FLOOR`] before the log.
    pub clamped: bool,
    pub weights: WeightVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: EnvState,
    pub reward: f64,
    pub record: StepRecord,
    pub done: bool,
}

/// One pass over a contiguous block of return rows.
///
/// At cursor `t` the observation holds rows `t-L .. t` (strictly before `t`),
/// the previous weights and the scores for row `t`; the chosen weights then
/// earn return row `t`.
#[derive(Debug, Clone)]
pub struct PortfolioEnv {
    config: EnvConfig,
    data: Arc<EnvData>,
    range: Range<usize>,
    cursor: usize,
    w_prev: WeightVector,
    done: bool,
    cumulative_reward: f64,
}

impl PortfolioEnv {
    /// `range` is the set of return rows the agent trades; it must leave at
    /// least `window` rows of history before its start.
    pub fn new(config: EnvConfig, data: Arc<EnvData>, range: Range<usize>) -> Result<Self, EnvError> {
        config.validate()?;
        if data.returns.first().map_or(0, Vec::len) != config.n_assets {
            return Err(EnvError::Shape(format!("data has a different asset count than N={}", config.n_assets)));
        }
        if range.start < config.window || range.end > data.n_rows() || range.is_empty() {
            return Err(EnvError::InsufficientData(format!(
                "range {range:?} needs {} prior rows within {} available",
                config.window,
                data.n_rows()
            )));
        }
        if let Some(cov) = &data.score_rows {
            if range.start < cov.start || range.end > cov.end {
                return Err(EnvError::InsufficientData(format!(
                    "forecasts cover rows {cov:?} but the episode trades rows {range:?}"
                )));
            }
        }
        let n = config.n_assets;
        Ok(Self {
            cursor: range.start,
            w_prev: WeightVector::uniform(n),
            config,
            data,
            range,
            done: false,
            cumulative_reward: 0.0,
        })
    }

    /// Environment trading every row from `window` to the end of the data.
    pub fn over_all(config: EnvConfig, data: Arc<EnvData>) -> Result<Self, EnvError> {
        let end = data.n_rows();
        Self::new(config.clone(), data, config.window..end)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn data(&self) -> &Arc<EnvData> {
        &self.data
    }

    pub fn range(&self) -> Range<usize> {
        self.range.clone()
    }

    pub fn n_steps(&self) -> usize {
        self.range.len()
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn cumulative_reward(&self) -> f64 {
        self.cumulative_reward
    }

    pub fn previous_weights(&self) -> &WeightVector {
        &self.w_prev
    }

    pub fn reset(&mut self) -> EnvState {
        self.cursor = self.range.start;
        self.w_prev = WeightVector::uniform(self.config.n_assets);
        self.done = false;
        self.cumulative_reward = 0.0;
        self.observe()
    }

    fn observe(&self) -> EnvState {
        let t = self.cursor;
        let window = &self.data.returns[t - self.config.window..t];
        let zeros;
        let scores = match self.data.scores.get(t) {
            Some(s) => s.as_slice(),
            None => {
                zeros = vec![0.0; self.config.n_assets];
                &zeros
            }
        };
        build_state(window, &self.w_prev, scores).expect("shapes validated at construction")
    }

    pub fn step(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        if action.len() != self.config.n_assets {
            return Err(EnvError::Shape(format!(
                "action of length {} for {} assets",
                action.len(),
                self.config.n_assets
            )));
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(EnvError::NonFiniteAction);
        }
        let t = self.cursor;
        let weights = action_to_weights(action, self.config.top_k, self.config.tau);
        let record = settle(&self.config, t, self.data.timestamps[t], &self.data.returns[t], &self.w_prev, weights);
        self.cumulative_reward += record.reward;
        self.w_prev = record.weights.clone();
        self.cursor += 1;
        self.done = self.cursor >= self.range.end;
        Ok(StepOutcome {
            state: self.observe(),
            reward: record.reward,
            record,
            done: self.done,
        })
    }
}

/// Reward accounting for one period.
pub(crate) fn settle(
    config: &EnvConfig,
    row: usize,
    date: NaiveDate,
    returns: &[f64],
    w_prev: &WeightVector,
    weights: WeightVector,
) -> StepRecord {
    let gross = weights.dot(returns);
    let turnover = weights.turnover(w_prev);
    let active = weights.active();
    let raw_net =
        gross - config.tc * turnover - config.lambda_sparse * active as f64 / config.n_assets as f64;
    let clamped = raw_net < NET_FLOOR;
    let net = raw_net.max(NET_FLOOR);
    StepRecord {
        row,
        date,
        gross,
        turnover,
        active,
        net,
        reward: net.ln_1p(),
        clamped,
        weights,
    }
}
