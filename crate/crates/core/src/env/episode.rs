use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{EnvError, EnvState, PortfolioEnv, StepRecord, WeightVector};
use crate::io;
use crate::ppo::Rollout;

/// What a policy callback returns for one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub value: f64,
}

impl PolicyOutput {
    pub fn action_only(action: Vec<f64>) -> Self {
        Self {
            action,
            log_prob: 0.0,
            value: 0.0,
        }
    }
}

/// Weights chosen at each traded date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsHistory {
    pub assets: Vec<String>,
    pub timestamps: Vec<NaiveDate>,
    /// First traded return row.
    pub start_row: usize,
    pub weights: Vec<WeightVector>,
}

impl WeightsHistory {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.weights.iter().map(|w| w.0.clone()).collect()
    }

    /// `date,<asset ids...>`.
    pub fn to_csv(&self) -> String {
        io::dated_matrix_csv(&self.assets, &self.timestamps, &self.rows())
    }

    /// Mean weight per asset over the history.
    pub fn mean_weights(&self) -> Vec<f64> {
        let n = self.assets.len();
        let mut mean = vec![0.0; n];
        for w in &self.weights {
            for (m, x) in mean.iter_mut().zip(&w.0) {
                *m += x;
            }
        }
        let k = self.weights.len().max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= k);
        mean
    }
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub rollout: Rollout,
    pub weights: WeightsHistory,
    pub records: Vec<StepRecord>,
    pub total_reward: f64,
}

impl Episode {
    /// `date,gross,turnover,active,net,reward,clamped`.
    pub fn ledger_csv(&self) -> String {
        ledger_csv(&self.records)
    }
}

pub fn ledger_csv(records: &[StepRecord]) -> String {
    let mut out = String::from("date,gross,turnover,active,net,reward,clamped\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.date.format("%Y-%m-%d"),
            io::fmt_f64(r.gross),
            io::fmt_f64(r.turnover),
            r.active,
            io::fmt_f64(r.net),
            io::fmt_f64(r.reward),
            r.clamped
        ));
    }
    out
}

/// Reset `env` and step it to completion with `policy`.
pub fn run_episode(
    env: &mut PortfolioEnv,
    mut policy: impl FnMut(&EnvState) -> PolicyOutput,
) -> Result<Episode, EnvError> {
    let mut state = env.reset();
    let mut rollout = Rollout::default();
    let mut records = Vec::with_capacity(env.n_steps());
    loop {
        let out = policy(&state);
        let step = env.step(&out.action)?;
        rollout.push(state.0, out.action, out.log_prob, out.value, step.reward, step.done);
        records.push(step.record);
        state = step.state;
        if step.done {
            break;
        }
    }
    let data = env.data();
    let weights = WeightsHistory {
        assets: data.assets.clone(),
        timestamps: records.iter().map(|r| data.timestamps[r.row]).collect(),
        start_row: env.range().start,
        weights: records.iter().map(|r| r.weights.clone()).collect(),
    };
    Ok(Episode {
        rollout,
        weights,
        records,
        total_reward: env.cumulative_reward(),
    })
}
