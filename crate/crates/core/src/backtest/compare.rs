use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{apply_costs, compute_metrics, equity_curve, gross_returns, BacktestError, EquityCurve, MetricsReport};
use super::{ReportedRow, REPORTED_BENCHMARKS};
use crate::data::ReturnMatrix;
use crate::env::WeightsHistory;
use crate::io;

/// Everything derived from one strategy's weights over the test range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub strategy: String,
    pub weights: WeightsHistory,
    pub gross: Vec<f64>,
    pub net: Vec<f64>,
    pub equity: EquityCurve,
    pub metrics: MetricsReport,
    pub mean_weights: Vec<f64>,
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub strategy: String,
    pub ann_return: f64,
    pub volatility: f64,
    pub sharpe: Option<f64>,
    pub mdd: f64,
    /// Printed constants carried for reference, not computed here.
    #[serde(default)]
    pub reported: bool,
}

impl ComparisonRow {
    fn from_reported(r: &ReportedRow) -> Self {
        Self {
            strategy: r.strategy.to_string(),
            ann_return: r.ann_return,
            volatility: r.volatility,
            sharpe: Some(r.sharpe),
            mdd: r.mdd,
            reported: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub test: Range<usize>,
    pub tc: f64,
    pub rows: Vec<ComparisonRow>,
    #[serde(skip)]
    pub results: Vec<StrategyResult>,
}

impl Comparison {
    /// Append the printed benchmark rows, flagged as reported.
    pub fn with_reported_benchmarks(mut self) -> Self {
        self.rows.extend(REPORTED_BENCHMARKS.iter().map(ComparisonRow::from_reported));
        self
    }

    pub fn row(&self, strategy: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.strategy == strategy)
    }

    pub fn result(&self, strategy: &str) -> Option<&StrategyResult> {
        self.results.iter().find(|r| r.strategy == strategy)
    }

    /// `strategy,ann_return,volatility,sharpe,mdd`; an undefined Sharpe is `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("strategy,ann_return,volatility,sharpe,mdd\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.strategy,
                io::fmt_f64(r.ann_return),
                io::fmt_f64(r.volatility),
                r.sharpe.map_or_else(|| "NA".to_string(), io::fmt_f64),
                io::fmt_f64(r.mdd)
            ));
        }
        out
    }

    pub fn to_json(&self) -> Vec<u8> {
        io::to_json_bytes(self)
    }

    /// Fixed-width table for terminals and summaries.
    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.strategy.len()).max().unwrap_or(8).max(8);
        let mut out = format!(
            "{:<width$}  {:>10}  {:>10}  {:>8}  {:>9}\n",
            "strategy", "ann_return", "volatility", "sharpe", "mdd"
        );
        for r in &self.rows {
            let sharpe = r.sharpe.map_or_else(|| "NA".to_string(), |s| format!("{s:.4}"));
            out.push_str(&format!(
                "{:<width$}  {:>10.4}  {:>10.4}  {:>8}  {:>9.4}\n",
                r.strategy, r.ann_return, r.volatility, sharpe, r.mdd
            ));
        }
        out
    }
}

/// Score each strategy's weights over `test` with identical costs and metrics.
pub fn compare(
    strategies: &[(String, WeightsHistory)],
    returns: &ReturnMatrix,
    test: Range<usize>,
    tc: f64,
    risk_free: f64,
    periods_per_year: f64,
) -> Result<Comparison, BacktestError> {
    if test.end > returns.n_rows() {
        return Err(BacktestError::RangeMismatch(format!(
            "test range {test:?} exceeds {} return rows",
            returns.n_rows()
        )));
    }
    let rows = &returns.returns[test.clone()];
    let mut results = Vec::with_capacity(strategies.len());
    for (name, weights) in strategies {
        if weights.start_row != test.start || weights.len() != test.len() {
            return Err(BacktestError::RangeMismatch(format!(
                "`{name}` covers rows {}..{}, expected {test:?}",
                weights.start_row,
                weights.start_row + weights.len()
            )));
        }
        let gross = gross_returns(rows, &weights.weights)?;
        let net = apply_costs(&gross, &weights.weights, tc)?;
        let equity = equity_curve(&net, &returns.timestamps[test.clone()])?;
        let metrics = compute_metrics(&net, risk_free, periods_per_year)?;
        results.push(StrategyResult {
            strategy: name.clone(),
            mean_weights: weights.mean_weights(),
            weights: weights.clone(),
            gross,
            net,
            equity,
            metrics,
        });
    }
    let rows = results
        .iter()
        .map(|r| ComparisonRow {
            strategy: r.strategy.clone(),
            ann_return: r.metrics.ann_return,
            volatility: r.metrics.ann_volatility,
            sharpe: r.metrics.sharpe,
            mdd: r.metrics.mdd,
            reported: false,
        })
        .collect();
    Ok(Comparison { test, tc, rows, results })
}
