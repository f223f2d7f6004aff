use std::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{DataError, PriceTable};

/// Log-returns, one row per period. Row `t` is the return realised between
/// price rows `t` and `t + 1` and carries the later date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnMatrix {
    pub assets: Vec<String>,
    pub timestamps: Vec<NaiveDate>,
    pub returns: Vec<Vec<f64>>,
}

impl ReturnMatrix {
    pub fn new(assets: Vec<String>, timestamps: Vec<NaiveDate>, returns: Vec<Vec<f64>>) -> Result<Self, DataError> {
        if returns.len() != timestamps.len() {
            return Err(DataError::DimensionMismatch {
                expected: timestamps.len(),
                got: returns.len(),
            });
        }
        for row in &returns {
            if row.len() != assets.len() {
                return Err(DataError::DimensionMismatch {
                    expected: assets.len(),
                    got: row.len(),
                });
            }
        }
        Ok(Self {
            assets,
            timestamps,
            returns,
        })
    }

    /// Matrix with synthetic weekly dates starting 2000-01-07 (a Friday).
    pub fn from_rows(returns: Vec<Vec<f64>>) -> Self {
        let n = returns.first().map_or(0, Vec::len);
        let start = NaiveDate::from_ymd_opt(2000, 1, 7).expect("valid date");
        let timestamps = (0..returns.len())
            .map(|k| start + chrono::Duration::weeks(k as i64))
            .collect();
        let assets = (0..n).map(|i| format!("A{i}")).collect();
        Self::new(assets, timestamps, returns).expect("rectangular rows")
    }

    pub fn n_rows(&self) -> usize {
        self.returns.len()
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.returns.iter().map(|r| r[i]).collect()
    }

    pub fn slice_rows(&self, range: Range<usize>) -> ReturnMatrix {
        ReturnMatrix {
            assets: self.assets.clone(),
            timestamps: self.timestamps[range.clone()].to_vec(),
            returns: self.returns[range].to_vec(),
        }
    }
}

/// `returns[t][i] = ln(prices[t+1][i] / prices[t][i])`.
pub fn log_returns(prices: &PriceTable) -> Result<ReturnMatrix, DataError> {
    let mut returns = Vec::with_capacity(prices.n_rows().saturating_sub(1));
    for t in 1..prices.n_rows() {
        let row = prices.prices[t]
            .iter()
            .zip(&prices.prices[t - 1])
            .enumerate()
            .map(|(i, (&now, &prev))| {
                if !(now > 0.0 && prev > 0.0) {
                    let (date, value) = if now > 0.0 {
                        (prices.timestamps[t - 1], prev)
                    } else {
                        (prices.timestamps[t], now)
                    };
                    return Err(DataError::NonPositivePrice {
                        asset: prices.assets[i].clone(),
                        date,
                        value,
                    });
                }
                Ok((now / prev).ln())
            })
            .collect::<Result<Vec<_>, _>>()?;
        returns.push(row);
    }
    ReturnMatrix::new(prices.assets.clone(), prices.timestamps[1..].to_vec(), returns)
}
