use std::ops::Range;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lstm::{lstm_forward, ForecasterParams, ForwardMode};
use super::ForecastError;
use crate::data::{ReturnMatrix, Scaler, SplitPlan};
use crate::io;

/// Next-period return predictions in return units.
///
/// Row `k` forecasts return row `start_row + k` of the source matrix and was
/// computed from rows strictly before it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastMatrix {
    pub assets: Vec<String>,
    pub timestamps: Vec<NaiveDate>,
    pub start_row: usize,
    pub scores: Vec<Vec<f64>>,
}

impl ForecastMatrix {
    pub fn n_rows(&self) -> usize {
        self.scores.len()
    }

    pub fn rows(&self) -> Range<usize> {
        self.start_row..self.start_row + self.scores.len()
    }

    /// Score row aligned with return row `t`, if covered.
    pub fn row_for(&self, t: usize) -> Option<&[f64]> {
        t.checked_sub(self.start_row)
            .and_then(|k| self.scores.get(k))
            .map(Vec::as_slice)
    }

    /// Concatenate two forecast blocks covering adjacent row ranges.
    pub fn concat(&self, next: &ForecastMatrix) -> Result<ForecastMatrix, ForecastError> {
        if self.rows().end != next.start_row || self.assets != next.assets {
            return Err(ForecastError::Dimension("forecast blocks are not adjacent".into()));
        }
        let mut out = self.clone();
        out.timestamps.extend_from_slice(&next.timestamps);
        out.scores.extend_from_slice(&next.scores);
        Ok(out)
    }

    pub fn to_csv(&self) -> String {
        io::dated_matrix_csv(&self.assets, &self.timestamps, &self.scores)
    }
}

/// Eval-mode predictions for every row in `rows` and every asset.
///
/// The window for row `t` is `returns[t - lookback .. t]`, scaled with the
/// supplied scaler; predictions are mapped back to return units.
pub fn predict_rows(
    params_per_asset: &[ForecasterParams],
    returns: &ReturnMatrix,
    scaler: &Scaler,
    rows: Range<usize>,
    lookback: usize,
) -> Result<ForecastMatrix, ForecastError> {
    let n = returns.n_assets();
    if params_per_asset.len() != n || scaler.len() != n {
        return Err(ForecastError::Dimension(format!(
            "{} assets, {} forecasters, scaler of length {}",
            n,
            params_per_asset.len(),
            scaler.len()
        )));
    }
    if rows.start < lookback {
        return Err(ForecastError::InsufficientHistory {
            first_row: rows.start,
            lookback,
        });
    }
    if rows.end > returns.n_rows() {
        return Err(ForecastError::Dimension(format!(
            "row range {rows:?} exceeds {} return rows",
            returns.n_rows()
        )));
    }
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let scaled: Vec<f64> = returns.returns[..rows.end].iter().map(|r| scaler.scale(i, r[i])).collect();
            rows.clone()
                .map(|t| {
                    let z = lstm_forward(&params_per_asset[i], &scaled[t - lookback..t], ForwardMode::Eval)?.prediction;
                    Ok(scaler.unscale(i, z))
                })
                .collect::<Result<Vec<f64>, ForecastError>>()
        })
        .collect::<Result<_, _>>()?;
    let scores = rows.clone().map(|t| (0..n).map(|i| columns[i][t - rows.start]).collect()).collect();
    Ok(ForecastMatrix {
        assets: returns.assets.clone(),
        timestamps: returns.timestamps[rows.clone()].to_vec(),
        start_row: rows.start,
        scores,
    })
}

/// Predictions over the test range with frozen parameters.
pub fn walk_forward_predict(
    params_per_asset: &[ForecasterParams],
    returns: &ReturnMatrix,
    scaler: &Scaler,
    split: &SplitPlan,
    lookback: usize,
) -> Result<ForecastMatrix, ForecastError> {
    if split.test.is_empty() {
        return Err(ForecastError::Dimension("empty test range".into()));
    }
    predict_rows(params_per_asset, returns, scaler, split.test.clone(), lookback)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::chronological_split;

    fn matrix(rows: usize, n: usize) -> ReturnMatrix {
        ReturnMatrix::from_rows(
            (0..rows)
                .map(|t| (0..n).map(|i| ((t * 7 + i * 3) as f64 * 0.37).sin() * 0.02).collect())
                .collect(),
        )
    }

    #[test]
    fn zero_net_predicts_train_mean() {
        let r = matrix(20, 3);
        let split = chronological_split(20, 0.7).unwrap();
        let scaler = crate::data::fit_scaler(&r.slice_rows(split.train.clone())).unwrap();
        let params = vec![ForecasterParams::zeros(4); 3];
        let f = walk_forward_predict(&params, &r, &scaler, &split, 5).unwrap();
        assert_eq!((f.n_rows(), f.scores[0].len()), (6, 3));
        for row in &f.scores {
            for (i, &s) in row.iter().enumerate() {
                assert_eq!(s, scaler.mu[i]);
            }
        }
    }

    #[test]
    fn insufficient_history() {
        let r = matrix(10, 1);
        let params = vec![ForecasterParams::zeros(2)];
        let err = predict_rows(&params, &r, &Scaler::identity(1), 3..10, 4).unwrap_err();
        assert!(matches!(err, ForecastError::InsufficientHistory { first_row: 3, lookback: 4 }));
    }

    #[test]
    fn later_rows_do_not_leak() {
        let mut r = matrix(30, 2);
        let params = vec![ForecasterParams::init(3, 1), ForecasterParams::init(3, 2)];
        let s = Scaler::identity(2);
        let before = predict_rows(&params, &r, &s, 20..30, 6).unwrap();
        for row in &mut r.returns[25..] {
            row[0] += 1.0;
            row[1] -= 1.0;
        }
        let after = predict_rows(&params, &r, &s, 20..30, 6).unwrap();
        assert_eq!(before.scores[..6], after.scores[..6]);
        assert_ne!(before.scores[6], after.scores[6]);
    }

    #[test]
    fn concat_requires_adjacency() {
        let r = matrix(30, 1);
        let params = vec![ForecasterParams::init(2, 1)];
        let s = Scaler::identity(1);
        let a = predict_rows(&params, &r, &s, 5..10, 5).unwrap();
        let b = predict_rows(&params, &r, &s, 10..12, 5).unwrap();
        let c = a.concat(&b).unwrap();
        assert_eq!(c.rows(), 5..12);
        assert_eq!(c.row_for(11), b.row_for(11));
        assert!(b.concat(&a).is_err());
    }
}
