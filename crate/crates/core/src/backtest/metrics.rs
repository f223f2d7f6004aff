use serde::{Deserialize, Serialize};

use super::{equity_curve, BacktestError};

/// Annualised performance summary of a net-return series.
///
/// `ann_return = P * mean`, `ann_volatility = sqrt(P) * sample_std`,
/// `sharpe = P * (mean - r_f) / (sqrt(P) * sample_std)`, and `mdd` is the
/// minimum drawdown of the compounded equity curve. Mean-based
/// annualisation and compounded equity are both kept as defined, even though
/// they aggregate returns differently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ann_return: f64,
    pub ann_volatility: f64,
    /// `None` when volatility is zero (the ratio is undefined).
    pub sharpe: Option<f64>,
    pub mdd: f64,
    /// Per-period risk-free rate.
    pub risk_free: f64,
    pub periods_per_year: f64,
}

impl MetricsReport {
    pub fn annualized_risk_free(&self) -> f64 {
        self.periods_per_year * self.risk_free
    }
}

pub fn compute_metrics(net: &[f64], risk_free: f64, periods_per_year: f64) -> Result<MetricsReport, BacktestError> {
    let t = net.len();
    if t < 2 {
        return Err(BacktestError::TooFewPeriods(t));
    }
    let mean = net.iter().sum::<f64>() / t as f64;
    let var = net.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (t - 1) as f64;
    // Rounding in the mean leaves ~1e-17 spread on a constant series.
    let sd = if var.sqrt() <= 1e-14 * (1.0 + mean.abs()) { 0.0 } else { var.sqrt() };
    let ann_return = periods_per_year * mean;
    let ann_volatility = periods_per_year.sqrt() * sd;
    let sharpe = (ann_volatility > 0.0).then(|| periods_per_year * (mean - risk_free) / ann_volatility);
    let dates = vec![chrono::NaiveDate::MIN; t];
    let mdd = equity_curve(net, &dates)?.max_drawdown();
    Ok(MetricsReport {
        ann_return,
        ann_volatility,
        sharpe,
        mdd,
        risk_free,
        periods_per_year,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_returns_have_undefined_sharpe() {
        let m = compute_metrics(&[0.01; 10], 0.0, 52.0).unwrap();
        assert!((m.ann_return - 0.52).abs() < 1e-12);
        assert_eq!(m.ann_volatility, 0.0);
        assert_eq!(m.sharpe, None);
    }

    #[test]
    fn two_period_hand_values() {
        let m = compute_metrics(&[0.1, -0.05], 0.0, 52.0).unwrap();
        // mean 0.025, sample std 0.075 * sqrt(2).
        assert!((m.ann_return - 1.3).abs() < 1e-12);
        let sd = 0.075 * 2f64.sqrt();
        assert!((sd - 0.106_066_017_178).abs() < 1e-11);
        assert!((m.ann_volatility - 52f64.sqrt() * sd).abs() < 1e-12);
        assert!((m.ann_volatility - 0.764_852_927).abs() < 1e-8);
        assert!((m.sharpe.unwrap() - 1.699_673_171).abs() < 1e-8);
        assert!((m.mdd + 0.05).abs() < 1e-12);
    }

    #[test]
    fn too_few_periods() {
        assert!(compute_metrics(&[0.1], 0.0, 52.0).is_err());
    }

    #[test]
    fn other_frequencies() {
        let m = compute_metrics(&[0.01, 0.03], 0.0, 252.0).unwrap();
        assert!((m.ann_return - 252.0 * 0.02).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn sharpe_times_vol_is_excess_return(
            net in prop::collection::vec(-0.2f64..0.2, 2..80),
            rf in -0.001f64..0.002,
        ) {
            let m = compute_metrics(&net, rf, 52.0).unwrap();
            if let Some(sr) = m.sharpe {
                prop_assert!((sr * m.ann_volatility + m.annualized_risk_free() - m.ann_return).abs() < 1e-9);
            }
        }
    }
}
