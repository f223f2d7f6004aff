use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::BacktestError;
use crate::io;

/// Compounded equity with running peaks and drawdowns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquityCurve {
    pub timestamps: Vec<NaiveDate>,
    pub equity: Vec<f64>,
    pub peaks: Vec<f64>,
    pub drawdowns: Vec<f64>,
}

impl EquityCurve {
    /// Most negative drawdown; 0 for an empty or never-declining curve.
    pub fn max_drawdown(&self) -> f64 {
        self.drawdowns.iter().copied().fold(0.0, f64::min)
    }

    pub fn len(&self) -> usize {
        self.equity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equity.is_empty()
    }

    /// `date,equity,peak,drawdown`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("date,equity,peak,drawdown\n");
        for k in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.timestamps[k].format("%Y-%m-%d"),
                io::fmt_f64(self.equity[k]),
                io::fmt_f64(self.peaks[k]),
                io::fmt_f64(self.drawdowns[k])
            ));
        }
        out
    }
}

/// `E_t = prod_{i<=t} (1 + net_i)`, `H_t = max_{i<=t} E_i`, `D_t = E_t / H_t - 1`.
pub fn equity_curve(net: &[f64], timestamps: &[NaiveDate]) -> Result<EquityCurve, BacktestError> {
    if net.len() != timestamps.len() {
        return Err(BacktestError::Length(format!(
            "{} returns for {} timestamps",
            net.len(),
            timestamps.len()
        )));
    }
    let mut equity = Vec::with_capacity(net.len());
    let mut peaks = Vec::with_capacity(net.len());
    let mut drawdowns = Vec::with_capacity(net.len());
    let mut e = 1.0;
    let mut peak = f64::NEG_INFINITY;
    for (period, &r) in net.iter().enumerate() {
        if !(r > -1.0) {
            return Err(BacktestError::Ruin { period, value: r });
        }
        e *= 1.0 + r;
        peak = peak.max(e);
        equity.push(e);
        peaks.push(peak);
        drawdowns.push(e / peak - 1.0);
    }
    Ok(EquityCurve {
        timestamps: timestamps.to_vec(),
        equity,
        peaks,
        drawdowns,
    })
}
