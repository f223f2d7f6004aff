//! Published reference figures for the 2024 weekly test year.
//!
//! Strategy rows satisfy `sharpe = ann_return / volatility` to rounding;
//! benchmark rows do not, so they are kept for display only.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportedRow {
    pub strategy: &'static str,
    pub ann_return: f64,
    pub volatility: f64,
    pub sharpe: f64,
    pub mdd: f64,
}

const fn row(strategy: &'static str, ann_return: f64, volatility: f64, sharpe: f64, mdd: f64) -> ReportedRow {
    ReportedRow {
        strategy,
        ann_return,
        volatility,
        sharpe,
        mdd,
    }
}

pub const REPORTED_STRATEGIES: [ReportedRow; 9] = [
    row("signal-only-k5", -0.0303, 0.5278, -0.0575, -0.3500),
    row("signal-only-k10", -0.0087, 0.4363, -0.0199, -0.3189),
    row("signal-only-k30", 0.1575, 0.3268, 0.4821, -0.1991),
    row("policy-only-k5", 0.0575, 0.1559, 0.3686, -0.0719),
    row("policy-only-k10", 0.2020, 0.1977, 1.0219, -0.0787),
    row("policy-only-k30", 0.0803, 0.1736, 0.4627, -0.0978),
    row("hybrid-k5", 0.2538, 0.2653, 0.9565, -0.1369),
    row("hybrid-k10", 0.0983, 0.2168, 0.4535, -0.1197),
    row("hybrid-k30", 0.1025, 0.1780, 0.5756, -0.1060),
];

pub const REPORTED_BENCHMARKS: [ReportedRow; 4] = [
    row("S&P 500 (reported)", 0.0679, 0.2000, 0.0034, -0.0787),
    row("Allianz Income & Growth (reported)", -0.0327, 0.1595, -0.0020, -0.0650),
    row("Composite 25/25/25/25 (reported)", 0.0401, 0.1968, 0.0020, -0.0634),
    row("Equal-Weight (reported)", 0.0042, 0.1402, 0.0003, -0.0719),
];
