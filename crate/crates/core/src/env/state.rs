use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{EnvError, WeightVector};

/// Observation vector: `[returns window (L*N, oldest week first, row-major);
/// previous weights (N); forecast scores (N)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnvState(pub Vec<f64>);

impl EnvState {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Offsets of the three observation segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub window: usize,
    pub n_assets: usize,
}

impl StateLayout {
    pub fn new(window: usize, n_assets: usize) -> Self {
        Self { window, n_assets }
    }

    pub fn len(&self) -> usize {
        self.window * self.n_assets + 2 * self.n_assets
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn returns(&self) -> Range<usize> {
        0..self.window * self.n_assets
    }

    pub fn prev_weights(&self) -> Range<usize> {
        let s = self.window * self.n_assets;
        s..s + self.n_assets
    }

    pub fn scores(&self) -> Range<usize> {
        let s = self.window * self.n_assets + self.n_assets;
        s..s + self.n_assets
    }
}

pub fn build_state(window: &[Vec<f64>], w_prev: &WeightVector, scores: &[f64]) -> Result<EnvState, EnvError> {
    let n = w_prev.len();
    if scores.len() != n {
        return Err(EnvError::Shape(format!("{} scores for {} assets", scores.len(), n)));
    }
    if let Some(bad) = window.iter().find(|r| r.len() != n) {
        return Err(EnvError::Shape(format!("window row of length {} for {} assets", bad.len(), n)));
    }
    let mut v = Vec::with_capacity(StateLayout::new(window.len(), n).len());
    for row in window {
        v.extend_from_slice(row);
    }
    v.extend_from_slice(w_prev.as_slice());
    v.extend_from_slice(scores);
    Ok(EnvState(v))
}
