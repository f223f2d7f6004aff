//! Running observation and reward normalization.

use serde::{Deserialize, Serialize};

use super::PpoError;

const VAR_EPS: f64 = 1e-8;

/// Per-dimension running mean and variance, merged one sample at a time
/// with the parallel-moments formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsNormalizer {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: f64,
    pub clip: f64,
}

impl ObsNormalizer {
    pub fn new(dim: usize, clip: f64) -> Self {
        Self {
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
            count: 0.0,
            clip,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn update(&mut self, obs: &[f64]) {
        let total = self.count + 1.0;
        for ((m, v), &x) in self.mean.iter_mut().zip(self.var.iter_mut()).zip(obs) {
            let delta = x - *m;
            let m2 = *v * self.count + delta * delta * self.count / total;
            *m += delta / total;
            *v = m2 / total;
        }
        self.count = total;
    }

    /// Fold `obs` into the statistics when `update` is set, then return
    /// `clip((obs - mean) / sqrt(var + 1e-8))`.
    pub fn normalize(&mut self, obs: &[f64], update: bool) -> Result<Vec<f64>, PpoError> {
        if obs.len() != self.dim() {
            return Err(PpoError::Dimension(format!(
                "observation of length {} for a normalizer of dimension {}",
                obs.len(),
                self.dim()
            )));
        }
        if update {
            self.update(obs);
        }
        Ok(self.apply(obs))
    }

    /// Normalize with frozen statistics.
    pub fn apply(&self, obs: &[f64]) -> Vec<f64> {
        obs.iter()
            .zip(&self.mean)
            .zip(&self.var)
            .map(|((x, m), v)| ((x - m) / (v + VAR_EPS).sqrt()).clamp(-self.clip, self.clip))
            .collect()
    }
}

/// Scales rewards by the running standard deviation of the discounted return.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardNormalizer {
    pub stats: ObsNormalizer,
    pub gamma: f64,
    running_return: f64,
}

impl RewardNormalizer {
    pub fn new(gamma: f64, clip: f64) -> Self {
        Self {
            stats: ObsNormalizer::new(1, clip),
            gamma,
            running_return: 0.0,
        }
    }

    pub fn normalize(&mut self, reward: f64, done: bool) -> f64 {
        self.running_return = self.running_return * self.gamma + reward;
        self.stats.update(&[self.running_return]);
        if done {
            self.running_return = 0.0;
        }
        let sd = (self.stats.var[0] + VAR_EPS).sqrt();
        (reward / sd).clamp(-self.stats.clip, self.stats.clip)
    }
}
