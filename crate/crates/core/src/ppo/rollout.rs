use serde::{Deserialize, Serialize};

/// Per-step transition buffer. All vectors have the same length; advantages
/// and value targets stay empty until GAE has run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub value_targets: Vec<f64>,
}

impl Rollout {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            states: Vec::with_capacity(n),
            actions: Vec::with_capacity(n),
            log_probs: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            dones: Vec::with_capacity(n),
            advantages: Vec::new(),
            value_targets: Vec::new(),
        }
    }

    pub fn push(&mut self, state: Vec<f64>, action: Vec<f64>, log_prob: f64, value: f64, reward: f64, done: bool) {
        self.states.push(state);
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.values.push(value);
        self.rewards.push(reward);
        self.dones.push(done);
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn has_advantages(&self) -> bool {
        self.advantages.len() == self.len() && self.value_targets.len() == self.len() && !self.is_empty()
    }

    pub fn clear(&mut self) {
        *self = Self::default();
    }
}
