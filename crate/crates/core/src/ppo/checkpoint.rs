use serde::{Deserialize, Serialize};

use super::{PpoConfig, TrainedPolicy};
use crate::env::EnvConfig;

pub const POLICY_FORMAT: &str = "hybrid-alloc/policy";
pub const POLICY_VERSION: u32 = 1;

/// Self-describing JSON container for one Top-K policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCheckpoint {
    pub format: String,
    pub version: u32,
    pub env: EnvConfig,
    pub ppo: PpoConfig,
    /// Whether forecast scores were present in the training observations.
    pub trained_with_scores: bool,
    pub policy: TrainedPolicy,
}

impl PolicyCheckpoint {
    pub fn new(env: &EnvConfig, ppo: &PpoConfig, trained_with_scores: bool, policy: TrainedPolicy) -> Self {
        Self {
            format: POLICY_FORMAT.to_string(),
            version: POLICY_VERSION,
            env: env.clone(),
            ppo: ppo.clone(),
            trained_with_scores,
            policy,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.format != POLICY_FORMAT {
            return Err(format!("unexpected format `{}`", self.format));
        }
        if self.version > POLICY_VERSION {
            return Err(format!("checkpoint version {} is newer than supported", self.version));
        }
        if self.policy.params.state_dim() != self.env.state_len() {
            return Err("policy input size does not match the environment".into());
        }
        Ok(())
    }
}
