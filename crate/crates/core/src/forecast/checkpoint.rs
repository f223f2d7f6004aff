use serde::{Deserialize, Serialize};

use super::{ForecasterConfig, ForecasterParams, TrainedForecaster};
use crate::forecast::EpochLoss;

pub const FORECASTER_FORMAT: &str = "hybrid-alloc/forecaster";
pub const FORECASTER_VERSION: u32 = 1;

/// Self-describing JSON container for one asset's trained forecaster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecasterCheckpoint {
    pub format: String,
    pub version: u32,
    pub asset: String,
    pub config: ForecasterConfig,
    pub best_epoch: usize,
    pub params: ForecasterParams,
    pub history: Vec<EpochLoss>,
}

impl ForecasterCheckpoint {
    pub fn new(asset: &str, config: &ForecasterConfig, trained: &TrainedForecaster) -> Self {
        Self {
            format: FORECASTER_FORMAT.to_string(),
            version: FORECASTER_VERSION,
            asset: asset.to_string(),
            config: config.clone(),
            best_epoch: trained.best_epoch,
            params: trained.params.clone(),
            history: trained.history.clone(),
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.format != FORECASTER_FORMAT {
            return Err(format!("unexpected format `{}`", self.format));
        }
        if self.version > FORECASTER_VERSION {
            return Err(format!("checkpoint version {} is newer than supported", self.version));
        }
        self.params.check_shapes().map_err(|e| e.to_string())
    }
}
