use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::Weekday;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::backtest::{StrategyKind, StrategySpec};
use crate::data::CalendarPolicy;
use crate::env::EnvConfig;
use crate::forecast::ForecasterConfig;
use crate::ppo::PpoConfig;
use crate::seed;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub data: DataSection,
    #[serde(default)]
    pub forecaster: ForecasterConfig,
    #[serde(default)]
    pub env: EnvSection,
    #[serde(default)]
    pub ppo: PpoConfig,
    #[serde(default)]
    pub backtest: BacktestSection,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<StrategySpec>,
}

fn default_output() -> PathBuf {
    PathBuf::from("runs/default")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// JSON asset manifest; relative to the config file.
    pub manifest: PathBuf,
    /// Weekday each weekly bar closes on, e.g. "Fri".
    #[serde(default = "default_anchor")]
    pub anchor: String,
    #[serde(default = "default_split")]
    pub split_ratio: f64,
    #[serde(default)]
    pub calendar: CalendarPolicy,
    /// Set when the manifest's CSVs are already weekly.
    #[serde(default)]
    pub skip_resample: bool,
}

fn default_anchor() -> String {
    "Fri".into()
}

fn default_split() -> f64 {
    0.7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub window: usize,
    pub tc: f64,
    pub tau: f64,
    pub lambda_sparse: f64,
    /// One allocator is trained per value.
    pub top_k: Vec<usize>,
    /// Feed forecasts into the allocator's observations during training.
    pub use_scores: bool,
}

impl Default for EnvSection {
    fn default() -> Self {
        Self {
            window: 30,
            tc: 0.001,
            tau: 0.01,
            lambda_sparse: 0.001,
            top_k: vec![5, 10, 30],
            use_scores: true,
        }
    }
}

impl EnvSection {
    /// Environment settings for `n_assets` with K still to be filled in.
    pub fn template(&self, n_assets: usize) -> EnvConfig {
        EnvConfig {
            window: self.window,
            tc: self.tc,
            tau: self.tau,
            lambda_sparse: self.lambda_sparse,
            top_k: 1,
            n_assets,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestSection {
    /// Per-period risk-free rate.
    pub risk_free: f64,
    pub periods_per_year: f64,
    /// Append the published benchmark rows, flagged as reported.
    pub include_reported_benchmarks: bool,
}

impl Default for BacktestSection {
    fn default() -> Self {
        Self {
            risk_free: 0.0,
            periods_per_year: 52.0,
            include_reported_benchmarks: false,
        }
    }
}

fn default_strategies() -> Vec<StrategySpec> {
    let mut out = Vec::new();
    for k in [5, 10, 30] {
        out.push(StrategySpec::new(StrategyKind::SignalOnly { k }));
        out.push(StrategySpec::new(StrategyKind::PolicyOnly { k }));
        out.push(StrategySpec::new(StrategyKind::Hybrid { k }));
    }
    out.push(StrategySpec::new(StrategyKind::EqualWeight));
    out
}

impl ExperimentConfig {
    /// Read a TOML (or `.json`) config. Relative paths inside it are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        };
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.data.manifest.is_relative() {
            cfg.data.manifest = base.join(&cfg.data.manifest);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Input(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        self.anchor()?;
        if !(self.data.split_ratio > 0.0 && self.data.split_ratio < 1.0) {
            return bad(format!("split_ratio must be in (0, 1), got {}", self.data.split_ratio));
        }
        self.forecaster.validate().map_err(|e| CliError::Input(e.to_string()))?;
        self.ppo.validate().map_err(|e| CliError::Input(e.to_string()))?;
        let ks: BTreeSet<usize> = self.env.top_k.iter().copied().collect();
        if ks.len() != self.env.top_k.len() {
            return bad("top_k values must be unique".into());
        }
        let mut names = BTreeSet::new();
        for s in &self.strategies {
            if !names.insert(s.name.as_str()) {
                return bad(format!("duplicate strategy name `{}`", s.name));
            }
            if s.name.is_empty() || s.name.contains([',', '/', '\\']) {
                return bad(format!("invalid strategy name `{}`", s.name));
            }
            if let Some(k) = s.policy_k() {
                if !ks.contains(&k) {
                    return bad(format!("strategy `{}` needs K={k}, which is not in env.top_k", s.name));
                }
            }
            match s.kind {
                StrategyKind::Hybrid { k } | StrategyKind::PolicyOnly { k } | StrategyKind::SignalOnly { k } if k == 0 => {
                    return bad(format!("strategy `{}` has K=0", s.name));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn anchor(&self) -> Result<Weekday, CliError> {
        self.data
            .anchor
            .parse()
            .map_err(|_| CliError::Input(format!("unknown anchor weekday `{}`", self.data.anchor)))
    }

    /// Forecaster settings with the run seed folded in.
    pub fn forecaster_config(&self) -> ForecasterConfig {
        ForecasterConfig {
            seed: seed::derive_str(self.seed, "forecaster"),
            ..self.forecaster.clone()
        }
    }

    pub fn ppo_config(&self) -> PpoConfig {
        PpoConfig {
            seed: seed::derive_str(self.seed, "allocator"),
            ..self.ppo.clone()
        }
    }

    pub fn needs_scores(&self) -> bool {
        self.strategies.iter().any(StrategySpec::needs_scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "schema_version = 1\n[data]\nmanifest = \"m.json\"\n";

    #[test]
    fn defaults_fill_in() {
        let cfg: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.env.top_k, vec![5, 10, 30]);
        assert_eq!(cfg.strategies.len(), 10);
        assert_eq!(cfg.anchor().unwrap(), Weekday::Fri);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        cfg.schema_version = 2;
        assert!(cfg.validate().is_err());

        let mut cfg: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        cfg.env.top_k = vec![5, 5];
        assert!(cfg.validate().is_err());

        let mut cfg: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        cfg.strategies = vec![StrategySpec::new(StrategyKind::Hybrid { k: 7 })];
        assert!(cfg.validate().is_err());

        assert!(toml::from_str::<ExperimentConfig>(&format!("{MINIMAL}bogus = 1\n")).is_err());
    }

    #[test]
    fn strategies_from_toml() {
        let text = format!(
            "{MINIMAL}[[strategies]]\nname = \"ew\"\nkind = \"equal-weight\"\n\
             [[strategies]]\nname = \"mix\"\nkind = \"static-composite\"\nclass_weights = {{ eq = 0.5, bond = 0.5 }}\n"
        );
        let cfg: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg.strategies.len(), 2);
        assert!(matches!(cfg.strategies[1].kind, StrategyKind::StaticComposite { .. }));
    }

    #[test]
    fn seeds_differ_per_stage() {
        let cfg: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        assert_ne!(cfg.forecaster_config().seed, cfg.ppo_config().seed);
    }
}
