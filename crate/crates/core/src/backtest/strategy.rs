use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::BacktestError;
use crate::data::ReturnMatrix;
use crate::env::{run_episode, top_k_indices, EnvConfig, EnvData, PortfolioEnv, WeightVector, WeightsHistory};
use crate::forecast::ForecastMatrix;
use crate::ppo::TrainedPolicy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StrategyKind {
    /// Policy acting on observations that include the forecasts.
    Hybrid { k: usize },
    /// Same policy with the forecast segment of every observation zeroed.
    PolicyOnly { k: usize },
    /// Equal weight over the K assets with the highest forecast.
    SignalOnly { k: usize },
    EqualWeight,
    /// Fixed class-level weights, split uniformly within each class.
    StaticComposite { class_weights: BTreeMap<String, f64> },
    /// All weight on one asset.
    SingleIndex { column: String },
}

/// A named strategy. The name defaults to one derived from the kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawSpec")]
pub struct StrategySpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: StrategyKind,
}

#[derive(Deserialize)]
struct RawSpec {
    name: Option<String>,
    #[serde(flatten)]
    kind: StrategyKind,
}

impl From<RawSpec> for StrategySpec {
    fn from(raw: RawSpec) -> Self {
        match raw.name {
            Some(name) => Self { name, kind: raw.kind },
            None => Self::new(raw.kind),
        }
    }
}

impl StrategySpec {
    pub fn new(kind: StrategyKind) -> Self {
        let name = match &kind {
            StrategyKind::Hybrid { k } => format!("hybrid-k{k}"),
            StrategyKind::PolicyOnly { k } => format!("policy-only-k{k}"),
            StrategyKind::SignalOnly { k } => format!("signal-only-k{k}"),
            StrategyKind::EqualWeight => "equal-weight".to_string(),
            StrategyKind::StaticComposite { .. } => "static-composite".to_string(),
            StrategyKind::SingleIndex { column } => format!("index-{column}"),
        };
        Self { name, kind }
    }

    /// The Top-K policy this strategy needs, if any.
    pub fn policy_k(&self) -> Option<usize> {
        match self.kind {
            StrategyKind::Hybrid { k } | StrategyKind::PolicyOnly { k } => Some(k),
            _ => None,
        }
    }

    pub fn needs_scores(&self) -> bool {
        matches!(self.kind, StrategyKind::Hybrid { .. } | StrategyKind::SignalOnly { .. })
    }
}

/// Inputs shared by all strategies in one comparison.
#[derive(Debug, Clone, Copy)]
pub struct StrategyContext<'a> {
    pub returns: &'a ReturnMatrix,
    /// Asset class tag per column.
    pub classes: &'a [String],
    /// Return rows that are traded.
    pub test: &'a Range<usize>,
    /// Walk-forward forecasts covering the test rows.
    pub scores: Option<&'a ForecastMatrix>,
    pub policies: &'a BTreeMap<usize, TrainedPolicy>,
    /// Window, costs and threshold for policy strategies; K is taken from
    /// the strategy.
    pub env: &'a EnvConfig,
}

fn constant(ctx: &StrategyContext<'_>, w: WeightVector) -> Vec<WeightVector> {
    vec![w; ctx.test.len()]
}

/// Weights chosen by `spec` on every test row.
pub fn run_strategy(spec: &StrategySpec, ctx: &StrategyContext<'_>) -> Result<WeightsHistory, BacktestError> {
    let n = ctx.returns.n_assets();
    let invalid = |message: String| BacktestError::InvalidStrategy {
        strategy: spec.name.clone(),
        message,
    };
    let missing = |what: &str| BacktestError::MissingInput {
        strategy: spec.name.clone(),
        missing: what.to_string(),
    };
    if ctx.test.is_empty() || ctx.test.end > ctx.returns.n_rows() {
        return Err(invalid(format!("test range {:?} outside the data", ctx.test)));
    }
    let weights = match &spec.kind {
        StrategyKind::EqualWeight => constant(ctx, WeightVector::uniform(n)),
        StrategyKind::SingleIndex { column } => {
            let i = ctx
                .returns
                .assets
                .iter()
                .position(|a| a == column)
                .ok_or_else(|| invalid(format!("unknown asset `{column}`")))?;
            constant(ctx, WeightVector::one_hot(n, i))
        }
        StrategyKind::StaticComposite { class_weights } => {
            if ctx.classes.len() != n {
                return Err(missing("an asset class tag for every asset"));
            }
            let mut w = vec![0.0; n];
            let mut total = 0.0;
            for (class, &cw) in class_weights {
                if !(cw >= 0.0) {
                    return Err(invalid(format!("negative weight for class `{class}`")));
                }
                let members: Vec<usize> = (0..n).filter(|&i| &ctx.classes[i] == class).collect();
                if members.is_empty() {
                    return Err(invalid(format!("no assets in class `{class}`")));
                }
                for &i in &members {
                    w[i] += cw / members.len() as f64;
                }
                total += cw;
            }
            if !(total > 0.0) {
                return Err(invalid("class weights sum to zero".into()));
            }
            w.iter_mut().for_each(|x| *x /= total);
            constant(ctx, WeightVector(w))
        }
        StrategyKind::SignalOnly { k } => {
            let scores = ctx.scores.ok_or_else(|| missing("forecast scores"))?;
            ctx.test
                .clone()
                .map(|t| {
                    let row = scores
                        .row_for(t)
                        .ok_or_else(|| missing(&format!("a forecast for row {t}")))?;
                    let top = top_k_indices(row, (*k).clamp(1, n));
                    let mut w = vec![0.0; n];
                    top.iter().for_each(|&i| w[i] = 1.0 / top.len() as f64);
                    Ok(WeightVector(w))
                })
                .collect::<Result<_, BacktestError>>()?
        }
        StrategyKind::Hybrid { k } | StrategyKind::PolicyOnly { k } => {
            let policy = ctx
                .policies
                .get(k)
                .ok_or_else(|| missing(&format!("a trained policy for K={k}")))?;
            let history = ctx.returns.slice_rows(0..ctx.test.end);
            let data = if matches!(spec.kind, StrategyKind::Hybrid { .. }) {
                let scores = ctx.scores.ok_or_else(|| missing("forecast scores"))?;
                EnvData::new(&history, Some(scores))?
            } else {
                EnvData::new(&history, None)?
            };
            let cfg = EnvConfig {
                top_k: *k,
                n_assets: n,
                ..ctx.env.clone()
            };
            let mut env = PortfolioEnv::new(cfg, Arc::new(data), ctx.test.clone())?;
            let mut failure = None;
            let episode = run_episode(&mut env, |s| match policy.act(s) {
                Ok(a) => crate::env::PolicyOutput::action_only(a),
                Err(e) => {
                    failure.get_or_insert(e);
                    crate::env::PolicyOutput::action_only(vec![0.0; n])
                }
            })?;
            if let Some(e) = failure {
                return Err(e.into());
            }
            return Ok(episode.weights);
        }
    };
    Ok(WeightsHistory {
        assets: ctx.returns.assets.clone(),
        timestamps: ctx.returns.timestamps[ctx.test.clone()].to_vec(),
        start_row: ctx.test.start,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::ForecastMatrix;

    fn returns() -> ReturnMatrix {
        ReturnMatrix::from_rows((0..8).map(|t| vec![0.01, 0.02, -0.01, 0.001 * t as f64]).collect())
    }

    fn ctx<'a>(
        r: &'a ReturnMatrix,
        classes: &'a [String],
        test: &'a Range<usize>,
        scores: Option<&'a ForecastMatrix>,
        policies: &'a BTreeMap<usize, TrainedPolicy>,
        env: &'a EnvConfig,
    ) -> StrategyContext<'a> {
        StrategyContext {
            returns: r,
            classes,
            test,
            scores,
            policies,
            env,
        }
    }

    #[test]
    fn baselines() {
        let r = returns();
        let classes: Vec<String> = ["eq", "eq", "bond", "crypto"].iter().map(|s| s.to_string()).collect();
        let test = 4..8;
        let policies = BTreeMap::new();
        let env = EnvConfig::new(2, 2, 4);
        let c = ctx(&r, &classes, &test, None, &policies, &env);

        let ew = run_strategy(&StrategySpec::new(StrategyKind::EqualWeight), &c).unwrap();
        assert_eq!(ew.len(), 4);
        assert!(ew.weights.iter().all(|w| w.0 == vec![0.25; 4]));

        let idx = run_strategy(&StrategySpec::new(StrategyKind::SingleIndex { column: "A2".into() }), &c).unwrap();
        assert_eq!(idx.weights[0].0, vec![0.0, 0.0, 1.0, 0.0]);

        let cw: BTreeMap<String, f64> = [("eq", 0.5), ("bond", 0.25), ("crypto", 0.25)]
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        let comp = run_strategy(&StrategySpec::new(StrategyKind::StaticComposite { class_weights: cw }), &c).unwrap();
        assert_eq!(comp.weights[0].0, vec![0.25, 0.25, 0.25, 0.25]);

        let bad: BTreeMap<String, f64> = [("fx".to_string(), 1.0)].into_iter().collect();
        assert!(run_strategy(&StrategySpec::new(StrategyKind::StaticComposite { class_weights: bad }), &c).is_err());
    }

    #[test]
    fn signal_only_ranks_then_equal_weights() {
        let r = returns();
        let test = 6..7;
        let scores = ForecastMatrix {
            assets: r.assets.clone(),
            timestamps: r.timestamps[6..7].to_vec(),
            start_row: 6,
            scores: vec![vec![0.3, 0.1, 0.2, -0.5]],
        };
        let policies = BTreeMap::new();
        let env = EnvConfig::new(2, 2, 4);
        let c = ctx(&r, &[], &test, Some(&scores), &policies, &env);
        let w = run_strategy(&StrategySpec::new(StrategyKind::SignalOnly { k: 2 }), &c).unwrap();
        assert_eq!(w.weights[0].0, vec![0.5, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn missing_inputs() {
        let r = returns();
        let test = 4..8;
        let policies = BTreeMap::new();
        let env = EnvConfig::new(2, 2, 4);
        let c = ctx(&r, &[], &test, None, &policies, &env);
        for kind in [StrategyKind::SignalOnly { k: 2 }, StrategyKind::Hybrid { k: 2 }, StrategyKind::PolicyOnly { k: 2 }] {
            assert!(matches!(
                run_strategy(&StrategySpec::new(kind), &c),
                Err(BacktestError::MissingInput { .. })
            ));
        }
    }

    #[test]
    fn spec_serde_shape() {
        let s: StrategySpec = toml::from_str("name = \"h5\"\nkind = \"hybrid\"\nk = 5\n").unwrap();
        assert_eq!(s.kind, StrategyKind::Hybrid { k: 5 });
        let s: StrategySpec = toml::from_str("name = \"ew\"\nkind = \"equal-weight\"\n").unwrap();
        assert_eq!(s.kind, StrategyKind::EqualWeight);
    }
}
