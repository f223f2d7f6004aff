use std::collections::BTreeMap;
use std::sync::Arc;

use log::info;
use rayon::prelude::*;

use super::artifacts::{archive_dir, emit, DatasetArtifact, Layout, RunManifest, DATASET_FORMAT};
use super::{CliError, ExperimentConfig, Stage};
use crate::backtest::{self, plot, run_strategy, Comparison, StrategyContext, REPORTED_STRATEGIES};
use crate::data::{
    apply_scaler, chronological_split, fetch_to_cache, fit_scaler, ingest_prices, log_returns, resample_weekly,
    Manifest,
};
use crate::env::{EnvData, WeightsHistory};
use crate::forecast::{predict_rows, train_forecasters, ForecastMatrix, ForecasterCheckpoint};
use crate::io;
use crate::ppo::{curves_csv, train_ppo, PolicyCheckpoint, TrainedPolicy};

fn layout(cfg: &ExperimentConfig) -> Layout {
    Layout::new(&cfg.output_dir)
}

pub fn load_dataset(layout: &Layout) -> Result<DatasetArtifact, CliError> {
    let path = layout.dataset();
    if !path.exists() {
        return Err(CliError::Missing(format!(
            "dataset artifact {} not found; run `ingest` first",
            path.display()
        )));
    }
    let d: DatasetArtifact = io::read_json(&path).map_err(|e| CliError::io(&path, e))?;
    if d.format != DATASET_FORMAT {
        return Err(CliError::Input(format!("{}: not a dataset artifact", path.display())));
    }
    Ok(d)
}

pub fn load_forecasts(layout: &Layout) -> Result<ForecastMatrix, CliError> {
    let path = layout.forecasts_json();
    if !path.exists() {
        return Err(CliError::Missing(format!(
            "forecasts {} not found; run `train --stage forecaster` first",
            path.display()
        )));
    }
    io::read_json(&path).map_err(|e| CliError::io(&path, e))
}

pub fn load_policies(layout: &Layout, ks: &[usize]) -> Result<BTreeMap<usize, PolicyCheckpoint>, CliError> {
    let mut out = BTreeMap::new();
    for &k in ks {
        let path = layout.policy(k);
        if !path.exists() {
            return Err(CliError::Missing(format!(
                "policy checkpoint {} not found; run `train --stage allocator` first",
                path.display()
            )));
        }
        let c: PolicyCheckpoint = io::read_json(&path).map_err(|e| CliError::io(&path, e))?;
        c.check().map_err(|m| CliError::Input(format!("{}: {m}", path.display())))?;
        out.insert(k, c);
    }
    Ok(out)
}

/// Aligned weekly prices, returns, split and scaler. Returns the dataset hash.
pub fn cmd_ingest(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let layout = layout(cfg);
    let manifest = Manifest::load(&cfg.data.manifest)?;
    for entry in &manifest.assets {
        if let Some(url) = &entry.url {
            fetch_to_cache(url, &manifest.resolve(entry))?;
        }
    }
    let raw = ingest_prices(&manifest, cfg.data.calendar)?;
    let prices = if cfg.data.skip_resample {
        raw
    } else {
        resample_weekly(&raw, cfg.anchor()?)?
    };
    let returns = log_returns(&prices)?;
    let split = chronological_split(returns.n_rows(), cfg.data.split_ratio)?;
    let scaler = fit_scaler(&returns.slice_rows(split.train.clone()))?;
    info!(
        "ingested {} assets, {} weekly returns ({} train / {} test)",
        returns.n_assets(),
        returns.n_rows(),
        split.train.len(),
        split.test.len()
    );
    let dataset = DatasetArtifact {
        format: DATASET_FORMAT.into(),
        version: 1,
        classes: manifest.classes(),
        prices,
        returns,
        split,
        scaler,
    };
    let mut run = RunManifest::load_or_new(&layout, cfg);
    run.forget("dataset/");
    let hash = emit(&mut run, &layout, &layout.dataset(), &io::to_json_bytes(&dataset))?;
    emit(&mut run, &layout, &layout.dataset_hash(), format!("{hash}\n").as_bytes())?;
    run.save(&layout)?;
    Ok(hash)
}

pub fn cmd_train(cfg: &ExperimentConfig, stage: Stage) -> Result<(), CliError> {
    if matches!(stage, Stage::Forecaster | Stage::All) {
        train_forecaster_stage(cfg)?;
    }
    if matches!(stage, Stage::Allocator | Stage::All) {
        train_allocator_stage(cfg)?;
    }
    Ok(())
}

fn train_forecaster_stage(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let layout = layout(cfg);
    let data = load_dataset(&layout)?;
    let fcfg = cfg.forecaster_config();
    let scaled = apply_scaler(&data.scaler, &data.returns.slice_rows(data.split.train.clone()))?;
    let columns: Vec<Vec<f64>> = (0..scaled.n_assets()).map(|i| scaled.column(i)).collect();
    info!("training {} forecasters", columns.len());
    let trained = train_forecasters(&columns, &fcfg)?;

    let mut run = RunManifest::load_or_new(&layout, cfg);
    run.forget("forecasters/");
    for (asset, t) in data.returns.assets.iter().zip(&trained) {
        let ckpt = ForecasterCheckpoint::new(asset, &fcfg, t);
        emit(&mut run, &layout, &layout.forecaster(asset), &io::to_json_bytes(&ckpt))?;
    }
    run.save(&layout)?;
    let params: Vec<_> = trained.into_iter().map(|t| t.params).collect();
    write_forecasts(cfg, &layout, &data, &params)
}

/// Forecasts for every row with a full lookback behind it. Rows in the
/// training range are in-sample (they feed allocator training); test rows
/// use frozen parameters and only earlier returns.
fn write_forecasts(
    cfg: &ExperimentConfig,
    layout: &Layout,
    data: &DatasetArtifact,
    params: &[crate::forecast::ForecasterParams],
) -> Result<(), CliError> {
    let lookback = cfg.forecaster.lookback;
    let n = data.returns.n_rows();
    if lookback >= data.split.test.start {
        return Err(CliError::Input(format!(
            "lookback {lookback} leaves no training rows with history ({} train rows)",
            data.split.test.start
        )));
    }
    let forecasts = predict_rows(params, &data.returns, &data.scaler, lookback..n, lookback)?;
    let mut run = RunManifest::load_or_new(layout, cfg);
    run.forget("forecasts/");
    emit(&mut run, layout, &layout.forecasts_json(), &io::to_json_bytes(&forecasts))?;
    emit(&mut run, layout, &layout.forecasts_csv(), forecasts.to_csv().as_bytes())?;
    run.save(layout)
}

/// Recompute forecasts from saved forecaster checkpoints.
pub fn cmd_predict(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let layout = layout(cfg);
    let data = load_dataset(&layout)?;
    let mut params = Vec::new();
    for asset in &data.returns.assets {
        let path = layout.forecaster(asset);
        if !path.exists() {
            return Err(CliError::Missing(format!(
                "forecaster checkpoint {} not found; run `train --stage forecaster` first",
                path.display()
            )));
        }
        let c: ForecasterCheckpoint = io::read_json(&path).map_err(|e| CliError::io(&path, e))?;
        c.check().map_err(|m| CliError::Input(format!("{}: {m}", path.display())))?;
        if c.config.lookback != cfg.forecaster.lookback {
            return Err(CliError::Input(format!(
                "{} was trained with lookback {}, config says {}",
                path.display(),
                c.config.lookback,
                cfg.forecaster.lookback
            )));
        }
        params.push(c.params);
    }
    write_forecasts(cfg, &layout, &data, &params)
}

fn train_allocator_stage(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let layout = layout(cfg);
    let data = load_dataset(&layout)?;
    let with_scores = cfg.env.use_scores;
    let forecasts = if with_scores { Some(load_forecasts(&layout)?) } else { None };
    let env_data = Arc::new(EnvData::new(&data.returns, forecasts.as_ref())?);
    let mut start = cfg.env.window;
    if let Some(f) = &forecasts {
        start = start.max(f.start_row);
    }
    let range = start..data.split.train.end;
    if range.len() < 2 {
        return Err(CliError::Input(format!(
            "allocator training range {range:?} is too short; reduce window or lookback"
        )));
    }
    let template = cfg.env.template(data.returns.n_assets());
    let ppo = cfg.ppo_config();
    info!("training allocators for K in {:?} over rows {range:?}", cfg.env.top_k);
    let policies = train_ppo(env_data, range, &template, &ppo, &cfg.env.top_k)?;

    let mut run = RunManifest::load_or_new(&layout, cfg);
    run.forget("policies/");
    for (k, policy) in policies {
        let env = crate::env::EnvConfig {
            top_k: k,
            ..template.clone()
        };
        emit(&mut run, &layout, &layout.policy_curves(k), curves_csv(&policy.curves).as_bytes())?;
        let ckpt = PolicyCheckpoint::new(&env, &ppo, with_scores, policy);
        emit(&mut run, &layout, &layout.policy(k), &io::to_json_bytes(&ckpt))?;
    }
    run.save(&layout)
}

/// Run every configured strategy over the test rows and write the comparison.
pub fn cmd_backtest(cfg: &ExperimentConfig) -> Result<Comparison, CliError> {
    let layout = layout(cfg);
    let data = load_dataset(&layout)?;
    let forecasts = if cfg.needs_scores() { Some(load_forecasts(&layout)?) } else { None };
    let ks: Vec<usize> = cfg
        .strategies
        .iter()
        .filter_map(|s| s.policy_k())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let checkpoints = load_policies(&layout, &ks)?;
    for s in &cfg.strategies {
        if let (true, Some(k)) = (s.needs_scores(), s.policy_k()) {
            if !checkpoints[&k].trained_with_scores {
                return Err(CliError::Missing(format!(
                    "strategy `{}` needs a policy trained with forecasts; retrain with env.use_scores = true",
                    s.name
                )));
            }
        }
    }
    let policies: BTreeMap<usize, TrainedPolicy> = checkpoints.into_iter().map(|(k, c)| (k, c.policy)).collect();
    let template = cfg.env.template(data.returns.n_assets());
    let test = data.split.test.clone();
    let ctx = StrategyContext {
        returns: &data.returns,
        classes: &data.classes,
        test: &test,
        scores: forecasts.as_ref(),
        policies: &policies,
        env: &template,
    };
    let histories: Vec<(String, WeightsHistory)> = cfg
        .strategies
        .par_iter()
        .map(|s| Ok((s.name.clone(), run_strategy(s, &ctx)?)))
        .collect::<Result<_, CliError>>()?;
    let mut comparison = backtest::compare(
        &histories,
        &data.returns,
        test,
        cfg.env.tc,
        cfg.backtest.risk_free,
        cfg.backtest.periods_per_year,
    )?;
    if cfg.backtest.include_reported_benchmarks {
        comparison = comparison.with_reported_benchmarks();
    }
    write_backtest(cfg, &layout, &comparison)?;
    Ok(comparison)
}

fn write_backtest(cfg: &ExperimentConfig, layout: &Layout, c: &Comparison) -> Result<(), CliError> {
    let dir = layout.backtest_dir();
    let mut run = RunManifest::load_or_new(layout, cfg);
    if let Some(prev) = archive_dir(&dir)? {
        info!("archived previous backtest to {}", prev.display());
        run.rename_prefix("backtest/", &format!("{}/", layout.relative(&prev)));
    }
    run.forget("backtest/");
    emit(&mut run, layout, &dir.join("comparison.csv"), c.to_csv().as_bytes())?;
    emit(&mut run, layout, &dir.join("comparison.json"), &c.to_json())?;
    let mut curves = Vec::new();
    for r in &c.results {
        emit(&mut run, layout, &dir.join(format!("equity/{}.csv", r.strategy)), r.equity.to_csv().as_bytes())?;
        emit(&mut run, layout, &dir.join(format!("weights/{}.csv", r.strategy)), r.weights.to_csv().as_bytes())?;
        let pie = plot::weights_pie(&format!("Average weights: {}", r.strategy), &r.weights.assets, &r.mean_weights);
        emit(&mut run, layout, &dir.join(format!("plots/weights-{}.svg", r.strategy)), pie.as_bytes())?;
        curves.push((r.strategy.as_str(), &r.equity));
    }
    emit(&mut run, layout, &dir.join("plots/equity.svg"), plot::equity_chart(&curves).as_bytes())?;
    emit(&mut run, layout, &dir.join("plots/drawdown.svg"), plot::drawdown_chart(&curves).as_bytes())?;
    emit(&mut run, layout, &dir.join("summary.txt"), summary(c).as_bytes())?;
    run.save(layout)
}

fn summary(c: &Comparison) -> String {
    let mut out = format!(
        "Backtest over return rows {}..{} ({} periods), tc = {}\n\n",
        c.test.start,
        c.test.end,
        c.test.len(),
        c.tc
    );
    out.push_str(&c.to_text());
    if c.rows.iter().any(|r| r.reported) {
        out.push_str("\nRows marked (reported) are published constants, not computed here.\n");
    }
    if let Some(best) = c
        .rows
        .iter()
        .filter(|r| !r.reported)
        .max_by(|a, b| a.ann_return.total_cmp(&b.ann_return))
    {
        out.push_str(&format!(
            "\nHighest annualised return: {} ({:.4})\n",
            best.strategy, best.ann_return
        ));
    }
    out
}

fn load_comparison(layout: &Layout) -> Result<Comparison, CliError> {
    let path = layout.backtest_dir().join("comparison.json");
    if !path.exists() {
        return Err(CliError::Missing(format!(
            "comparison {} not found; run `backtest` first",
            path.display()
        )));
    }
    io::read_json(&path).map_err(|e| CliError::io(&path, e))
}

/// Human-readable report of the latest backtest plus the reference-table
/// consistency check.
pub fn cmd_report(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let layout = layout(cfg);
    let c = load_comparison(&layout)?;
    let mut out = String::from("# Backtest report\n\n```\n");
    out.push_str(&c.to_text());
    out.push_str("```\n\n## Reference table check (sharpe = return / volatility, tolerance 0.002)\n\n");
    for r in REPORTED_STRATEGIES.iter() {
        let implied = r.ann_return / r.volatility;
        let ok = (implied - r.sharpe).abs() <= 0.002;
        out.push_str(&format!(
            "- {}: {:.4} / {:.4} = {:.4} vs {:.4} {}\n",
            r.strategy,
            r.ann_return,
            r.volatility,
            implied,
            r.sharpe,
            if ok { "ok" } else { "MISMATCH" }
        ));
    }
    let mut run = RunManifest::load_or_new(&layout, cfg);
    emit(&mut run, &layout, &layout.root.join("report.md"), out.as_bytes())?;
    run.save(&layout)?;
    Ok(out)
}

/// Row-by-row differences between this run's comparison and another run's.
pub fn cmd_compare(cfg: &ExperimentConfig, other: &std::path::Path) -> Result<(bool, String), CliError> {
    let mine = load_comparison(&layout(cfg))?;
    let theirs = load_comparison(&Layout::new(other))?;
    let mut identical = mine.rows.len() == theirs.rows.len();
    let mut out = format!(
        "{:<24}  {:>12}  {:>12}  {:>12}\n",
        "strategy", "ann_return", "other", "difference"
    );
    for r in &mine.rows {
        match theirs.row(&r.strategy) {
            Some(o) => {
                identical &= o == r;
                out.push_str(&format!(
                    "{:<24}  {:>12.6}  {:>12.6}  {:>12.6}\n",
                    r.strategy,
                    r.ann_return,
                    o.ann_return,
                    r.ann_return - o.ann_return
                ));
            }
            None => {
                identical = false;
                out.push_str(&format!("{:<24}  {:>12.6}  {:>12}\n", r.strategy, r.ann_return, "missing"));
            }
        }
    }
    out.push_str(if identical { "tables are identical\n" } else { "tables differ\n" });
    Ok((identical, out))
}
