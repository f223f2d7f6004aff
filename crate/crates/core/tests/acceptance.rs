//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fail.
//!
//! cargo test -p hybrid-alloc --test acceptance

use std::sync::Arc;
use std::time::Instant;

use hybrid_alloc::backtest::{
    compare, equity_curve, run_strategy, StrategyContext, StrategyKind, StrategySpec, REPORTED_STRATEGIES,
};
use hybrid_alloc::cli::{cmd_backtest, cmd_ingest, cmd_train, ExperimentConfig, Stage};
use hybrid_alloc::data::{apply_scaler, chronological_split, fit_scaler};
use hybrid_alloc::env::{action_to_weights, run_episode, EnvConfig, EnvData, PolicyOutput, PortfolioEnv};
use hybrid_alloc::forecast::{loss_and_gradients, predict_rows, train_forecasters, ForecasterConfig, ForecasterParams};
use hybrid_alloc::ppo::{compute_gae, compute_gae_with_dones, ppo_loss, train_policy, train_ppo, Batch, PolicyParams, PpoConfig};
use hybrid_alloc::{seed, synth};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

const TABLE_TOL: f64 = 0.002;
const FD_STEP: f64 = 1e-5;
const FD_REL_TOL: f64 = 1e-4;
/// Denominator floor for the relative error of near-zero components.
const FD_FLOOR: f64 = 1e-6;
const FD_INSTANCES: usize = 100;
const GAE_TOL: f64 = 1e-10;
const GAE_EPISODES: usize = 1000;
const SIMPLEX_TOL: f64 = 1e-9;
const PROJECTION_SAMPLES: usize = 10_000;
const MDD_TOL: f64 = 1e-12;
const MDD_CURVES: usize = 1000;
const DOMINANT_WEIGHT: f64 = 0.9;
const DOMINANT_MIN_SEEDS: usize = 9;
const HYBRID_MIN_SEEDS: usize = 8;
const REWARD_TOL: f64 = 1e-9;
const LEDGER_TOL: f64 = 1e-12;
const SEEDS: u64 = 10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(FD_FLOOR)
}

fn table_consistency() -> Outcome {
    let worst = REPORTED_STRATEGIES
        .iter()
        .map(|r| (r.ann_return / r.volatility - r.sharpe).abs())
        .fold(0.0, f64::max);
    let hybrid5 = REPORTED_STRATEGIES.iter().find(|r| r.strategy == "hybrid-k5").unwrap();
    let implied = hybrid5.ann_return / hybrid5.volatility;
    outcome(
        REPORTED_STRATEGIES.len() == 9 && worst <= TABLE_TOL,
        format!(
            "9 strategy rows, max |ret/vol - sharpe| = {worst:.5} (tol {TABLE_TOL}); hybrid-k5 {implied:.4} vs {}",
            hybrid5.sharpe
        ),
    )
}

fn forecaster_fd(rng: &mut impl Rng) -> f64 {
    let hidden = rng.random_range(1..=4);
    let params = ForecasterParams::init(hidden, rng.random());
    let mut flat = params.flatten();
    // Push biases away from the init values so every gate is exercised.
    for x in flat.iter_mut() {
        *x += 0.3 * rng.sample::<f64, _>(StandardNormal);
    }
    let params = ForecasterParams::unflatten(hidden, &flat);
    let len = rng.random_range(2..=6);
    let n = rng.random_range(1..=4);
    let windows: Vec<Vec<f64>> = (0..n).map(|_| (0..len).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let targets: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let batch: Vec<(&[f64], f64)> = windows.iter().map(Vec::as_slice).zip(targets.iter().copied()).collect();
    let wd = if rng.random_bool(0.5) { 0.0 } else { 1e-2 };
    let loss = |p: &[f64]| loss_and_gradients(&ForecasterParams::unflatten(hidden, p), &batch, wd, 0.0, None).unwrap().0;
    let (_, grad) = loss_and_gradients(&params, &batch, wd, 0.0, None).unwrap();
    let analytic = grad.flatten();
    let mut worst: f64 = 0.0;
    for i in 0..flat.len() {
        let mut p = flat.clone();
        p[i] += FD_STEP;
        let up = loss(&p);
        p[i] -= 2.0 * FD_STEP;
        let down = loss(&p);
        worst = worst.max(rel_err(analytic[i], (up - down) / (2.0 * FD_STEP)));
    }
    worst
}

/// Random rollout whose importance ratios stay clear of the clip kinks, so
/// the objective is differentiable at every probed point.
fn policy_fd(rng: &mut impl Rng, instance: usize) -> f64 {
    let (n_act, steps) = if instance == 0 {
        (2, 3)
    } else {
        (rng.random_range(1..=3), rng.random_range(1..=5))
    };
    let state_dim = rng.random_range(1..=4);
    let hidden = [rng.random_range(1..=3), rng.random_range(1..=3)];
    let clip = 0.2;
    loop {
        let mut p = PolicyParams::new(state_dim, n_act, &hidden, &mut *rng, 0.0);
        for x in p.flat.iter_mut() {
            *x += 0.5 * rng.sample::<f64, _>(StandardNormal);
        }
        let ls = p.log_std_range();
        for x in &mut p.flat[ls] {
            *x = x.clamp(-1.5, 1.5);
        }
        let states: Vec<Vec<f64>> = (0..steps).map(|_| (0..state_dim).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let actions: Vec<Vec<f64>> = (0..steps).map(|_| (0..n_act).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let advantages: Vec<f64> = (0..steps).map(|_| rng.sample(StandardNormal)).collect();
        let targets: Vec<f64> = (0..steps).map(|_| rng.sample(StandardNormal)).collect();
        // Old log-probs offset from the current ones so ratios spread over
        // both sides of the clip interval.
        let current: Vec<f64> = (0..steps)
            .map(|t| {
                let e = hybrid_alloc::ppo::policy_eval(&p, &states[t]).unwrap();
                hybrid_alloc::ppo::gaussian_log_prob(&actions[t], &e.mean, &e.log_std)
            })
            .collect();
        let old: Vec<f64> = current.iter().map(|c| c - rng.random_range(-0.5..0.5)).collect();
        let ratios_ok = current
            .iter()
            .zip(&old)
            .map(|(c, o)| (c - o).exp())
            .all(|r| (r - (1.0 - clip)).abs() > 1e-3 && (r - (1.0 + clip)).abs() > 1e-3);
        if !ratios_ok {
            continue;
        }
        let idx: Vec<usize> = (0..steps).collect();
        let batch = Batch {
            states: &states,
            actions: &actions,
            old_log_probs: &old,
            advantages: &advantages,
            value_targets: &targets,
        };
        let mut grads = vec![0.0; p.flat.len()];
        ppo_loss(&p, batch, &idx, clip, 0.5, 0.01, Some(&mut grads));
        let mut worst: f64 = 0.0;
        for i in 0..p.flat.len() {
            let mut q = p.clone();
            q.flat[i] += FD_STEP;
            let up = ppo_loss(&q, batch, &idx, clip, 0.5, 0.01, None).total;
            q.flat[i] -= 2.0 * FD_STEP;
            let down = ppo_loss(&q, batch, &idx, clip, 0.5, 0.01, None).total;
            worst = worst.max(rel_err(grads[i], (up - down) / (2.0 * FD_STEP)));
        }
        return worst;
    }
}

fn gradient_oracles() -> Outcome {
    let mut rng = seed::rng(2);
    let lstm = (0..FD_INSTANCES).map(|_| forecaster_fd(&mut rng)).fold(0.0, f64::max);
    let policy = (0..FD_INSTANCES).map(|i| policy_fd(&mut rng, i)).fold(0.0, f64::max);
    outcome(
        lstm < FD_REL_TOL && policy < FD_REL_TOL,
        format!(
            "{FD_INSTANCES} instances each, max relative error: LSTM {lstm:.2e}, clipped objective {policy:.2e} (tol {FD_REL_TOL:.0e})"
        ),
    )
}

fn gae_oracle() -> Outcome {
    let mut rng = seed::rng(3);
    let mut worst: f64 = 0.0;
    for ep in 0..GAE_EPISODES {
        let t = rng.random_range(1..=20);
        let rewards: Vec<f64> = (0..t).map(|_| rng.sample(StandardNormal)).collect();
        let values: Vec<f64> = (0..t).map(|_| rng.sample(StandardNormal)).collect();
        let last: f64 = rng.sample(StandardNormal);
        let gamma = rng.random_range(0.0..=1.0);
        let lambda = rng.random_range(0.0..=1.0);
        // Every other episode includes terminal flags.
        let dones: Vec<bool> = (0..t).map(|_| ep % 2 == 1 && rng.random_bool(0.2)).collect();
        let (adv, targets) = if ep % 2 == 0 {
            compute_gae(&rewards, &values, last, gamma, lambda).unwrap()
        } else {
            compute_gae_with_dones(&rewards, &values, &dones, last, gamma, lambda).unwrap()
        };
        let next = |k: usize| if k + 1 < t { values[k + 1] } else { last };
        let delta: Vec<f64> = (0..t)
            .map(|k| rewards[k] + gamma * next(k) * if dones[k] { 0.0 } else { 1.0 } - values[k])
            .collect();
        for s in 0..t {
            let mut sum = 0.0;
            let mut coef = 1.0;
            for l in s..t {
                sum += coef * delta[l];
                if dones[l] {
                    break;
                }
                coef *= gamma * lambda;
            }
            worst = worst.max((adv[s] - sum).abs());
            worst = worst.max((targets[s] - (sum + values[s])).abs());
        }
    }
    outcome(
        worst <= GAE_TOL,
        format!("{GAE_EPISODES} episodes (T <= 20), max |recursive - brute force| = {worst:.2e} (tol {GAE_TOL:.0e})"),
    )
}

fn projection_suite() -> Outcome {
    let n = 32;
    let tau = 0.01;
    let mut rng = seed::rng(4);
    let mut failures = Vec::new();
    for k in [5, 10, 30] {
        for i in 0..PROJECTION_SAMPLES {
            let scale = [0.01, 1.0, 10.0, 100.0][i % 4];
            let mut logits: Vec<f64> = (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
            if i % 7 == 0 {
                // Exact ties.
                for j in (0..n).step_by(3) {
                    logits[j] = logits[0];
                }
            }
            let w = action_to_weights(&logits, k, tau);
            let sum: f64 = w.0.iter().sum();
            let nnz = w.active();
            let nonneg = w.0.iter().all(|&x| x >= 0.0);
            let floor_ok = w.0.iter().all(|&x| x == 0.0 || x >= tau);
            let argmax = (0..n).fold(0, |b, j| if logits[j] > logits[b] { j } else { b });
            let fallback = nnz == 1 && w.0[argmax] == 1.0;
            let shift = rng.random_range(-50.0..50.0);
            let shifted: Vec<f64> = logits.iter().map(|x| x + shift).collect();
            let w2 = action_to_weights(&shifted, k, tau);
            let invariant = w.0.iter().zip(&w2.0).all(|(a, b)| (a - b).abs() <= SIMPLEX_TOL);
            if !((sum - 1.0).abs() <= SIMPLEX_TOL && nonneg && nnz <= k && (floor_ok || fallback) && invariant) {
                failures.push(format!("K={k} sample {i}"));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{PROJECTION_SAMPLES} logit vectors per K in {{5,10,30}}: {} failures{}",
            failures.len(),
            failures.first().map_or(String::new(), |f| format!(" (first: {f})"))
        ),
    )
}

fn mdd_oracle() -> Outcome {
    let mut rng = seed::rng(5);
    let mut worst: f64 = 0.0;
    for c in 0..MDD_CURVES {
        let t = rng.random_range(1..=120);
        let vol = [0.01, 0.05, 0.2][c % 3];
        let noise = Normal::new(0.0, vol).unwrap();
        let net: Vec<f64> = (0..t).map(|_| f64::max(noise.sample(&mut rng), -0.95)).collect();
        let dates = vec![chrono::NaiveDate::MIN; t];
        let curve = equity_curve(&net, &dates).unwrap();
        let mut brute: f64 = 0.0;
        for i in 0..t {
            for j in i..t {
                brute = brute.min(curve.equity[j] / curve.equity[i] - 1.0);
            }
        }
        worst = worst.max((curve.max_drawdown() - brute).abs());
    }
    outcome(
        worst <= MDD_TOL,
        format!("{MDD_CURVES} random curves, max |streaming - brute force| = {worst:.2e} (tol {MDD_TOL:.0e})"),
    )
}

fn dominant_asset() -> Outcome {
    let ppo = PpoConfig {
        learning_rate: 3e-4,
        n_steps: 256,
        minibatch_size: 64,
        n_epochs: 10,
        total_timesteps: 12_000,
        gamma: 0.9,
        ent_coef: 0.0,
        ..Default::default()
    };
    let mut weights = Vec::new();
    for s in 0..SEEDS {
        let market = synth::drift_market(&[0.01, -0.01], 0.01, 120, s);
        let data = Arc::new(EnvData::new(&market, None).unwrap());
        let cfg = EnvConfig::new(4, 2, 2);
        let env = PortfolioEnv::over_all(cfg.clone(), data.clone()).unwrap();
        let policy = train_policy(env, &PpoConfig { seed: s, ..ppo.clone() }).unwrap();
        let mut env = PortfolioEnv::over_all(cfg, data).unwrap();
        let ep = run_episode(&mut env, |st| PolicyOutput::action_only(policy.act(st).unwrap())).unwrap();
        weights.push(ep.weights.mean_weights()[0]);
    }
    let hits = weights.iter().filter(|w| **w > DOMINANT_WEIGHT).count();
    let shown: Vec<String> = weights.iter().map(|w| format!("{w:.3}")).collect();
    outcome(
        hits >= DOMINANT_MIN_SEEDS,
        format!(
            "{hits}/{SEEDS} seeds put > {DOMINANT_WEIGHT} on the +1% asset (need {DOMINANT_MIN_SEEDS}); weights [{}]",
            shown.join(", ")
        ),
    )
}

/// 32 assets with constant drifts; returns (hybrid, equal-weight) annualised return.
fn hybrid_vs_equal_weight(s: u64) -> (f64, f64) {
    let n = 32;
    let drifts = synth::spread_drifts(n, -0.004, 0.006, s);
    let market = synth::drift_market(&drifts, 0.01, 260, s);
    let split = chronological_split(market.n_rows(), 0.7).unwrap();
    let train = market.slice_rows(split.train.clone());
    let scaler = fit_scaler(&train).unwrap();
    let scaled = apply_scaler(&scaler, &train).unwrap();
    let cols: Vec<Vec<f64>> = (0..n).map(|i| scaled.column(i)).collect();
    let fcfg = ForecasterConfig {
        lookback: 8,
        hidden: 8,
        max_epochs: 10,
        batch_size: 32,
        learning_rate: 0.01,
        patience: 3,
        seed: seed::derive(s, 1),
        ..Default::default()
    };
    let params: Vec<_> = train_forecasters(&cols, &fcfg).unwrap().into_iter().map(|t| t.params).collect();
    let forecasts = predict_rows(&params, &market, &scaler, fcfg.lookback..market.n_rows(), fcfg.lookback).unwrap();
    let data = Arc::new(EnvData::new(&market, Some(&forecasts)).unwrap());
    let window = 1;
    let template = EnvConfig::new(window, 1, n);
    let ppo = PpoConfig {
        learning_rate: 3e-3,
        n_steps: 256,
        minibatch_size: 64,
        n_epochs: 10,
        total_timesteps: 20_000,
        gamma: 0.5,
        ent_coef: 0.0,
        hidden: vec![32, 32],
        seed: seed::derive(s, 2),
        ..Default::default()
    };
    let range = window.max(fcfg.lookback)..split.train.end;
    let policies = train_ppo(data, range, &template, &ppo, &[5]).unwrap();
    let ctx = StrategyContext {
        returns: &market,
        classes: &[],
        test: &split.test,
        scores: Some(&forecasts),
        policies: &policies,
        env: &template,
    };
    let specs = [StrategySpec::new(StrategyKind::Hybrid { k: 5 }), StrategySpec::new(StrategyKind::EqualWeight)];
    let hist: Vec<_> = specs.iter().map(|sp| (sp.name.clone(), run_strategy(sp, &ctx).unwrap())).collect();
    let c = compare(&hist, &market, split.test.clone(), template.tc, 0.0, 52.0).unwrap();
    (c.rows[0].ann_return, c.rows[1].ann_return)
}

fn hybrid_advantage() -> Outcome {
    let results: Vec<(f64, f64)> = (0..SEEDS).map(hybrid_vs_equal_weight).collect();
    let wins = results.iter().filter(|(h, e)| h > e).count();
    let shown: Vec<String> = results.iter().map(|(h, e)| format!("{h:.3}/{e:.3}")).collect();
    outcome(
        wins >= HYBRID_MIN_SEEDS,
        format!(
            "hybrid beats equal weight in {wins}/{SEEDS} seeds (need {HYBRID_MIN_SEEDS}); hybrid/ew [{}]",
            shown.join(", ")
        ),
    )
}

fn reward_accounting() -> Outcome {
    // Step 1 moves to five equal weights; step 2 rebalances within the same
    // five names with L1 turnover 0.5.
    let n = 32;
    let market = hybrid_alloc::data::ReturnMatrix::from_rows(vec![vec![0.01; n]; 4]);
    let data = Arc::new(EnvData::new(&market, None).unwrap());
    let cfg = EnvConfig::new(1, 5, n);
    let mut env = PortfolioEnv::new(cfg, data, 1..3).unwrap();
    env.reset();
    let logits = |w: &[f64]| -> Vec<f64> { (0..n).map(|i| w.get(i).map_or(-1e3, |x: &f64| x.ln())).collect() };
    env.step(&logits(&[0.2; 5])).unwrap();
    let out = env.step(&logits(&[0.45, 0.2, 0.2, 0.1, 0.05])).unwrap();
    let expected = 1.009_343_75_f64.ln();
    let example_err = (out.reward - expected).abs();
    let example_ok = example_err <= REWARD_TOL
        && (out.record.turnover - 0.5).abs() < 1e-12
        && out.record.active == 5
        && (out.record.gross - 0.01).abs() < 1e-15;

    let mut worst: f64 = 0.0;
    let mut rng = seed::rng(8);
    for s in 0..50 {
        let market = synth::drift_market(&vec![0.0; 8], 0.05, 40, s);
        let data = Arc::new(EnvData::new(&market, None).unwrap());
        let mut env = PortfolioEnv::over_all(EnvConfig::new(3, 1 + (s as usize % 8), 8), data).unwrap();
        let ep = run_episode(&mut env, |_| {
            PolicyOutput::action_only((0..8).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect())
        })
        .unwrap();
        let resum: f64 = ep.records.iter().map(|r| r.reward).sum();
        worst = worst.max((resum - ep.total_reward).abs());
    }
    outcome(
        example_ok && worst <= LEDGER_TOL,
        format!(
            "worked step reward {:.15} vs ln(1.00934375) = {expected:.15} (|err| {example_err:.1e}); 50 ledgers re-sum within {worst:.1e}",
            out.reward
        ),
    )
}

const DETERMINISM_CONFIG: &str = r#"
schema_version = 1
seed = 11
output_dir = "run"

[data]
manifest = "data/manifest.json"

[forecaster]
lookback = 4
hidden = 4
max_epochs = 3
batch_size = 16

[env]
window = 4
top_k = [2, 3]

[ppo]
n_steps = 64
minibatch_size = 32
n_epochs = 2
total_timesteps = 256
hidden = [8, 8]

[[strategies]]
name = "hybrid-k2"
kind = "hybrid"
k = 2

[[strategies]]
name = "policy-only-k3"
kind = "policy-only"
k = 3

[[strategies]]
name = "signal-only-k2"
kind = "signal-only"
k = 2

[[strategies]]
name = "equal-weight"
kind = "equal-weight"
"#;

fn end_to_end(dir: &std::path::Path) -> (Vec<u8>, Vec<u8>) {
    let market = synth::drift_market(&synth::spread_drifts(4, -0.002, 0.004, 1), 0.02, 80, 1);
    synth::write_daily_csvs(&market, &["eq", "eq", "bond", "crypto"], &dir.join("data")).unwrap();
    std::fs::write(dir.join("experiment.toml"), DETERMINISM_CONFIG).unwrap();
    let cfg = ExperimentConfig::load(&dir.join("experiment.toml")).unwrap();
    cmd_ingest(&cfg).unwrap();
    cmd_train(&cfg, Stage::All).unwrap();
    cmd_backtest(&cfg).unwrap();
    let out = dir.join("run");
    (
        std::fs::read(out.join("backtest/comparison.csv")).unwrap(),
        std::fs::read(out.join("backtest/comparison.json")).unwrap(),
    )
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (csv_a, json_a) = end_to_end(a.path());
    let (csv_b, json_b) = end_to_end(b.path());
    let rows = String::from_utf8_lossy(&csv_a).lines().count().saturating_sub(1);
    outcome(
        csv_a == csv_b && json_a == json_b && rows == 4,
        format!(
            "two end-to-end runs: comparison.csv identical = {}, comparison.json identical = {}, {rows} rows",
            csv_a == csv_b,
            json_a == json_b
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 reference table consistency", table_consistency),
        ("2 gradient oracles", gradient_oracles),
        ("3 GAE oracle", gae_oracle),
        ("4 projection suite", projection_suite),
        ("5 MDD oracle", mdd_oracle),
        ("6 planted dominant asset", dominant_asset),
        ("7 hybrid advantage", hybrid_advantage),
        ("8 reward accounting", reward_accounting),
        ("9 determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("{status} criterion {name}: {} [{:.1}s]", o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
