//! Planted-structure experiments: dominant-asset convergence and
//! forecast-driven allocation against equal weight.
//!
//! cargo run --release --example planted -- [dominant|hybrid] [seeds]

use std::sync::Arc;
use std::time::Instant;

use hybrid_alloc::backtest::{compare, run_strategy, StrategyContext, StrategyKind, StrategySpec};
use hybrid_alloc::data::{chronological_split, fit_scaler, apply_scaler};
use hybrid_alloc::env::{EnvConfig, EnvData, PortfolioEnv};
use hybrid_alloc::forecast::{predict_rows, train_forecasters, ForecasterConfig};
use hybrid_alloc::ppo::{train_policy, train_ppo, PpoConfig};
use hybrid_alloc::{seed, synth};

fn dominant(s: u64, ppo: &PpoConfig) -> f64 {
    let market = synth::drift_market(&[0.01, -0.01], 0.01, 120, s);
    let data = Arc::new(EnvData::new(&market, None).unwrap());
    let cfg = EnvConfig::new(4, 2, 2);
    let env = PortfolioEnv::over_all(cfg.clone(), data.clone()).unwrap();
    let policy = train_policy(env, &PpoConfig { seed: s, ..ppo.clone() }).unwrap();
    let mut env = PortfolioEnv::over_all(cfg, data).unwrap();
    let mut state = env.reset();
    let mut w0 = 0.0;
    let mut n = 0.0;
    loop {
        let out = env.step(&policy.act(&state).unwrap()).unwrap();
        w0 += out.record.weights.0[0];
        n += 1.0;
        state = out.state;
        if out.done {
            break;
        }
    }
    w0 / n
}

fn get(k: &str, d: f64) -> f64 {
    std::env::var(k).ok().map_or(d, |v| v.parse().unwrap())
}

fn hybrid(s: u64, fcfg: &ForecasterConfig, ppo: &PpoConfig, window: usize) -> (f64, f64) {
    let n = 32;
    let drifts = synth::spread_drifts(n, -0.004, 0.006, s);
    let market = synth::drift_market(&drifts, get("VOL", 0.02), get("WEEKS", 260.0) as usize, s);
    let split = chronological_split(market.n_rows(), 0.7).unwrap();
    let train = market.slice_rows(split.train.clone());
    let scaler = fit_scaler(&train).unwrap();
    let scaled = apply_scaler(&scaler, &train).unwrap();
    let cols: Vec<Vec<f64>> = (0..n).map(|i| scaled.column(i)).collect();
    let fcfg = ForecasterConfig { seed: seed::derive(s, 1), ..fcfg.clone() };
    let params: Vec<_> = train_forecasters(&cols, &fcfg).unwrap().into_iter().map(|t| t.params).collect();
    let forecasts = predict_rows(&params, &market, &scaler, fcfg.lookback..market.n_rows(), fcfg.lookback).unwrap();
    let data = Arc::new(EnvData::new(&market, Some(&forecasts)).unwrap());
    let template = EnvConfig::new(window, 1, n);
    let range = window.max(fcfg.lookback)..split.train.end;
    let policies = train_ppo(data, range, &template, &PpoConfig { seed: seed::derive(s, 2), ..ppo.clone() }, &[5]).unwrap();
    let ctx = StrategyContext {
        returns: &market,
        classes: &[],
        test: &split.test,
        scores: Some(&forecasts),
        policies: &policies,
        env: &template,
    };
    let specs = [
        StrategySpec::new(StrategyKind::Hybrid { k: 5 }),
        StrategySpec::new(StrategyKind::EqualWeight),
        StrategySpec::new(StrategyKind::SignalOnly { k: 5 }),
        StrategySpec::new(StrategyKind::PolicyOnly { k: 5 }),
    ];
    let hist: Vec<_> = specs.iter().map(|sp| (sp.name.clone(), run_strategy(sp, &ctx).unwrap())).collect();
    let c = compare(&hist, &market, split.test.clone(), 0.001, 0.0, 52.0).unwrap();
    if std::env::var("DIAG").is_ok() {
        for r in &c.results {
            let g = 52.0 * r.gross.iter().sum::<f64>() / r.gross.len() as f64;
            let mut prev = hybrid_alloc::env::WeightVector::uniform(n);
            let mut to = 0.0;
            for w in &r.weights.weights { to += w.turnover(&prev); prev = w.clone(); }
            let planted: f64 = r.mean_weights.iter().zip(&drifts).map(|(w, d)| w * d).sum::<f64>() * 52.0;
            println!("   {:<16} gross {:.4} net {:.4} turnover/wk {:.3} planted {:.4}", r.strategy, g, r.metrics.ann_return, to / r.gross.len() as f64, planted);
        }
        let pol = &policies[&5];
        let first = pol.curves.first().unwrap().mean_reward;
        let last = pol.curves.last().unwrap().mean_reward;
        println!("   train reward first {first:.5} last {last:.5}");
    }
    (c.rows[0].ann_return, c.rows[1].ann_return)
}

fn main() {
    let mut args = std::env::args().skip(1);
    let which = args.next().unwrap_or_else(|| "dominant".into());
    let seeds: u64 = args.next().map_or(10, |s| s.parse().unwrap());

    let ppo = PpoConfig {
        learning_rate: get("LR", 3e-4),
        n_steps: get("NSTEPS", 256.0) as usize,
        minibatch_size: get("MB", 64.0) as usize,
        n_epochs: get("EPOCHS", 10.0) as usize,
        total_timesteps: get("STEPS", 20000.0) as usize,
        gamma: get("GAMMA", 0.9),
        hidden: vec![get("HID", 64.0) as usize; 2],
        ent_coef: get("ENT", 0.0),
        ..Default::default()
    };
    let t0 = Instant::now();
    for s in 0..seeds {
        match which.as_str() {
            "dominant" => println!("seed {s}: mean weight on dominant {:.4}", dominant(s, &ppo)),
            _ => {
                let fcfg = ForecasterConfig {
                    lookback: 8,
                    hidden: 8,
                    max_epochs: 10,
                    batch_size: 32,
                    learning_rate: 0.01,
                    patience: 3,
                    ..Default::default()
                };
                let (h, e) = hybrid(s, &fcfg, &ppo, get("WINDOW", 4.0) as usize);
                println!("seed {s}: hybrid {h:.4} ew {e:.4} {}", if h > e { "win" } else { "LOSS" });
            }
        }
    }
    println!("elapsed {:.1}s", t0.elapsed().as_secs_f64());
}
