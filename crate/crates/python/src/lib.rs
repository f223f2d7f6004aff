//! Python bindings: data preparation, the allocation environment, the Top-K
//! projection, GAE, training entry points, metrics and the CLI stages.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use hybrid_alloc::backtest;
use hybrid_alloc::cli::{self, ExperimentConfig, Stage};
use hybrid_alloc::data::{self, ReturnMatrix};
use hybrid_alloc::env::{self, EnvConfig, EnvData, WeightVector};
use hybrid_alloc::forecast::{self, ForecasterConfig};
use hybrid_alloc::ppo::{self, PpoConfig, TrainedPolicy};
use hybrid_alloc::{io, synth};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<ReturnMatrix> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(PyValueError::new_err("need a non-empty T x N matrix"));
    }
    if rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    Ok(ReturnMatrix::from_rows(rows))
}

/// Map raw logits to long-only weights with at most `k` non-zero entries.
#[pyfunction]
#[pyo3(signature = (logits, k, tau = 0.01))]
fn action_to_weights(logits: Vec<f64>, k: usize, tau: f64) -> Vec<f64> {
    env::action_to_weights(&logits, k, tau).0
}

/// Generalised advantage estimates and value targets.
#[pyfunction]
#[pyo3(signature = (rewards, values, last_value, gamma = 0.99, lam = 0.95, dones = None))]
fn compute_gae(
    rewards: Vec<f64>,
    values: Vec<f64>,
    last_value: f64,
    gamma: f64,
    lam: f64,
    dones: Option<Vec<bool>>,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let dones = dones.unwrap_or_else(|| vec![false; rewards.len()]);
    ppo::compute_gae_with_dones(&rewards, &values, &dones, last_value, gamma, lam).map_err(value_err)
}

/// Weekly log-returns from a T x N price matrix.
#[pyfunction]
fn log_returns(prices: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let m = matrix(prices)?;
    let table = data::PriceTable::new(m.assets, m.timestamps, m.returns).map_err(value_err)?;
    Ok(data::log_returns(&table).map_err(value_err)?.returns)
}

/// Constant-drift Gaussian market, T x N weekly log-returns.
#[pyfunction]
#[pyo3(signature = (drifts, vol, weeks, seed = 0))]
fn synthetic_market(drifts: Vec<f64>, vol: f64, weeks: usize, seed: u64) -> Vec<Vec<f64>> {
    synth::drift_market(&drifts, vol, weeks, seed).returns
}

#[pyclass(get_all, frozen)]
struct Metrics {
    ann_return: f64,
    ann_volatility: f64,
    /// `None` when volatility is zero.
    sharpe: Option<f64>,
    mdd: f64,
}

#[pymethods]
impl Metrics {
    fn __repr__(&self) -> String {
        format!(
            "Metrics(ann_return={}, ann_volatility={}, sharpe={}, mdd={})",
            self.ann_return,
            self.ann_volatility,
            self.sharpe.map_or("None".into(), |s| s.to_string()),
            self.mdd
        )
    }
}

/// Annualised return, volatility, Sharpe ratio and maximum drawdown.
#[pyfunction]
#[pyo3(signature = (net_returns, risk_free = 0.0, periods_per_year = 52.0))]
fn compute_metrics(net_returns: Vec<f64>, risk_free: f64, periods_per_year: f64) -> PyResult<Metrics> {
    let m = backtest::compute_metrics(&net_returns, risk_free, periods_per_year).map_err(value_err)?;
    Ok(Metrics {
        ann_return: m.ann_return,
        ann_volatility: m.ann_volatility,
        sharpe: m.sharpe,
        mdd: m.mdd,
    })
}

/// Compounded equity and drawdowns: `(equity, drawdowns)`.
#[pyfunction]
fn equity_curve(net_returns: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let dates = vec![chrono::NaiveDate::MIN; net_returns.len()];
    let c = backtest::equity_curve(&net_returns, &dates).map_err(value_err)?;
    Ok((c.equity, c.drawdowns))
}

/// Net returns after proportional turnover costs.
#[pyfunction]
#[pyo3(signature = (gross, weights, tc = 0.001))]
fn apply_costs(gross: Vec<f64>, weights: Vec<Vec<f64>>, tc: f64) -> PyResult<Vec<f64>> {
    let w: Vec<WeightVector> = weights.into_iter().map(WeightVector).collect();
    backtest::apply_costs(&gross, &w, tc).map_err(value_err)
}

/// The allocation environment over a return matrix (and optional scores).
#[pyclass(unsendable)]
struct PortfolioEnv {
    inner: env::PortfolioEnv,
}

#[pymethods]
impl PortfolioEnv {
    #[new]
    #[pyo3(signature = (returns, window, top_k, scores = None, tc = 0.001, tau = 0.01, lambda_sparse = 0.001))]
    fn new(
        returns: Vec<Vec<f64>>,
        window: usize,
        top_k: usize,
        scores: Option<Vec<Vec<f64>>>,
        tc: f64,
        tau: f64,
        lambda_sparse: f64,
    ) -> PyResult<Self> {
        let r = matrix(returns)?;
        let forecasts = scores
            .map(|s| {
                if s.len() != r.n_rows() {
                    return Err(PyValueError::new_err("scores need one row per return row"));
                }
                Ok(forecast::ForecastMatrix {
                    assets: r.assets.clone(),
                    timestamps: r.timestamps.clone(),
                    start_row: 0,
                    scores: s,
                })
            })
            .transpose()?;
        let data = EnvData::new(&r, forecasts.as_ref()).map_err(value_err)?;
        let config = EnvConfig {
            window,
            tc,
            tau,
            lambda_sparse,
            top_k,
            n_assets: r.n_assets(),
        };
        let inner = env::PortfolioEnv::over_all(config, Arc::new(data)).map_err(value_err)?;
        Ok(Self { inner })
    }

    fn reset(&mut self) -> Vec<f64> {
        self.inner.reset().0
    }

    /// Returns `(state, reward, done, weights)`.
    fn step(&mut self, action: Vec<f64>) -> PyResult<(Vec<f64>, f64, bool, Vec<f64>)> {
        let out = self.inner.step(&action).map_err(value_err)?;
        Ok((out.state.0, out.reward, out.done, out.record.weights.0))
    }

    #[getter]
    fn state_len(&self) -> usize {
        self.inner.config().state_len()
    }

    #[getter]
    fn n_steps(&self) -> usize {
        self.inner.n_steps()
    }

    #[getter]
    fn cumulative_reward(&self) -> f64 {
        self.inner.cumulative_reward()
    }
}

/// A trained allocator.
#[pyclass(frozen)]
struct Policy {
    inner: TrainedPolicy,
}

#[pymethods]
impl Policy {
    /// Deterministic logits for a raw environment state.
    fn act(&self, state: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.act(&env::EnvState(state)).map_err(value_err)
    }

    #[getter]
    fn top_k(&self) -> usize {
        self.inner.top_k
    }

    /// Mean training reward per update.
    #[getter]
    fn curve(&self) -> Vec<f64> {
        self.inner.curves.iter().map(|c| c.mean_reward).collect()
    }

    fn to_json(&self) -> String {
        String::from_utf8(io::to_json_bytes(&self.inner)).expect("JSON is UTF-8")
    }
}

/// Train an allocator on `returns` over every row after the window.
/// `config` is an optional JSON object of PPO settings.
#[pyfunction]
#[pyo3(signature = (returns, window, top_k, config = None, scores = None))]
fn train_allocator(
    py: Python<'_>,
    returns: Vec<Vec<f64>>,
    window: usize,
    top_k: usize,
    config: Option<&str>,
    scores: Option<Vec<Vec<f64>>>,
) -> PyResult<Policy> {
    let env = PortfolioEnv::new(returns, window, top_k, scores, 0.001, 0.01, 0.001)?;
    let cfg: PpoConfig = match config {
        Some(text) => serde_json::from_str(text).map_err(value_err)?,
        None => PpoConfig::default(),
    };
    let inner = py
        .detach(|| ppo::train_policy(env.inner, &cfg).map_err(|e| e.to_string()))
        .map_err(PyRuntimeError::new_err)?;
    Ok(Policy { inner })
}

/// Train one LSTM forecaster on a scaled series and return
/// `(predictions, validation losses)`, where predictions cover every index
/// with a full lookback. `config` is an optional JSON object.
#[pyfunction]
#[pyo3(signature = (series, config = None))]
fn train_forecaster(py: Python<'_>, series: Vec<f64>, config: Option<&str>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let cfg: ForecasterConfig = match config {
        Some(text) => serde_json::from_str(text).map_err(value_err)?,
        None => ForecasterConfig::default(),
    };
    py.detach(|| -> Result<(Vec<f64>, Vec<f64>), String> {
        let trained = forecast::train_forecaster(&series, &cfg).map_err(|e| e.to_string())?;
        let preds = forecast::build_windows(&series, cfg.lookback)
            .iter()
            .map(|(w, _)| {
                forecast::lstm_forward(&trained.params, w, forecast::ForwardMode::Eval)
                    .map(|f| f.prediction)
                    .map_err(|e| e.to_string())
            })
            .collect::<Result<Vec<f64>, String>>()?;
        Ok((preds, trained.history.iter().map(|h| h.val).collect()))
    })
    .map_err(PyRuntimeError::new_err)
}

fn load_config(path: PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> PyResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&path).map_err(value_err)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    Ok(cfg)
}

fn cli_err(e: cli::CliError) -> PyErr {
    PyRuntimeError::new_err(format!("{e} (exit code {})", e.exit_code()))
}

/// Run the `ingest` stage; returns the dataset hash.
#[pyfunction]
#[pyo3(signature = (config, seed = None, out = None))]
fn run_ingest(py: Python<'_>, config: PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> PyResult<String> {
    let cfg = load_config(config, seed, out)?;
    py.detach(|| cli::cmd_ingest(&cfg)).map_err(cli_err)
}

/// Run the `train` stage: "forecaster", "allocator" or "all".
#[pyfunction]
#[pyo3(signature = (config, stage = "all", seed = None, out = None))]
fn run_train(py: Python<'_>, config: PathBuf, stage: &str, seed: Option<u64>, out: Option<PathBuf>) -> PyResult<()> {
    let stage = match stage {
        "forecaster" => Stage::Forecaster,
        "allocator" => Stage::Allocator,
        "all" => Stage::All,
        other => return Err(PyValueError::new_err(format!("unknown stage `{other}`"))),
    };
    let cfg = load_config(config, seed, out)?;
    py.detach(|| cli::cmd_train(&cfg, stage)).map_err(cli_err)
}

/// Run the `backtest` stage; returns the comparison table as CSV.
#[pyfunction]
#[pyo3(signature = (config, seed = None, out = None))]
fn run_backtest(py: Python<'_>, config: PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> PyResult<String> {
    let cfg = load_config(config, seed, out)?;
    py.detach(|| cli::cmd_backtest(&cfg).map(|c| c.to_csv())).map_err(cli_err)
}

#[pymodule]
#[pyo3(name = "hybrid_alloc")]
fn hybrid_alloc_ext(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(action_to_weights, m)?)?;
    m.add_function(wrap_pyfunction!(compute_gae, m)?)?;
    m.add_function(wrap_pyfunction!(log_returns, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_market, m)?)?;
    m.add_function(wrap_pyfunction!(compute_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(equity_curve, m)?)?;
    m.add_function(wrap_pyfunction!(apply_costs, m)?)?;
    m.add_function(wrap_pyfunction!(train_allocator, m)?)?;
    m.add_function(wrap_pyfunction!(train_forecaster, m)?)?;
    m.add_function(wrap_pyfunction!(run_ingest, m)?)?;
    m.add_function(wrap_pyfunction!(run_train, m)?)?;
    m.add_function(wrap_pyfunction!(run_backtest, m)?)?;
    m.add_class::<PortfolioEnv>()?;
    m.add_class::<Policy>()?;
    m.add_class::<Metrics>()?;
    Ok(())
}
