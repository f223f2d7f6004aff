//! Price ingestion and return preprocessing.

mod fetch;
mod manifest;
mod prices;
mod resample;
mod returns;
mod scaler;
mod split;

use std::path::PathBuf;

pub use fetch::{fetch_to_cache, FetchProvenance};
pub use manifest::{AssetEntry, Manifest};
pub use prices::{ingest_prices, ingest_series, read_price_csv, CalendarPolicy, PriceSeries, PriceTable};
pub use resample::resample_weekly;
pub use returns::{log_returns, ReturnMatrix};
pub use scaler::{apply_scaler, fit_scaler, Scaler};
pub use split::{chronological_split, SplitPlan};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("asset `{0}` has no observations")]
    EmptySeries(String),
    #[error("only {0} common dates after alignment (need at least 2)")]
    TooFewDates(usize),
    #[error("empty input")]
    Empty,
    #[error("non-positive price {value} for asset `{asset}` on {date}")]
    NonPositivePrice {
        asset: String,
        date: chrono::NaiveDate,
        value: f64,
    },
    #[error("degenerate series: asset column {0} has zero variance")]
    DegenerateSeries(usize),
    #[error("need at least 2 rows to fit a scaler, got {0}")]
    TooFewRows(usize),
    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot split {rows} rows at ratio {ratio} into two non-empty ranges")]
    BadSplit { rows: usize, ratio: f64 },
    #[error("http fetch failed for {url}: {message}")]
    Fetch { url: String, message: String },
}
