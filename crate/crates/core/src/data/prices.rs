use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{DataError, Manifest};

/// Aligned close prices, one row per date and one column per asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceTable {
    pub assets: Vec<String>,
    pub timestamps: Vec<NaiveDate>,
    /// `prices[t][i]`: close of asset `i` on `timestamps[t]`.
    pub prices: Vec<Vec<f64>>,
}

impl PriceTable {
    /// Build a table, checking shape, positivity and calendar order.
    pub fn new(assets: Vec<String>, timestamps: Vec<NaiveDate>, prices: Vec<Vec<f64>>) -> Result<Self, DataError> {
        if assets.is_empty() || timestamps.is_empty() {
            return Err(DataError::Empty);
        }
        if timestamps.len() < 2 {
            return Err(DataError::TooFewDates(timestamps.len()));
        }
        if prices.len() != timestamps.len() {
            return Err(DataError::DimensionMismatch {
                expected: timestamps.len(),
                got: prices.len(),
            });
        }
        if timestamps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DataError::Manifest {
                path: Default::default(),
                message: "timestamps must be strictly increasing".into(),
            });
        }
        for (t, row) in prices.iter().enumerate() {
            if row.len() != assets.len() {
                return Err(DataError::DimensionMismatch {
                    expected: assets.len(),
                    got: row.len(),
                });
            }
            for (i, &p) in row.iter().enumerate() {
                if !(p > 0.0 && p.is_finite()) {
                    return Err(DataError::NonPositivePrice {
                        asset: assets[i].clone(),
                        date: timestamps[t],
                        value: p,
                    });
                }
            }
        }
        Ok(Self {
            assets,
            timestamps,
            prices,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn n_rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.prices.iter().map(|r| r[i]).collect()
    }
}

/// One asset's raw observations in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub id: String,
    pub observations: Vec<(NaiveDate, f64)>,
}

/// How per-asset calendars are combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalendarPolicy {
    /// Union of all dates from the latest first observation onward; gaps are
    /// forward-filled from each asset's last prior close.
    #[default]
    Union,
    /// Only dates on which every asset has an observation.
    Intersection,
}

/// Parse a `date,close` CSV with ISO-8601 dates.
///
/// Rows are sorted by date; a repeated date keeps its last row.
pub fn read_price_csv(path: &Path) -> Result<Vec<(NaiveDate, f64)>, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_price_csv(&text, path)
}

pub(crate) fn parse_price_csv(text: &str, path: &Path) -> Result<Vec<(NaiveDate, f64)>, DataError> {
    let parse_err = |line: usize, message: String| DataError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let date_col = headers.iter().position(|h| h.eq_ignore_ascii_case("date"));
    let close_col = headers.iter().position(|h| h.eq_ignore_ascii_case("close"));
    let (Some(date_col), Some(close_col)) = (date_col, close_col) else {
        return Err(parse_err(1, "header must contain `date` and `close`".into()));
    };

    let mut by_date = BTreeMap::new();
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        let raw_date = rec.get(date_col).unwrap_or("");
        // Accept full timestamps by keeping the date part.
        let date_part = raw_date.get(..10).unwrap_or(raw_date);
        let date = NaiveDate::parse_from_str(date_part, "%Y-%m-%d")
            .map_err(|e| parse_err(line, format!("bad date `{raw_date}`: {e}")))?;
        let raw_close = rec.get(close_col).unwrap_or("");
        if raw_close.is_empty() {
            // Missing close: left to forward-fill.
            continue;
        }
        let close: f64 = raw_close
            .parse()
            .map_err(|e| parse_err(line, format!("bad close `{raw_close}`: {e}")))?;
        if !(close > 0.0 && close.is_finite()) {
            return Err(parse_err(line, format!("close must be positive, got {close}")));
        }
        by_date.insert(date, close);
    }
    Ok(by_date.into_iter().collect())
}

/// Load every manifest asset and align them into one table.
pub fn ingest_prices(manifest: &Manifest, policy: CalendarPolicy) -> Result<PriceTable, DataError> {
    let series = manifest
        .assets
        .iter()
        .map(|a| {
            Ok(PriceSeries {
                id: a.id.clone(),
                observations: read_price_csv(&manifest.resolve(a))?,
            })
        })
        .collect::<Result<Vec<_>, DataError>>()?;
    ingest_series(&series, policy)
}

/// Align in-memory series onto a shared calendar.
///
/// Under [`CalendarPolicy::Union`] the table starts at the latest first
/// observation across assets, so no value is ever filled in before an
/// asset's first real close.
pub fn ingest_series(series: &[PriceSeries], policy: CalendarPolicy) -> Result<PriceTable, DataError> {
    if series.is_empty() {
        return Err(DataError::Empty);
    }
    let mut maps = Vec::with_capacity(series.len());
    for s in series {
        let map: BTreeMap<NaiveDate, f64> = s.observations.iter().copied().collect();
        if map.is_empty() {
            return Err(DataError::EmptySeries(s.id.clone()));
        }
        maps.push(map);
    }
    let start = maps
        .iter()
        .map(|m| *m.keys().next().expect("non-empty"))
        .max()
        .expect("non-empty");

    let calendar: Vec<NaiveDate> = match policy {
        CalendarPolicy::Union => {
            let all: BTreeSet<NaiveDate> = maps.iter().flat_map(|m| m.keys().copied()).collect();
            all.into_iter().filter(|d| *d >= start).collect()
        }
        CalendarPolicy::Intersection => maps[0]
            .keys()
            .copied()
            .filter(|d| maps.iter().all(|m| m.contains_key(d)))
            .collect(),
    };
    if calendar.len() < 2 {
        return Err(DataError::TooFewDates(calendar.len()));
    }

    let mut prices = vec![Vec::with_capacity(series.len()); calendar.len()];
    for map in &maps {
        for (row, date) in prices.iter_mut().zip(&calendar) {
            // Last observation at or before `date`; always exists since
            // `date >= start >= first observation`.
            let (_, &p) = map.range(..=*date).next_back().expect("prior observation");
            row.push(p);
        }
    }
    PriceTable::new(series.iter().map(|s| s.id.clone()).collect(), calendar, prices)
}
