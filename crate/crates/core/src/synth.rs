//! Synthetic markets with planted structure, for tests and demos.

use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand_distr::{Distribution, Normal};

use crate::data::ReturnMatrix;
use crate::io;
use crate::seed;

/// Weekly log-returns `r[t][i] = drifts[i] + vol * z`, `z ~ N(0, 1)`.
pub fn drift_market(drifts: &[f64], vol: f64, weeks: usize, seed: u64) -> ReturnMatrix {
    let mut rng = seed::rng(seed::derive_str(seed, "synthetic-market"));
    let noise = Normal::new(0.0, vol.max(0.0)).expect("finite volatility");
    let rows = (0..weeks)
        .map(|_| drifts.iter().map(|d| d + noise.sample(&mut rng)).collect())
        .collect();
    ReturnMatrix::from_rows(rows)
}

/// `n` drifts spread evenly over `[lo, hi]`, shuffled by `seed` so the best
/// asset is not always the last column.
pub fn spread_drifts(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    use rand::seq::SliceRandom;
    let mut d: Vec<f64> = (0..n)
        .map(|i| if n == 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect();
    d.shuffle(&mut seed::rng(seed::derive_str(seed, "drift-order")));
    d
}

/// Write daily `date,close` CSVs (Mon..Fri, closes compounding the weekly
/// returns on Fridays) and a JSON manifest into `dir`. Returns the manifest path.
pub fn write_daily_csvs(returns: &ReturnMatrix, classes: &[&str], dir: &Path) -> std::io::Result<std::path::PathBuf> {
    // First Friday carries the base price, so T returns need T + 1 weeks.
    let first_friday = NaiveDate::from_ymd_opt(2018, 1, 5).expect("valid date");
    let mut entries = Vec::new();
    for (i, asset) in returns.assets.iter().enumerate() {
        let mut text = String::from("date,close\n");
        let mut price = 100.0;
        for week in 0..=returns.n_rows() {
            let friday = first_friday + Duration::weeks(week as i64);
            if week > 0 {
                let r = returns.returns[week - 1][i];
                // Mon..Thu drift part of the way, Friday lands on the weekly close.
                for d in 1..=4 {
                    let day = friday - Duration::days(5 - d);
                    let p = price * (r * d as f64 / 5.0).exp();
                    text.push_str(&format!("{},{}\n", day.format("%Y-%m-%d"), io::fmt_f64(p)));
                }
                price *= r.exp();
            }
            text.push_str(&format!("{},{}\n", friday.format("%Y-%m-%d"), io::fmt_f64(price)));
        }
        let file = format!("{asset}.csv");
        io::write_bytes(&dir.join(&file), text.as_bytes())?;
        let class = classes.get(i).copied().unwrap_or("other");
        entries.push(serde_json::json!({ "id": asset, "path": file, "class": class }));
    }
    let manifest = dir.join("manifest.json");
    io::write_bytes(&manifest, &io::to_json_bytes(&serde_json::json!({ "assets": entries })))?;
    Ok(manifest)
}
