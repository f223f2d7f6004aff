//! Shared file helpers: content hashing, JSON containers and dated-matrix CSVs.

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// Write `bytes` to `path`, creating parent directories.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

/// Pretty JSON with a trailing newline. Field order follows the struct
/// definition, so output is byte-stable for equal values.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable value");
    bytes.push(b'\n');
    bytes
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<String> {
    let bytes = to_json_bytes(value);
    write_bytes(path, &bytes)?;
    Ok(sha256_hex(&bytes))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> std::io::Result<T> {
    let bytes = fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

/// Format a float for CSV output. `{:?}` prints the shortest representation
/// that round-trips exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NA".to_string()
    } else {
        format!("{x:?}")
    }
}

/// CSV with header `date,<columns...>` and one row per date.
pub fn dated_matrix_csv(columns: &[String], dates: &[NaiveDate], rows: &[Vec<f64>]) -> String {
    let mut out = String::from("date");
    for c in columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (d, row) in dates.iter().zip(rows) {
        out.push_str(&d.format("%Y-%m-%d").to_string());
        for x in row {
            out.push(',');
            out.push_str(&fmt_f64(*x));
        }
        out.push('\n');
    }
    out
}

/// Parse a `date,<columns...>` CSV back into (columns, dates, rows).
pub fn parse_dated_matrix_csv(text: &str) -> Result<(Vec<String>, Vec<NaiveDate>, Vec<Vec<f64>>), String> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    if headers.get(0) != Some("date") {
        return Err("first column must be `date`".into());
    }
    let columns: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut dates = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| format!("row {}: {e}", i + 2))?;
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|e| format!("row {}: {e}", i + 2))?;
        let row = rec
            .iter()
            .skip(1)
            .map(|s| if s == "NA" { Ok(f64::NAN) } else { s.parse::<f64>() })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("row {}: {e}", i + 2))?;
        if row.len() != columns.len() {
            return Err(format!("row {}: expected {} values", i + 2, columns.len()));
        }
        dates.push(date);
        rows.push(row);
    }
    Ok((columns, dates, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dated_csv_roundtrip() {
        let cols = vec!["A".to_string(), "B".to_string()];
        let dates = vec![NaiveDate::from_ymd_opt(2024, 1, 5).unwrap()];
        let rows = vec![vec![0.1 + 0.2, -1e-17]];
        let text = dated_matrix_csv(&cols, &dates, &rows);
        assert!(text.starts_with("date,A,B\n2024-01-05,"));
        let (c, d, r) = parse_dated_matrix_csv(&text).unwrap();
        assert_eq!((c, d, r), (cols, dates, rows));
    }
}
