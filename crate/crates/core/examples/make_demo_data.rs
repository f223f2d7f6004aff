//! Write a synthetic daily-price dataset for trying the CLI.
//!
//! cargo run --example make_demo_data -- <dir> [n_assets] [weeks] [seed]

use std::path::PathBuf;

use hybrid_alloc::synth;

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "demo/data".into()));
    let n: usize = args.next().map_or(8, |s| s.parse().expect("n_assets"));
    let weeks: usize = args.next().map_or(260, |s| s.parse().expect("weeks"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));

    let drifts = synth::spread_drifts(n, -0.004, 0.006, seed);
    let market = synth::drift_market(&drifts, 0.02, weeks, seed);
    let classes: Vec<&str> = (0..n).map(|i| ["us-equity", "id-equity", "bond", "crypto"][i % 4]).collect();
    let manifest = synth::write_daily_csvs(&market, &classes, &dir).expect("write dataset");
    println!("{}", manifest.display());
}
