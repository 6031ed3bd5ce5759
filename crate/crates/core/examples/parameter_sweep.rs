//! Sweeps hierarchy strength and writes the run's CSV and JSON exports.
//!
//! `cargo run --release --example parameter_sweep -- [out_dir]`

use std::path::PathBuf;

use hiermarket::harness::{export, run_experiment, ExperimentConfig};
use hiermarket::Preset;

fn main() -> hiermarket::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out/sweep_example"));
    let cfg = ExperimentConfig::from_preset(Preset::SetII, 20_000, 8, 5).with_sweep("b", vec![0.0, 0.5, 1.0, 2.0])?;
    let record = run_experiment(&cfg, None)?;
    println!("{:>5} {:>10} {:>10} {:>10}", "b", "volatility", "F_sigma", "explosive");
    for g in &record.groups {
        let a = &g.aggregate;
        println!(
            "{:>5} {:>10.4} {:>10.4} {:>10.2}",
            g.value.unwrap_or(f64::NAN),
            a.volatility_mean.unwrap_or(f64::NAN),
            a.fundamental_deviation_mean.unwrap_or(f64::NAN),
            a.explosive_fraction.unwrap_or(f64::NAN)
        );
    }
    for path in export(&record, &out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
