//! A pump-and-dump scheme judged against an uncorrupted baseline ensemble.

use hiermarket::harness::{run_experiment, ExperimentConfig};
use hiermarket::{Preset, PumpDumpConfig, Scenario};

fn main() -> hiermarket::Result<()> {
    let mut cfg = ExperimentConfig::from_preset(Preset::SetII, 2000, 20, 3);
    cfg.model.discount = 0.3;
    cfg.model.chartist_volume = 0.02;
    cfg.model.trend_sensitivity = 0.05;
    cfg.model.profit_sensitivity = 0.2;
    cfg.hierarchy.strength = 3.0;
    cfg.scenario = Scenario::PumpDump(PumpDumpConfig {
        target: 1,
        start: 100,
        end: 1000,
        signal: 20.0,
    });
    cfg.validate()?;
    let record = run_experiment(&cfg, None)?;
    let group = &record.groups[0];
    let mut maxima = group.baseline_maxima.clone().unwrap_or_default();
    maxima.sort_by(f64::total_cmp);
    println!("baseline peak range [{:.2}, {:.2}]", maxima[0], maxima[maxima.len() - 1]);
    for t in &group.trials {
        println!(
            "trial {:>2}: peak {:.2} success {}",
            t.trial,
            t.max_price.unwrap_or(f64::NAN),
            t.pnd_success.unwrap_or(false)
        );
    }
    println!("success rate {:.2}", group.aggregate.pnd_success_rate.unwrap_or(0.0));
    Ok(())
}
