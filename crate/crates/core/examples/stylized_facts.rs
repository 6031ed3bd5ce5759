//! Stylized-fact report for a few simulated paths of one preset.

use hiermarket::stylized::{StylizedConfig, StylizedReport};
use hiermarket::{simulate, Preset, Scenario, StreamSeed};

fn main() -> hiermarket::Result<()> {
    let preset = Preset::SetIV;
    let cfg = StylizedConfig::default();
    for i in 0..5 {
        let s = simulate(preset.model(), preset.hierarchy(), Scenario::None, StreamSeed::derive(9, "example", i), 40_000)?;
        let r = StylizedReport::compute(&s.price, Some(&s.fundamental), &cfg)?;
        let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
        println!(
            "run {i}: hill(10%)={} kurtosis 1/10/50 = {} {} {} acf|r|={} acf r^2={} beta={} vol={:.3} F_sigma={}",
            show(r.tail_alpha(0.10)),
            show(r.kurtosis_at(1)),
            show(r.kurtosis_at(10)),
            show(r.kurtosis_at(50)),
            show(r.acf_abs),
            show(r.acf_sq),
            show(r.decay.map(|d| d.exponent)),
            r.volatility,
            show(r.fundamental_deviation),
        );
    }
    Ok(())
}
