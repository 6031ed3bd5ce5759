//! SADF/GSADF on a simulated path with strong hierarchy, plus date-stamped
//! explosive episodes.

use hiermarket::bubble::{detect, BubbleConfig};
use hiermarket::{simulate, HierarchyParams, Preset, Scenario, StreamSeed};

fn main() -> hiermarket::Result<()> {
    let hp = HierarchyParams {
        strength: 2.0,
        ..Preset::SetII.hierarchy()
    };
    let cfg = BubbleConfig::default();
    for seed in 0..5 {
        let s = simulate(Preset::SetII.model(), hp, Scenario::None, StreamSeed::from_u64(seed), 40_000)?;
        let r = detect(&s.price, &cfg)?;
        println!(
            "seed {seed}: n={} SADF {:.2} (cv {:.2}) GSADF {:.2} (cv {:.2}) explosive={}",
            r.observations,
            r.sadf_stat.unwrap_or(f64::NAN),
            r.sadf_cv,
            r.gsadf_stat.unwrap_or(f64::NAN),
            r.gsadf_cv,
            r.gsadf_significant
        );
        for iv in &r.explosive_intervals {
            println!("    steps {}..{}", iv.start, iv.end);
        }
    }
    Ok(())
}
