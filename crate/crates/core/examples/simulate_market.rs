//! Runs one market path and prints a coarse trace of price and role counts.
//!
//! `cargo run --release --example simulate_market -- [SET_II|SET_III|SET_IV] [steps] [seed]`

use hiermarket::{simulate, Preset, Scenario, StreamSeed};

fn main() -> hiermarket::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let preset = match args.first().map(String::as_str) {
        Some("SET_III") => Preset::SetIII,
        Some("SET_IV") => Preset::SetIV,
        _ => Preset::SetII,
    };
    let steps = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let seed = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);

    let series = simulate(preset.model(), preset.hierarchy(), Scenario::None, StreamSeed::from_u64(seed), steps)?;
    println!("{} for {steps} steps, seed {seed}", preset.name());
    println!("{:>8} {:>9} {:>5} {:>5} {:>5}", "step", "price", "n_o", "n_p", "n_f");
    for t in (0..=steps).step_by((steps / 20).max(1)) {
        println!(
            "{t:>8} {:>9.2} {:>5} {:>5} {:>5}",
            series.price[t], series.optimists[t], series.pessimists[t], series.fundamentalists[t]
        );
    }
    let max = series.price.iter().copied().fold(f64::MIN, f64::max);
    let min = series.price.iter().copied().fold(f64::MAX, f64::min);
    println!("price range [{min:.2}, {max:.2}] around fundamental {}", preset.model().fundamental);
    Ok(())
}
