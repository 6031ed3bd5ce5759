//! Fundamental deviation under symmetric and asymmetric echo chambers.

use hiermarket::stylized::fundamental_deviation;
use hiermarket::{simulate, EchoConfig, EchoMode, HierarchyParams, Preset, Scenario, StreamSeed};

fn main() -> hiermarket::Result<()> {
    let model = Preset::SetII.model();
    for b in [0.5, 2.0] {
        let hp = HierarchyParams {
            strength: b,
            ..Preset::SetII.hierarchy()
        };
        for mode in [EchoMode::Symmetric, EchoMode::Asymmetric] {
            let mut total = 0.0;
            for i in 0..8 {
                let s = simulate(model, hp, Scenario::Echo(EchoConfig::new(mode, 2.0)), StreamSeed::derive(4, "echo", i), 20_000)?;
                total += fundamental_deviation(&s.price, &s.fundamental)?;
            }
            println!("b={b} {mode:?}: mean F_sigma {:.4}", total / 8.0);
        }
    }
    Ok(())
}
