//! How far opinions travel through the community tree as diffusion grows.
//!
//! Half the traders under the first top-level community are optimists, the
//! rest of the market is pessimistic. A leaf in a different branch sees more
//! of that optimism as `phi` increases.

use hiermarket::{counts, HierarchyParams, HierarchyTree, TraderRole};

fn main() -> hiermarket::Result<()> {
    for phi in [0.0, 0.1, 0.5, 2.0, 10.0] {
        let hp = HierarchyParams {
            diffusion: phi,
            ..HierarchyParams::default()
        };
        let n = counts(&hp)?.traders;
        let branch = n / hp.branching;
        let roles = (0..n)
            .map(|i| if i < branch && i % 2 == 0 { TraderRole::Optimist } else { TraderRole::Pessimist })
            .collect();
        let mut tree = HierarchyTree::new(&hp, roles)?;
        tree.refresh(&hp);
        let (inside_o, inside_p) = tree.local_opinion(0);
        let (outside_o, outside_p) = tree.local_opinion(n - 1);
        println!(
            "phi={phi:<5} optimist share seen inside branch {:.3}, outside {:.3}",
            inside_o / (inside_o + inside_p),
            outside_o / (outside_o + outside_p)
        );
    }
    Ok(())
}
