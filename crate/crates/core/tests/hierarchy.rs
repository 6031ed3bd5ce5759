mod common;

use common::{as_arrays, ReferenceTree};
use hiermarket::{counts, HierarchyParams, HierarchyTree, TraderRole};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(levels: usize, branching: usize, diffusion: f64, w: f64, u: f64) -> HierarchyParams {
    HierarchyParams {
        levels,
        branching,
        diffusion,
        optimist_influence: w,
        pessimist_influence: u,
        strength: 1.0,
    }
}

fn random_roles(n: usize, rng: &mut impl Rng) -> Vec<TraderRole> {
    (0..n)
        .map(|_| match rng.random_range(0..3) {
            0 => TraderRole::Optimist,
            1 => TraderRole::Pessimist,
            _ => TraderRole::Fundamentalist,
        })
        .collect()
}

fn role_strategy(n: usize) -> impl Strategy<Value = Vec<TraderRole>> {
    prop::collection::vec(
        prop_oneof![
            Just(TraderRole::Optimist),
            Just(TraderRole::Pessimist),
            Just(TraderRole::Fundamentalist)
        ],
        n,
    )
}

#[test]
fn passes_match_recursive_reference_on_small_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for levels in 2..=3 {
        for branching in 2..=3 {
            let reference = ReferenceTree { levels, branching };
            for _ in 0..50 {
                let (w, u, phi) = (rng.random_range(0.5..3.0), rng.random_range(0.5..3.0), rng.random_range(0.0..2.0));
                let hp = params(levels, branching, phi, w, u);
                let roles = random_roles(counts(&hp).unwrap().traders, &mut rng);
                let mut tree = HierarchyTree::new(&hp, roles.clone()).unwrap();
                tree.backward_pass(&hp);
                let back = reference.backward(&roles, w, u);
                assert_eq!(as_arrays(tree.nodes()), back, "L={levels} k={branching}");
                tree.forward_pass(phi);
                assert_eq!(as_arrays(tree.nodes()), reference.forward(&back, phi), "L={levels} k={branching}");
            }
        }
    }
}

#[test]
fn huge_diffusion_approaches_global_opinion() {
    let hp = params(5, 5, 1e6, 1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let mut roles = random_roles(625, &mut rng);
        roles.shuffle(&mut rng);
        let o = roles.iter().filter(|r| **r == TraderRole::Optimist).count() as f64;
        let p = roles.iter().filter(|r| **r == TraderRole::Pessimist).count() as f64;
        let global = (o - p) / (o + p);
        let mut tree = HierarchyTree::new(&hp, roles).unwrap();
        tree.refresh(&hp);
        for leaf in 0..625 {
            let (co, cp) = tree.local_opinion(leaf);
            assert!(((co - cp) / (co + cp) - global).abs() < 1e-3, "leaf {leaf}");
        }
    }
}

#[test]
fn count_identity() {
    for levels in 2..=7 {
        for branching in 2..=6 {
            let c = counts(&params(levels, branching, 0.5, 1.0, 1.0)).unwrap();
            let total = (branching.pow(levels as u32) - 1) / (branching - 1);
            assert_eq!(c.traders + c.communities, total);
        }
    }
}

proptest! {
    #[test]
    fn backward_pass_is_linear(roles in role_strategy(27), c in 0.01f64..100.0) {
        let hp = params(4, 3, 0.5, 1.0, 1.0);
        let mut a = HierarchyTree::new(&hp, roles).unwrap();
        a.backward_pass(&hp);
        let mut s = HierarchyTree::new(&hp, a.roles().to_vec()).unwrap();
        s.backward_pass_with(|role, _| hiermarket::CommunityState::leaf(role, 1.0, 1.0) * c);
        for (x, y) in a.nodes().iter().zip(s.nodes()) {
            for (xi, yi) in x.as_array().iter().zip(y.as_array()) {
                prop_assert!((xi * c - yi).abs() <= 1e-12 * c.max(1.0));
            }
        }
    }

    #[test]
    fn unit_influence_states_sum_to_one(roles in role_strategy(64)) {
        let hp = params(4, 4, 0.5, 1.0, 1.0);
        let mut t = HierarchyTree::new(&hp, roles).unwrap();
        t.backward_pass(&hp);
        for s in t.nodes() {
            prop_assert!((s.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn passes_preserve_non_negativity(
        roles in role_strategy(25),
        w in 0.0f64..10.0,
        u in 0.0f64..10.0,
        phi in 0.0f64..50.0,
    ) {
        let hp = params(3, 5, phi, w, u);
        let mut t = HierarchyTree::new(&hp, roles).unwrap();
        for _ in 0..3 {
            t.refresh(&hp);
            for s in t.nodes() {
                prop_assert!(s.as_array().iter().all(|v| *v >= 0.0));
            }
        }
    }
}
