//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any fails. Pass criterion numbers as arguments to run
//! a subset, e.g. `cargo test --release --test acceptance -- 2 5`.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};

use common::{as_arrays, binomial_upper_tail, mean, spearman, welch_greater, ReferenceTree};
use hiermarket::bubble::{adf_stat, gsadf, sadf, CriticalValueTable, Level, TestKind};
use hiermarket::harness::{load_config, run_experiment, ExperimentConfig, RunRecord};
use hiermarket::scenario::{baseline_maxima, pnd_success};
use hiermarket::stylized::{acf, fit_power_law, hill_alpha};
use hiermarket::{
    counts, simulate, EchoConfig, EchoMode, HierarchyParams, HierarchyTree, ModelParams, Preset, PumpDumpConfig,
    Scenario, Simulation, StreamSeed, TraderRole,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(checks: &[(&str, bool)], detail: String) -> Self {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
        let detail = if failed.is_empty() {
            detail
        } else {
            format!("{detail}; failed: {}", failed.join(", "))
        };
        Outcome {
            pass: failed.is_empty(),
            detail,
        }
    }
}

fn run(cfg: &ExperimentConfig) -> RunRecord {
    run_experiment(cfg, None).expect("experiment runs")
}

fn group_values(record: &RunRecord, point: usize, f: impl Fn(&hiermarket::harness::TrialRecord) -> Option<f64>) -> Vec<f64> {
    record.groups[point].trials.iter().filter_map(f).collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |x| format!("{x:.3}"))
}

fn stylized_ranges() -> Outcome {
    let mut checks = Vec::new();
    let mut lines = Vec::new();
    for (name, preset) in [("II", Preset::SetII), ("III", Preset::SetIII), ("IV", Preset::SetIV)] {
        let rec = run(&ExperimentConfig::from_preset(preset, 40_000, 50, 2024));
        let a = &rec.groups[0].aggregate;
        let hill = a.hill_mean.iter().find(|(f, _)| *f == 0.10).and_then(|(_, v)| *v);
        let k: Vec<Option<f64>> = [1, 10, 50]
            .iter()
            .map(|h| a.kurtosis_mean.iter().find(|(t, _)| t == h).and_then(|(_, v)| *v))
            .collect();
        let ladder = match (k[0], k[1], k[2]) {
            (Some(a), Some(b), Some(c)) => a > b && b > c && c.abs() < 0.5,
            _ => false,
        };
        checks.push((format!("SET_{name} hill"), hill.is_some_and(|h| (2.0..=6.0).contains(&h))));
        checks.push((format!("SET_{name} acf_abs"), a.acf_abs_mean.is_some_and(|v| v > 0.05)));
        checks.push((format!("SET_{name} acf_sq"), a.acf_sq_mean.is_some_and(|v| v > 0.05)));
        checks.push((format!("SET_{name} kurtosis"), ladder));
        checks.push((
            format!("SET_{name} decay"),
            a.decay_exponent_mean.is_some_and(|b| (0.5..=1.1).contains(&b)),
        ));
        lines.push(format!(
            "SET_{name} hill10={} k1={} k10={} k50={} acf_abs={} acf_sq={} beta={}",
            fmt_opt(hill),
            fmt_opt(k[0]),
            fmt_opt(k[1]),
            fmt_opt(k[2]),
            fmt_opt(a.acf_abs_mean),
            fmt_opt(a.acf_sq_mean),
            fmt_opt(a.decay_exponent_mean)
        ));
    }
    let named: Vec<(&str, bool)> = checks.iter().map(|(n, b)| (n.as_str(), *b)).collect();
    Outcome::new(&named, lines.join(" | "))
}

fn strength_trend() -> Outcome {
    let cfg = ExperimentConfig::from_preset(Preset::SetII, 20_000, 20, 2025)
        .with_sweep("b", vec![0.0, 2.0])
        .unwrap();
    let rec = run(&cfg);
    let v0 = group_values(&rec, 0, |t| t.volatility());
    let v2 = group_values(&rec, 1, |t| t.volatility());
    let (e0, e2) = (
        rec.groups[0].aggregate.explosive_fraction.unwrap_or(0.0),
        rec.groups[1].aggregate.explosive_fraction.unwrap_or(0.0),
    );
    let p = welch_greater(&v2, &v0);
    Outcome::new(
        &[
            ("volatility ratio >= 1.5", mean(&v2) >= 1.5 * mean(&v0)),
            ("welch p < 0.05", p < 0.05),
            ("explosive fraction rises", e2 > e0),
        ],
        format!(
            "vol b=0 {:.4}, b=2 {:.4} (ratio {:.2}, p={p:.2e}); explosive {e0:.2} -> {e2:.2}",
            mean(&v0),
            mean(&v2),
            mean(&v2) / mean(&v0)
        ),
    )
}

fn efficiency_trend() -> Outcome {
    let phis = vec![0.1, 0.5, 2.0];
    let cfg = ExperimentConfig::from_preset(Preset::SetIV, 20_000, 20, 2026)
        .with_sweep("phi", phis.clone())
        .unwrap();
    let rec = run(&cfg);
    let vols: Vec<f64> = (0..3).map(|j| mean(&group_values(&rec, j, |t| t.volatility()))).collect();
    let rho = spearman(&phis, &vols);
    Outcome::new(
        &[("spearman > 0", rho > 0.0)],
        format!("mean volatility {vols:.4?} at phi {phis:?}; spearman {rho:.2}"),
    )
}

fn echo_run(mode: EchoMode, strength: f64, seed: u64) -> Vec<f64> {
    let mut cfg = ExperimentConfig::from_preset(Preset::SetII, 20_000, 20, seed);
    cfg.hierarchy.strength = strength;
    cfg.scenario = Scenario::Echo(EchoConfig::new(mode, 2.0));
    cfg.validate().unwrap();
    let rec = run(&cfg);
    group_values(&rec, 0, |t| t.fundamental_deviation())
}

fn asymmetric_echo() -> Outcome {
    let asym = echo_run(EchoMode::Asymmetric, 2.0, 2027);
    let sym = echo_run(EchoMode::Symmetric, 2.0, 2027);
    let weak = echo_run(EchoMode::Asymmetric, 0.5, 2027);
    let p = welch_greater(&asym, &sym);
    Outcome::new(
        &[
            ("asymmetric > symmetric, p < 0.05", p < 0.05),
            ("asymmetric rises from b=0.5 to b=2", mean(&asym) > mean(&weak)),
        ],
        format!(
            "F_sigma asym b=2 {:.4}, sym b=2 {:.4} (p={p:.2e}), asym b=0.5 {:.4}",
            mean(&asym),
            mean(&sym),
            mean(&weak)
        ),
    )
}

fn null_success_rate(model: ModelParams, hp: HierarchyParams, evaluations: usize, steps: usize) -> f64 {
    let mut hits = 0;
    for i in 0..evaluations {
        let baselines: Vec<_> = (0..50)
            .map(|j| {
                let seed = StreamSeed::derive(31, "null-baseline", (i * 50 + j) as u64);
                simulate(model, hp, Scenario::None, seed, steps).unwrap()
            })
            .collect();
        let maxima = baseline_maxima(&baselines, 0);
        let candidate = simulate(model, hp, Scenario::None, StreamSeed::derive(31, "null-candidate", i as u64), steps).unwrap();
        if pnd_success(&candidate, &maxima, 0).unwrap() {
            hits += 1;
        }
    }
    hits as f64 / evaluations as f64
}

fn pump_and_dump() -> Outcome {
    let null = null_success_rate(Preset::SetII.model(), Preset::SetII.hierarchy(), 200, 1000);

    let mut cfg = ExperimentConfig::from_preset(Preset::SetII, 2000, 50, 2028);
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
    cfg.validate().unwrap();
    let rec = run(&cfg);
    let successes = rec.trials().filter(|t| t.pnd_success == Some(true)).count();
    let p = binomial_upper_tail(successes as u64, 50, 0.05);
    Outcome::new(
        &[
            ("null rate within 5 +- 3 pp", (0.02..=0.08).contains(&null)),
            ("corrupted binomial p < 0.05", p < 0.05),
        ],
        format!("null rate {:.1}% over 200; corrupted {successes}/50 (p={p:.2e})", null * 100.0),
    )
}

fn random_walk(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for t in 1..n {
        y[t] = y[t - 1] + rng.sample::<f64, _>(StandardNormal);
    }
    y
}

/// Right-tail quantiles (90%, 95%) of the Dickey-Fuller t-statistic with an intercept.
fn dickey_fuller_cv(n: usize) -> [f64; 2] {
    if n < 250 {
        [-0.42, -0.05]
    } else {
        [-0.44, -0.07]
    }
}

fn estimator_oracles() -> Outcome {
    let mut checks: Vec<(String, bool)> = Vec::new();
    let mut notes = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let pareto = Pareto::new(1.0, 3.0).unwrap();
    let x: Vec<f64> = (0..100_000).map(|_| pareto.sample(&mut rng)).collect();
    let alpha = hill_alpha(&x, 0.05).unwrap();
    checks.push(("hill within 5%".into(), (alpha / 3.0 - 1.0).abs() < 0.05));
    notes.push(format!("hill {alpha:.3}"));

    let mut ar = vec![0.0; 100_000];
    for t in 1..ar.len() {
        ar[t] = 0.8 * ar[t - 1] + rng.sample::<f64, _>(StandardNormal);
    }
    let r1 = acf(&ar, 1).unwrap();
    checks.push(("ar1 acf within 0.01".into(), (r1 - 0.8).abs() < 0.01));
    notes.push(format!("acf1 {r1:.4}"));

    let planted: Vec<f64> = (1..=70).map(|t| 0.5 * (t as f64).powf(-0.7)).collect();
    let fit = fit_power_law(&planted).unwrap();
    checks.push((
        "decay fit to 6 decimals".into(),
        (fit.amplitude - 0.5).abs() < 5e-7 && (fit.exponent - 0.7).abs() < 5e-7,
    ));

    let table = CriticalValueTable::standard();
    let mut dominated = true;
    for row in table.rows() {
        let n = row.n;
        let mut stats = Vec::with_capacity(1000);
        for _ in 0..1000 {
            let y = random_walk(n, &mut rng);
            let a = adf_stat(&y, 0).unwrap();
            let s = sadf(&y, row.r0, 0).stat.unwrap();
            let g = gsadf(&y, row.r0, 0).unwrap();
            dominated &= g >= s;
            stats.push((a, s, g));
        }
        for (col, level) in [Level::P90, Level::P95].into_iter().enumerate() {
            let nominal = level.nominal_size().unwrap();
            let adf_cv = dickey_fuller_cv(n)[col];
            let sadf_cv = table.critical_value(TestKind::Sadf, n, level).unwrap().0;
            let gsadf_cv = table.critical_value(TestKind::Gsadf, n, level).unwrap().0;
            let rate = |f: &dyn Fn(&(f64, f64, f64)) -> bool| stats.iter().filter(|s| f(s)).count() as f64 / 1000.0;
            let rates = [
                ("adf", rate(&|s| s.0 > adf_cv)),
                ("sadf", rate(&|s| s.1 > sadf_cv)),
                ("gsadf", rate(&|s| s.2 > gsadf_cv)),
            ];
            for (name, r) in rates {
                checks.push((format!("{name} n={n} {:.0}%", (1.0 - nominal) * 100.0), (r - nominal).abs() <= 0.03));
            }
            notes.push(format!(
                "n={n}@{:.0}: adf {:.3} sadf {:.3} gsadf {:.3}",
                (1.0 - nominal) * 100.0,
                rates[0].1,
                rates[1].1,
                rates[2].1
            ));
        }
    }
    checks.push(("gsadf >= sadf".into(), dominated));
    let named: Vec<(&str, bool)> = checks.iter().map(|(n, b)| (n.as_str(), *b)).collect();
    Outcome::new(&named, notes.join("; "))
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_hiermarket");
    let work = tempfile::tempdir().unwrap();
    let config = work.path().join("det.toml");
    fs::write(
        &config,
        "preset = \"SET_II\"\nsteps = 3000\ntrials = 4\nmaster_seed = 77\n\n[sweep]\nparam = \"b\"\nvalues = [0.5, 2.0]\n\n[output]\nseries = true\n",
    )
    .unwrap();
    assert!(load_config(&config).is_ok());
    let mut trees = Vec::new();
    for (i, threads) in ["1", "4", "1"].iter().enumerate() {
        let out = work.path().join(format!("out{i}"));
        let status = Command::new(bin)
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(["--threads", threads])
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        trees.push(read_tree(&out));
    }
    let files = trees[0].len();
    Outcome::new(
        &[
            ("repeat run identical", trees[0] == trees[2]),
            ("1 vs 4 workers identical", trees[0] == trees[1]),
        ],
        format!("{files} files compared across 3 runs"),
    )
}

fn fuzz_conservation(rng: &mut ChaCha8Rng, steps: usize) -> bool {
    let mut model = Preset::SetII.model();
    model.trend_sensitivity = rng.random_range(0.0..2.0);
    model.profit_sensitivity = rng.random_range(0.0..2.0);
    model.price_adjust_freq = rng.random_range(0.0..10.0);
    model.noise = rng.random_range(0.0..0.1);
    model.fundamentalist_reaction = rng.random_range(0.001..0.05);
    model.chartist_volume = rng.random_range(0.001..0.1);
    let hp = HierarchyParams {
        levels: rng.random_range(3..=5),
        branching: rng.random_range(2..=5),
        diffusion: rng.random_range(0.0..3.0),
        optimist_influence: rng.random_range(0.5..2.0),
        pessimist_influence: rng.random_range(0.5..2.0),
        strength: rng.random_range(0.0..4.0),
    };
    let scenario = match rng.random_range(0..3) {
        0 => Scenario::None,
        1 => Scenario::Echo(EchoConfig::new(EchoMode::Asymmetric, rng.random_range(1.0..3.0))),
        _ => Scenario::PumpDump(PumpDumpConfig {
            target: 1,
            start: 100,
            end: 5000,
            signal: rng.random_range(0.5..5.0),
        }),
    };
    let total = counts(&hp).unwrap().traders;
    let mut sim = Simulation::new(model, hp, scenario, StreamSeed::from_u64(rng.random())).unwrap();
    (0..steps).all(|_| {
        sim.step();
        sim.state().counts.total() == total && sim.state().price > 0.0
    })
}

fn structural_oracles() -> Outcome {
    let c = counts(&HierarchyParams {
        levels: 5,
        branching: 5,
        ..Default::default()
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let mut reference_ok = true;
    for levels in 2..=3 {
        for branching in 2..=3 {
            let reference = ReferenceTree { levels, branching };
            for _ in 0..20 {
                let (w, u, phi) = (rng.random_range(0.5..3.0), rng.random_range(0.5..3.0), rng.random_range(0.0..2.0));
                let hp = HierarchyParams {
                    levels,
                    branching,
                    diffusion: phi,
                    optimist_influence: w,
                    pessimist_influence: u,
                    strength: 1.0,
                };
                let n = counts(&hp).unwrap().traders;
                let roles: Vec<TraderRole> = (0..n)
                    .map(|_| [TraderRole::Optimist, TraderRole::Pessimist, TraderRole::Fundamentalist][rng.random_range(0..3)])
                    .collect();
                let mut tree = HierarchyTree::new(&hp, roles.clone()).unwrap();
                tree.backward_pass(&hp);
                let back = reference.backward(&roles, w, u);
                reference_ok &= as_arrays(tree.nodes()) == back;
                tree.forward_pass(phi);
                reference_ok &= as_arrays(tree.nodes()) == reference.forward(&back, phi);
            }
        }
    }
    let conserved = (0..5).all(|_| fuzz_conservation(&mut rng, 10_000));
    Outcome::new(
        &[
            ("counts(5,5) = (625, 156)", (c.traders, c.communities) == (625, 156)),
            ("passes match reference", reference_ok),
            ("population conserved", conserved),
        ],
        format!("counts ({}, {}); 5 fuzz runs of 10^4 steps", c.traders, c.communities),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 8] = [
        (1, "stylized-fact ranges", stylized_ranges),
        (2, "hierarchy-strength trend", strength_trend),
        (3, "network-efficiency trend", efficiency_trend),
        (4, "asymmetric echo chamber", asymmetric_echo),
        (5, "pump-and-dump machinery", pump_and_dump),
        (6, "estimator oracles", estimator_oracles),
        (7, "determinism", determinism),
        (8, "structural oracles", structural_oracles),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let outcome = check();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {n} ({name}): {}", outcome.detail);
        if !outcome.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
