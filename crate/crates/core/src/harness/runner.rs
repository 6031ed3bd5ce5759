use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bubble::{self, BubbleReport, CriticalValueTable, Level, TestKind};
use crate::error::{Error, Result};
use crate::hierarchy::HierarchyParams;
use crate::market::{simulate, MarketSeries, ModelParams};
use crate::scenario::{baseline_maxima, pnd_success_prices, Scenario};
use crate::seed::StreamSeed;
use crate::stylized::StylizedReport;

use super::config::{AnalysisConfig, ExperimentConfig};

/// Environment variable read for the worker count when none is given.
pub const THREADS_ENV: &str = "HIERMARKET_THREADS";

/// Seed of trial `trial` at sweep point `point` (`None` without a sweep).
pub fn trial_seed(master: u64, point: Option<usize>, trial: usize) -> StreamSeed {
    labelled_seed(master, point, "trial", trial)
}

/// Seed of the corrupted run in pump-and-dump trial `trial`.
pub fn corrupted_seed(master: u64, point: Option<usize>, trial: usize) -> StreamSeed {
    labelled_seed(master, point, "corrupted", trial)
}

fn labelled_seed(master: u64, point: Option<usize>, label: &str, index: usize) -> StreamSeed {
    match point {
        None => StreamSeed::derive(master, label, index as u64),
        Some(j) => StreamSeed::derive(master, &format!("point{j}/{label}"), index as u64),
    }
}

/// Seed of uncorrupted baseline run `run`.
pub fn baseline_seed(master: u64, point: Option<usize>, run: usize) -> StreamSeed {
    labelled_seed(master, point, "baseline", run)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: StreamSeed,
    pub stylized: Option<StylizedReport>,
    /// Absent when the downsampled series is too short for the critical-value table.
    pub bubble: Option<BubbleReport>,
    /// GSADF above its 90% critical value.
    pub explosive: Option<bool>,
    pub max_price: Option<f64>,
    pub pnd_success: Option<bool>,
    pub error: Option<String>,
    #[serde(skip)]
    pub series: Option<MarketSeries>,
}

impl TrialRecord {
    pub fn volatility(&self) -> Option<f64> {
        self.stylized.as_ref().map(|s| s.volatility)
    }

    pub fn fundamental_deviation(&self) -> Option<f64> {
        self.stylized.as_ref().and_then(|s| s.fundamental_deviation)
    }
}

/// Means over the trials where a value is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: usize,
    pub succeeded: usize,
    pub volatility_mean: Option<f64>,
    pub fundamental_deviation_mean: Option<f64>,
    pub max_price_mean: Option<f64>,
    /// `(tail fraction, mean alpha)`.
    pub hill_mean: Vec<(f64, Option<f64>)>,
    /// `(horizon, mean excess kurtosis)`.
    pub kurtosis_mean: Vec<(usize, Option<f64>)>,
    pub acf_abs_mean: Option<f64>,
    pub acf_sq_mean: Option<f64>,
    pub decay_exponent_mean: Option<f64>,
    pub sadf_mean: Option<f64>,
    pub gsadf_mean: Option<f64>,
    /// Fraction of tested trials whose GSADF exceeds the 90% critical value.
    pub explosive_fraction: Option<f64>,
    pub pnd_success_rate: Option<f64>,
}

pub(crate) fn mean_of(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values.into_iter().flatten() {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn rate(values: impl IntoIterator<Item = Option<bool>>) -> Option<f64> {
    mean_of(values.into_iter().map(|b| b.map(|b| if b { 1.0 } else { 0.0 })))
}

impl Aggregate {
    pub fn from_trials(trials: &[TrialRecord]) -> Self {
        let reports = || trials.iter().map(|t| t.stylized.as_ref());
        let (fractions, horizons) = trials
            .iter()
            .find_map(|t| t.stylized.as_ref())
            .map(|s| {
                (
                    s.tail.iter().map(|t| t.fraction).collect::<Vec<_>>(),
                    s.kurtosis.iter().map(|k| k.horizon).collect::<Vec<_>>(),
                )
            })
            .unwrap_or_default();
        Aggregate {
            trials: trials.len(),
            succeeded: trials.iter().filter(|t| t.error.is_none()).count(),
            volatility_mean: mean_of(trials.iter().map(TrialRecord::volatility)),
            fundamental_deviation_mean: mean_of(trials.iter().map(TrialRecord::fundamental_deviation)),
            max_price_mean: mean_of(trials.iter().map(|t| t.max_price)),
            hill_mean: fractions
                .iter()
                .map(|&f| (f, mean_of(reports().map(|r| r.and_then(|r| r.tail_alpha(f))))))
                .collect(),
            kurtosis_mean: horizons
                .iter()
                .map(|&h| (h, mean_of(reports().map(|r| r.and_then(|r| r.kurtosis_at(h))))))
                .collect(),
            acf_abs_mean: mean_of(reports().map(|r| r.and_then(|r| r.acf_abs))),
            acf_sq_mean: mean_of(reports().map(|r| r.and_then(|r| r.acf_sq))),
            decay_exponent_mean: mean_of(reports().map(|r| r.and_then(|r| r.decay.map(|d| d.exponent)))),
            sadf_mean: mean_of(trials.iter().map(|t| t.bubble.as_ref().and_then(|b| b.sadf_stat))),
            gsadf_mean: mean_of(trials.iter().map(|t| t.bubble.as_ref().and_then(|b| b.gsadf_stat))),
            explosive_fraction: rate(trials.iter().map(|t| t.explosive)),
            pnd_success_rate: rate(trials.iter().map(|t| t.pnd_success)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub point: usize,
    /// Swept parameter and its value at this point.
    pub param: Option<String>,
    pub value: Option<f64>,
    pub model: ModelParams,
    pub hierarchy: HierarchyParams,
    /// Peaks of the uncorrupted runs after the corruption onset.
    pub baseline_maxima: Option<Vec<f64>>,
    pub trials: Vec<TrialRecord>,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub groups: Vec<GroupRecord>,
}

impl RunRecord {
    pub fn trials(&self) -> impl Iterator<Item = &TrialRecord> {
        self.groups.iter().flat_map(|g| g.trials.iter())
    }
}

/// Stylized facts and bubble tests for one simulated series.
pub fn analyze_series(series: &MarketSeries, analysis: &AnalysisConfig) -> Result<(StylizedReport, Option<BubbleReport>, Option<bool>)> {
    let start = analysis.burn_in.min(series.price.len());
    let prices = &series.price[start..];
    let stylized = StylizedReport::compute(prices, Some(&series.fundamental[start..]), &analysis.stylized)?;
    let bubble = match bubble::detect(prices, &analysis.bubble) {
        Ok(mut b) => {
            for iv in &mut b.explosive_intervals {
                iv.start += start;
                iv.end += start;
            }
            Some(b)
        }
        Err(Error::SampleBelowTable(_)) => None,
        Err(e) => return Err(e),
    };
    let explosive = match &bubble {
        Some(b) if b.level == Level::P90 => Some(b.gsadf_significant),
        Some(b) => {
            let (cv, _) = CriticalValueTable::standard().critical_value(TestKind::Gsadf, b.observations, Level::P90)?;
            Some(b.gsadf_stat.is_some_and(|s| s > cv))
        }
        None => None,
    };
    Ok((stylized, bubble, explosive))
}

enum Job {
    Trial { point: usize, trial: usize },
    Baseline { point: usize, run: usize },
}

enum Outcome {
    Trial(TrialRecord),
    BaselineMax(f64),
}

fn build_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let from_env = || {
        std::env::var(THREADS_ENV).ok().map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(THREADS_ENV, format!("expected a thread count, got `{v}`")))
        })
    };
    let n = match threads {
        Some(n) => Some(n),
        None => from_env().transpose()?,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = n {
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs every trial of every sweep point.
///
/// Work is spread over `threads` workers (default: `HIERMARKET_THREADS`,
/// then one per core). Results are identical for any worker count.
pub fn run_experiment(config: &ExperimentConfig, threads: Option<usize>) -> Result<RunRecord> {
    config.validate()?;
    let points: Vec<(ModelParams, HierarchyParams)> =
        (0..config.points()).map(|j| config.point(j)).collect::<Result<_>>()?;
    let sweep_index = |j: usize| config.sweep.as_ref().map(|_| j);
    let pump = config.scenario.pump_dump();

    let mut jobs = Vec::new();
    for point in 0..points.len() {
        if pump.is_some() {
            jobs.extend((0..config.baseline_runs).map(|run| Job::Baseline { point, run }));
        }
        jobs.extend((0..config.trials).map(|trial| Job::Trial { point, trial }));
    }

    let keep_series = config.output.series;
    let execute = |job: &Job| -> Result<Outcome> {
        match *job {
            Job::Baseline { point, run } => {
                let (model, hierarchy) = points[point];
                let seed = baseline_seed(config.master_seed, sweep_index(point), run);
                let s = simulate(model, hierarchy, Scenario::None, seed, config.steps)?;
                let onset = pump.map_or(0, |p| p.start);
                Ok(Outcome::BaselineMax(baseline_maxima([&s], onset)[0]))
            }
            Job::Trial { point, trial } => {
                let (model, hierarchy) = points[point];
                let seed = match pump {
                    Some(_) => corrupted_seed(config.master_seed, sweep_index(point), trial),
                    None => trial_seed(config.master_seed, sweep_index(point), trial),
                };
                let series = simulate(model, hierarchy, config.scenario, seed, config.steps)?;
                let onset = pump.map_or(0, |p| p.start);
                let mut record = TrialRecord {
                    trial,
                    seed,
                    stylized: None,
                    bubble: None,
                    explosive: None,
                    max_price: series.max_price_from(onset),
                    pnd_success: None,
                    error: None,
                    series: None,
                };
                match analyze_series(&series, &config.analysis) {
                    Ok((s, b, e)) => {
                        record.stylized = Some(s);
                        record.bubble = b;
                        record.explosive = e;
                    }
                    Err(e) => record.error = Some(e.to_string()),
                }
                if keep_series {
                    record.series = Some(series);
                }
                Ok(Outcome::Trial(record))
            }
        }
    };

    let pool = build_pool(threads)?;
    let outcomes: Vec<Result<Outcome>> = pool.install(|| jobs.par_iter().map(execute).collect());

    let mut groups: Vec<GroupRecord> = points
        .iter()
        .enumerate()
        .map(|(point, &(model, hierarchy))| GroupRecord {
            point,
            param: config.sweep.as_ref().map(|s| s.param.clone()),
            value: config.sweep.as_ref().map(|s| s.values[point]),
            model,
            hierarchy,
            baseline_maxima: pump.map(|_| Vec::with_capacity(config.baseline_runs)),
            trials: Vec::with_capacity(config.trials),
            aggregate: Aggregate::from_trials(&[]),
        })
        .collect();
    for (job, outcome) in jobs.iter().zip(outcomes) {
        match (job, outcome?) {
            (Job::Baseline { point, .. }, Outcome::BaselineMax(m)) => {
                groups[*point].baseline_maxima.as_mut().expect("pump-and-dump group").push(m)
            }
            (Job::Trial { point, .. }, Outcome::Trial(t)) => groups[*point].trials.push(t),
            _ => unreachable!("job and outcome kinds match"),
        }
    }
    if pump.is_some() {
        for g in &mut groups {
            let maxima = g.baseline_maxima.as_deref().unwrap_or_default().to_vec();
            for t in &mut g.trials {
                let Some(s) = t.max_price else { continue };
                match pnd_success_prices(&[s], &maxima, 0) {
                    Ok(ok) => t.pnd_success = Some(ok),
                    Err(e) => t.error = Some(e.to_string()),
                }
            }
        }
    }
    for g in &mut groups {
        g.aggregate = Aggregate::from_trials(&g.trials);
    }
    Ok(RunRecord {
        config: config.clone(),
        groups,
    })
}
