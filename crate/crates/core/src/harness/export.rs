//! Files written by a run.
//!
//! `trials.csv` has one row per trial, columns in this order:
//!
//! | column | content |
//! |---|---|
//! | `point` | sweep point index |
//! | `param`, `value` | swept parameter and value (empty without a sweep) |
//! | `trial` | trial index |
//! | `seed` | stream seed, hex |
//! | `volatility`, `fundamental_deviation`, `max_price` | price-level summaries |
//! | `hill_<f>` | tail index per configured tail fraction |
//! | `kurtosis_<T>` | excess kurtosis per configured horizon |
//! | `acf_abs`, `acf_sq` | volatility clustering |
//! | `decay_amplitude`, `decay_exponent` | power-law fit of the absolute-return ACF |
//! | `sadf`, `sadf_cv`, `gsadf`, `gsadf_cv` | bubble statistics at the configured level |
//! | `explosive` | GSADF above its 90% critical value |
//! | `explosive_intervals` | `start-end` step ranges, `;`-separated |
//! | `pnd_success` | pump-and-dump outcome |
//! | `error` | analysis failure, if any |
//!
//! Missing values are empty cells. Floats use the shortest representation
//! that round-trips.
//!
//! `series/point<j>_trial<i>.csv` holds `step,price,fundamental,n_o,n_p,n_f`
//! when series output is on. `summary.json` holds the config snapshot, the
//! pooled `volatility_mean` and `explosive_fraction`, and one aggregate per
//! sweep point.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::MarketSeries;

use super::config::ExperimentConfig;
use super::runner::{mean_of, Aggregate, RunRecord, TrialRecord};

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn flag(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

fn trial_header(record: &RunRecord) -> Vec<String> {
    let cfg = &record.config.analysis.stylized;
    let mut h: Vec<String> = ["point", "param", "value", "trial", "seed", "volatility", "fundamental_deviation", "max_price"]
        .map(String::from)
        .to_vec();
    h.extend(cfg.tail_fractions.iter().map(|f| format!("hill_{f}")));
    h.extend(cfg.kurtosis_horizons.iter().map(|t| format!("kurtosis_{t}")));
    h.extend(
        [
            "acf_abs",
            "acf_sq",
            "decay_amplitude",
            "decay_exponent",
            "sadf",
            "sadf_cv",
            "gsadf",
            "gsadf_cv",
            "explosive",
            "explosive_intervals",
            "pnd_success",
            "error",
        ]
        .map(String::from),
    );
    h
}

fn trial_row(record: &RunRecord, point: usize, t: &TrialRecord) -> Vec<String> {
    let g = &record.groups[point];
    let cfg = &record.config.analysis.stylized;
    let s = t.stylized.as_ref();
    let b = t.bubble.as_ref();
    let mut row = vec![
        point.to_string(),
        g.param.clone().unwrap_or_default(),
        num(g.value),
        t.trial.to_string(),
        t.seed.to_hex(),
        num(t.volatility()),
        num(t.fundamental_deviation()),
        num(t.max_price),
    ];
    row.extend(cfg.tail_fractions.iter().map(|&f| num(s.and_then(|s| s.tail_alpha(f)))));
    row.extend(cfg.kurtosis_horizons.iter().map(|&h| num(s.and_then(|s| s.kurtosis_at(h)))));
    row.extend([
        num(s.and_then(|s| s.acf_abs)),
        num(s.and_then(|s| s.acf_sq)),
        num(s.and_then(|s| s.decay.map(|d| d.amplitude))),
        num(s.and_then(|s| s.decay.map(|d| d.exponent))),
        num(b.and_then(|b| b.sadf_stat)),
        num(b.map(|b| b.sadf_cv)),
        num(b.and_then(|b| b.gsadf_stat)),
        num(b.map(|b| b.gsadf_cv)),
        flag(t.explosive),
        b.map(|b| {
            b.explosive_intervals
                .iter()
                .map(|iv| format!("{}-{}", iv.start, iv.end))
                .collect::<Vec<_>>()
                .join(";")
        })
        .unwrap_or_default(),
        flag(t.pnd_success),
        t.error.clone().unwrap_or_default(),
    ]);
    row
}

pub fn write_trials_csv(record: &RunRecord, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(trial_header(record)).map_err(|e| csv_error(path, e))?;
    for g in &record.groups {
        for t in &g.trials {
            w.write_record(trial_row(record, g.point, t)).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub const SERIES_HEADER: [&str; 6] = ["step", "price", "fundamental", "n_o", "n_p", "n_f"];

pub fn write_series_csv(series: &MarketSeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(SERIES_HEADER).map_err(|e| csv_error(path, e))?;
    for i in 0..series.price.len() {
        w.write_record([
            i.to_string(),
            series.price[i].to_string(),
            series.fundamental[i].to_string(),
            series.optimists[i].to_string(),
            series.pessimists[i].to_string(),
            series.fundamentalists[i].to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct GroupSummary<'a> {
    point: usize,
    param: Option<&'a str>,
    value: Option<f64>,
    baseline_maxima: Option<&'a [f64]>,
    #[serde(flatten)]
    aggregate: &'a Aggregate,
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a ExperimentConfig,
    trials: usize,
    volatility_mean: Option<f64>,
    explosive_fraction: Option<f64>,
    groups: Vec<GroupSummary<'a>>,
}

pub fn summary_json(record: &RunRecord) -> Result<String> {
    let summary = Summary {
        config: &record.config,
        trials: record.trials().count(),
        volatility_mean: mean_of(record.trials().map(TrialRecord::volatility)),
        explosive_fraction: mean_of(record.trials().map(|t| t.explosive.map(|b| if b { 1.0 } else { 0.0 }))),
        groups: record
            .groups
            .iter()
            .map(|g| GroupSummary {
                point: g.point,
                param: g.param.as_deref(),
                value: g.value,
                baseline_maxima: g.baseline_maxima.as_deref(),
                aggregate: &g.aggregate,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    Ok(text)
}

/// Writes the enabled outputs into `dir`; returns the files written.
pub fn export(record: &RunRecord, dir: &Path) -> Result<Vec<PathBuf>> {
    let out = &record.config.output;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if out.csv {
        let path = dir.join("trials.csv");
        write_trials_csv(record, &path)?;
        written.push(path);
    }
    if out.json {
        let path = dir.join("summary.json");
        fs::write(&path, summary_json(record)?).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    if out.series {
        let series_dir = dir.join("series");
        fs::create_dir_all(&series_dir).map_err(|e| Error::io(&series_dir, e))?;
        for g in &record.groups {
            for t in &g.trials {
                if let Some(s) = &t.series {
                    let path = series_dir.join(format!("point{}_trial{}.csv", g.point, t.trial));
                    write_series_csv(s, &path)?;
                    written.push(path);
                }
            }
        }
    }
    Ok(written)
}
