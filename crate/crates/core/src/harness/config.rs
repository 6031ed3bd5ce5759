//! Experiment manifests.
//!
//! A manifest is a TOML file:
//!
//! ```toml
//! preset = "SET_II"        # SET_II | SET_III | SET_IV; omit to give every [model] key
//! steps = 40000
//! trials = 50
//! master_seed = 1
//!
//! [model]                  # overrides, by field name or short alias (alpha2, v1, gamma, ...)
//! alpha2 = 0.25
//!
//! [hierarchy]              # levels/L, branching/k, phi, omega, upsilon, b
//! b = 2.0
//!
//! [scenario]               # kind = "echo": mode, E
//! kind = "pnd"             # kind = "pnd": target, T0, T1, S, baseline_runs
//! target = 1
//! T0 = 1000
//! T1 = 2000
//! S = 3.0
//!
//! [sweep]
//! param = "b"
//! values = [0, 0.5, 2]
//!
//! [analysis]
//! burn_in = 0
//! [analysis.stylized]      # see StylizedConfig
//! [analysis.bubble]        # see BubbleConfig
//!
//! [output]
//! dir = "out"
//! series = false           # one CSV per trial
//! csv = true
//! json = true
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bubble::BubbleConfig;
use crate::error::{Error, Result};
use crate::hierarchy::HierarchyParams;
use crate::market::{ModelParams, Preset};
use crate::scenario::{EchoConfig, EchoMode, PumpDumpConfig, Scenario, BASELINE_RUNS};
use crate::stylized::StylizedConfig;

pub const MIN_STEPS: usize = 1000;
pub const DEFAULT_TRIALS: usize = 50;
/// Run length when the manifest has no sweep.
pub const DEFAULT_STEPS: usize = 40_000;
/// Run length when the manifest sweeps a parameter.
pub const DEFAULT_SWEEP_STEPS: usize = 80_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Leading steps dropped before any metric is computed.
    pub burn_in: usize,
    pub stylized: StylizedConfig,
    pub bubble: BubbleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub series: bool,
    pub csv: bool,
    pub json: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            series: false,
            csv: true,
            json: true,
        }
    }
}

/// A validated experiment with presets expanded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub preset: Option<Preset>,
    pub model: ModelParams,
    pub hierarchy: HierarchyParams,
    pub steps: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub scenario: Scenario,
    /// Uncorrupted runs per sweep point when the scenario is pump-and-dump.
    pub baseline_runs: usize,
    pub sweep: Option<Sweep>,
    pub analysis: AnalysisConfig,
    /// Not part of the exported snapshot.
    #[serde(skip)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Preset parameters, `trials` runs of `steps` steps, no scenario.
    pub fn from_preset(preset: Preset, steps: usize, trials: usize, master_seed: u64) -> Self {
        ExperimentConfig {
            preset: Some(preset),
            model: preset.model(),
            hierarchy: preset.hierarchy(),
            steps,
            trials,
            master_seed,
            scenario: Scenario::None,
            baseline_runs: BASELINE_RUNS,
            sweep: None,
            analysis: AnalysisConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.hierarchy.validate()?;
        if self.steps < MIN_STEPS {
            return Err(Error::invalid("steps", format!("must be at least {MIN_STEPS}, got {}", self.steps)));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        self.scenario.validate(&self.hierarchy)?;
        if let Some(p) = self.scenario.pump_dump() {
            if p.end > self.steps {
                return Err(Error::invalid(
                    "scenario.T1",
                    format!("corruption ends at {} but the run has {} steps", p.end, self.steps),
                ));
            }
            if self.baseline_runs < BASELINE_RUNS {
                return Err(Error::invalid(
                    "scenario.baseline_runs",
                    format!("need at least {BASELINE_RUNS}, got {}", self.baseline_runs),
                ));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::invalid("sweep.values", "empty value list"));
            }
            for (i, &v) in sweep.values.iter().enumerate() {
                self.point(i).map_err(|e| match e {
                    Error::InvalidParameter { reason, .. } => Error::invalid(
                        format!("sweep.values[{i}]"),
                        format!("{} = {v}: {reason}", sweep.param),
                    ),
                    other => other,
                })?;
            }
        }
        if self.analysis.stylized.sample_interval == 0 {
            return Err(Error::invalid("analysis.stylized.sample_interval", "must be at least 1"));
        }
        if self.analysis.burn_in + MIN_STEPS > self.steps + 1 {
            return Err(Error::invalid(
                "analysis.burn_in",
                format!("leaves fewer than {MIN_STEPS} observations out of {}", self.steps + 1),
            ));
        }
        Ok(())
    }

    /// Number of run groups: one per sweep value, or one.
    pub fn points(&self) -> usize {
        self.sweep.as_ref().map_or(1, |s| s.values.len())
    }

    /// Parameters of sweep point `index` (the base parameters without a sweep).
    pub fn point(&self, index: usize) -> Result<(ModelParams, HierarchyParams)> {
        let mut model = self.model;
        let mut hierarchy = self.hierarchy;
        if let Some(sweep) = &self.sweep {
            let value = *sweep
                .values
                .get(index)
                .ok_or_else(|| Error::invalid("sweep.values", format!("no sweep point {index}")))?;
            set_parameter(&mut model, &mut hierarchy, &sweep.param, value)?;
            model.validate()?;
            hierarchy.validate()?;
            self.scenario.validate(&hierarchy)?;
        }
        Ok((model, hierarchy))
    }

    /// Replaces the sweep block.
    pub fn with_sweep(mut self, param: &str, values: Vec<f64>) -> Result<Self> {
        canonical_name(param).ok_or_else(|| unknown_parameter("sweep.param", param))?;
        self.sweep = Some(Sweep {
            param: param.to_string(),
            values,
        });
        self.validate()?;
        Ok(self)
    }
}

pub(crate) fn unknown_parameter(key: &str, name: &str) -> Error {
    Error::invalid(key, format!("`{name}` is not a model or hierarchy parameter"))
}

const NAMES: &[(&str, &[&str])] = &[
    ("trend_sensitivity", &["alpha2"]),
    ("profit_sensitivity", &["alpha3"]),
    ("opinion_freq", &["v1"]),
    ("strategy_freq", &["v2"]),
    ("price_adjust_freq", &["beta"]),
    ("dividend", &["r"]),
    ("alt_return", &["R"]),
    ("discount", &["s"]),
    ("fundamental", &["p_f", "pf"]),
    ("noise", &["mu"]),
    ("fundamentalist_reaction", &["gamma"]),
    ("chartist_volume", &["t_c", "tc"]),
    ("dt", &[]),
    ("dt_trend", &["dt_prime"]),
    ("tick", &[]),
    ("levels", &["L"]),
    ("branching", &["k"]),
    ("diffusion", &["phi"]),
    ("optimist_influence", &["omega"]),
    ("pessimist_influence", &["upsilon"]),
    ("strength", &["b"]),
];

const MODEL_FIELDS: usize = 15;

/// Canonical field name for a parameter name or alias.
pub fn canonical_name(name: &str) -> Option<&'static str> {
    NAMES
        .iter()
        .find(|(canon, aliases)| *canon == name || aliases.contains(&name))
        .map(|(canon, _)| *canon)
}

fn as_count(name: &str, value: f64) -> Result<usize> {
    if value.fract() != 0.0 || !(value >= 0.0) || value > u32::MAX as f64 {
        return Err(Error::invalid(name, format!("expected a non-negative integer, got {value}")));
    }
    Ok(value as usize)
}

/// Sets one model or hierarchy field by name or alias.
pub fn set_parameter(model: &mut ModelParams, hierarchy: &mut HierarchyParams, name: &str, value: f64) -> Result<()> {
    let canon = canonical_name(name).ok_or_else(|| unknown_parameter(name, name))?;
    match canon {
        "trend_sensitivity" => model.trend_sensitivity = value,
        "profit_sensitivity" => model.profit_sensitivity = value,
        "opinion_freq" => model.opinion_freq = value,
        "strategy_freq" => model.strategy_freq = value,
        "price_adjust_freq" => model.price_adjust_freq = value,
        "dividend" => model.dividend = value,
        "alt_return" => model.alt_return = value,
        "discount" => model.discount = value,
        "fundamental" => model.fundamental = value,
        "noise" => model.noise = value,
        "fundamentalist_reaction" => model.fundamentalist_reaction = value,
        "chartist_volume" => model.chartist_volume = value,
        "dt" => model.dt = value,
        "dt_trend" => model.dt_trend = value,
        "tick" => model.tick = value,
        "levels" => hierarchy.levels = as_count(name, value)?,
        "branching" => hierarchy.branching = as_count(name, value)?,
        "diffusion" => hierarchy.diffusion = value,
        "optimist_influence" => hierarchy.optimist_influence = value,
        "pessimist_influence" => hierarchy.pessimist_influence = value,
        "strength" => hierarchy.strength = value,
        _ => unreachable!("every canonical name is handled"),
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<Preset>,
    steps: Option<usize>,
    trials: Option<usize>,
    master_seed: Option<u64>,
    #[serde(default)]
    model: BTreeMap<String, f64>,
    #[serde(default)]
    hierarchy: BTreeMap<String, f64>,
    scenario: Option<RawScenario>,
    sweep: Option<Sweep>,
    #[serde(default)]
    analysis: AnalysisConfig,
    #[serde(default)]
    output: OutputConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    kind: String,
    mode: Option<EchoMode>,
    #[serde(rename = "E")]
    multiplier: Option<f64>,
    target: Option<usize>,
    #[serde(rename = "T0")]
    start: Option<usize>,
    #[serde(rename = "T1")]
    end: Option<usize>,
    #[serde(rename = "S")]
    signal: Option<f64>,
    baseline_runs: Option<usize>,
}

fn require<T>(value: Option<T>, key: &str) -> Result<T> {
    value.ok_or_else(|| Error::invalid(key, "required for this scenario kind"))
}

fn reject_key<T>(value: &Option<T>, key: &str, kind: &str) -> Result<()> {
    match value {
        Some(_) => Err(Error::invalid(key, format!("not used by scenario kind `{kind}`"))),
        None => Ok(()),
    }
}

impl RawScenario {
    fn build(self) -> Result<(Scenario, Option<usize>)> {
        match self.kind.as_str() {
            "none" => {
                reject_key(&self.mode, "scenario.mode", "none")?;
                reject_key(&self.multiplier, "scenario.E", "none")?;
                reject_key(&self.target, "scenario.target", "none")?;
                reject_key(&self.start, "scenario.T0", "none")?;
                reject_key(&self.end, "scenario.T1", "none")?;
                reject_key(&self.signal, "scenario.S", "none")?;
                reject_key(&self.baseline_runs, "scenario.baseline_runs", "none")?;
                Ok((Scenario::None, None))
            }
            "echo" => {
                reject_key(&self.target, "scenario.target", "echo")?;
                reject_key(&self.start, "scenario.T0", "echo")?;
                reject_key(&self.end, "scenario.T1", "echo")?;
                reject_key(&self.signal, "scenario.S", "echo")?;
                reject_key(&self.baseline_runs, "scenario.baseline_runs", "echo")?;
                let mode = require(self.mode, "scenario.mode")?;
                let multiplier = require(self.multiplier, "scenario.E")?;
                Ok((Scenario::Echo(EchoConfig::new(mode, multiplier)), None))
            }
            "pnd" | "pump_dump" => {
                reject_key(&self.mode, "scenario.mode", "pnd")?;
                reject_key(&self.multiplier, "scenario.E", "pnd")?;
                let cfg = PumpDumpConfig {
                    target: require(self.target, "scenario.target")?,
                    start: require(self.start, "scenario.T0")?,
                    end: require(self.end, "scenario.T1")?,
                    signal: require(self.signal, "scenario.S")?,
                };
                Ok((Scenario::PumpDump(cfg), self.baseline_runs))
            }
            other => Err(Error::invalid(
                "scenario.kind",
                format!("unknown scenario `{other}` (expected none, echo or pnd)"),
            )),
        }
    }
}

/// Parses and validates a manifest held in memory.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let (mut model, mut hierarchy) = match raw.preset {
        Some(p) => (p.model(), p.hierarchy()),
        None => {
            let missing: Vec<&str> = NAMES[..MODEL_FIELDS]
                .iter()
                .filter(|(canon, aliases)| {
                    !raw.model.keys().any(|k| k == canon || aliases.contains(&k.as_str()))
                })
                .map(|(canon, _)| *canon)
                .collect();
            if !missing.is_empty() {
                return Err(Error::invalid(
                    "model",
                    format!("without a preset every model parameter is required; missing {}", missing.join(", ")),
                ));
            }
            (Preset::SetII.model(), HierarchyParams::default())
        }
    };
    for (key, &value) in &raw.model {
        let full = format!("model.{key}");
        match canonical_name(key) {
            Some(_) if NAMES[..MODEL_FIELDS].iter().any(|(c, _)| Some(*c) == canonical_name(key)) => {
                set_parameter(&mut model, &mut hierarchy, key, value)?
            }
            _ => return Err(unknown_parameter(&full, key)),
        }
    }
    for (key, &value) in &raw.hierarchy {
        let full = format!("hierarchy.{key}");
        match canonical_name(key) {
            Some(_) if NAMES[MODEL_FIELDS..].iter().any(|(c, _)| Some(*c) == canonical_name(key)) => {
                set_parameter(&mut model, &mut hierarchy, key, value).map_err(|e| match e {
                    Error::InvalidParameter { reason, .. } => Error::invalid(full.clone(), reason),
                    other => other,
                })?
            }
            _ => return Err(unknown_parameter(&full, key)),
        }
    }
    if let Some(sweep) = &raw.sweep {
        if canonical_name(&sweep.param).is_none() {
            return Err(unknown_parameter("sweep.param", &sweep.param));
        }
    }
    let (scenario, baseline_runs) = match raw.scenario {
        Some(s) => s.build()?,
        None => (Scenario::None, None),
    };
    let default_steps = if raw.sweep.is_some() { DEFAULT_SWEEP_STEPS } else { DEFAULT_STEPS };
    let cfg = ExperimentConfig {
        preset: raw.preset,
        model,
        hierarchy,
        steps: raw.steps.unwrap_or(default_steps),
        trials: raw.trials.unwrap_or(DEFAULT_TRIALS),
        master_seed: raw.master_seed.unwrap_or(0),
        scenario,
        baseline_runs: baseline_runs.unwrap_or(BASELINE_RUNS),
        sweep: raw.sweep,
        analysis: raw.analysis,
        output: raw.output,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Reads, parses and validates a manifest file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(message) => Error::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}
