//! Echo-chamber and pump-and-dump overlays on the base market.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{counts, CommunityState, HierarchyParams};
use crate::market::{MarketSeries, TraderRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EchoMode {
    #[default]
    Off,
    /// Only optimists conforming to their community's majority are amplified.
    Asymmetric,
    /// Conforming optimists and pessimists are both amplified.
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoConfig {
    pub mode: EchoMode,
    /// Echo multiplier E ≥ 1.
    pub multiplier: f64,
}

impl Default for EchoConfig {
    fn default() -> Self {
        EchoConfig::OFF
    }
}

impl EchoConfig {
    pub const OFF: EchoConfig = EchoConfig {
        mode: EchoMode::Off,
        multiplier: 1.0,
    };

    pub fn new(mode: EchoMode, multiplier: f64) -> Self {
        EchoConfig { mode, multiplier }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.multiplier.is_finite() || self.multiplier < 1.0 {
            return Err(Error::invalid(
                "scenario.E",
                format!("echo multiplier must be finite and >= 1, got {}", self.multiplier),
            ));
        }
        Ok(())
    }

    /// Leaf vector of a trader given its community's state from the previous
    /// step. Strict majorities only; ties keep the base influence.
    pub fn effective_influence(
        &self,
        role: TraderRole,
        parent: &CommunityState,
        optimist_influence: f64,
        pessimist_influence: f64,
    ) -> CommunityState {
        let e = self.multiplier;
        let (mut w, mut u) = (optimist_influence, pessimist_influence);
        match self.mode {
            EchoMode::Off => {}
            EchoMode::Asymmetric => {
                if parent.optimist > parent.pessimist {
                    w *= e;
                }
            }
            EchoMode::Symmetric => {
                if parent.optimist > parent.pessimist {
                    w *= e;
                }
                if parent.pessimist > parent.optimist {
                    u *= e;
                }
            }
        }
        CommunityState::leaf(role, w, u)
    }
}

/// Vector a corrupted community conveys to its children: `[S·(o+p+f), p, f]`.
pub fn corrupted_forward_emission(q: &CommunityState, signal: f64) -> CommunityState {
    CommunityState::new(signal * q.total(), q.pessimist, q.fundamentalist)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpDumpConfig {
    /// Corrupted community node id (level order, root = 0).
    pub target: usize,
    /// First corrupted step.
    pub start: usize,
    /// First step after the corruption window.
    pub end: usize,
    /// Signal strength S.
    pub signal: f64,
}

impl PumpDumpConfig {
    pub fn validate(&self, hp: &HierarchyParams) -> Result<()> {
        let communities = counts(hp)?.communities;
        if self.target >= communities {
            return Err(Error::invalid(
                "scenario.target",
                format!("node {} is not a community (there are {communities})", self.target),
            ));
        }
        if self.start >= self.end {
            return Err(Error::invalid("scenario.T0", format!("need T0 < T1, got {} >= {}", self.start, self.end)));
        }
        if !self.signal.is_finite() || self.signal < 0.0 {
            return Err(Error::invalid("scenario.S", "signal strength must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn is_active(&self, step: usize) -> bool {
        (self.start..self.end).contains(&step)
    }

    /// What `node` conveys to its children while the corruption is active.
    pub fn emission(&self, node: usize, state: &CommunityState) -> CommunityState {
        if node == self.target {
            corrupted_forward_emission(state, self.signal)
        } else {
            *state
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    None,
    Echo(EchoConfig),
    PumpDump(PumpDumpConfig),
}

impl Scenario {
    pub fn validate(&self, hp: &HierarchyParams) -> Result<()> {
        match self {
            Scenario::None => Ok(()),
            Scenario::Echo(e) => e.validate(),
            Scenario::PumpDump(p) => p.validate(hp),
        }
    }

    pub fn echo(&self) -> EchoConfig {
        match self {
            Scenario::Echo(e) => *e,
            _ => EchoConfig::OFF,
        }
    }

    pub fn pump_dump(&self) -> Option<PumpDumpConfig> {
        match self {
            Scenario::PumpDump(p) => Some(*p),
            _ => None,
        }
    }
}

/// Minimum number of uncorrupted runs in a baseline ensemble.
pub const BASELINE_RUNS: usize = 50;

/// Nearest-rank percentile of an unsorted sample (`q` in (0, 1]).
pub fn nearest_rank(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Per-run maxima of baseline series over steps `t ≥ onset`.
pub fn baseline_maxima<'a>(runs: impl IntoIterator<Item = &'a MarketSeries>, onset: usize) -> Vec<f64> {
    runs.into_iter()
        .map(|s| s.max_price_from(onset).unwrap_or(f64::NEG_INFINITY))
        .collect()
}

/// Success threshold: the nearest-rank 95th percentile of the baseline maxima.
pub fn success_threshold(baseline_max_prices: &[f64]) -> Result<f64> {
    if baseline_max_prices.len() < BASELINE_RUNS {
        return Err(Error::BaselineTooSmall(baseline_max_prices.len()));
    }
    Ok(nearest_rank(baseline_max_prices, 0.95))
}

/// A scheme succeeds when the corrupted run's peak from `onset` on strictly
/// exceeds the 95th-percentile baseline peak.
pub fn pnd_success(corrupted: &MarketSeries, baseline_max_prices: &[f64], onset: usize) -> Result<bool> {
    pnd_success_prices(&corrupted.price, baseline_max_prices, onset)
}

pub fn pnd_success_prices(prices: &[f64], baseline_max_prices: &[f64], onset: usize) -> Result<bool> {
    let threshold = success_threshold(baseline_max_prices)?;
    let peak = prices
        .get(onset..)
        .and_then(|w| w.iter().copied().reduce(f64::max))
        .ok_or(Error::SeriesTooShort {
            len: prices.len(),
            needed: onset,
        })?;
    Ok(peak > threshold)
}
