//! Stylized-fact metrics of a price path.
//!
//! Horizons and lags are measured in simulation steps. Every estimator
//! returns `None` instead of a value when its input is degenerate (too few
//! tail points, zero variance and so on), so a report can carry partial
//! results.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Log-returns `ln p_t − ln p_{t−T}` for one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub horizon: usize,
    pub values: Vec<f64>,
}

impl ReturnSeries {
    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|r| r.abs()).collect()
    }

    pub fn squared(&self) -> Vec<f64> {
        self.values.iter().map(|r| r * r).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn log_returns(prices: &[f64], horizon: usize) -> Result<ReturnSeries> {
    if horizon == 0 {
        return Err(Error::invalid("horizon", "must be at least 1"));
    }
    if prices.len() <= horizon {
        return Err(Error::SeriesTooShort {
            len: prices.len(),
            needed: horizon,
        });
    }
    if let Some((index, &value)) = prices.iter().enumerate().find(|(_, p)| !(**p > 0.0)) {
        return Err(Error::NonPositivePrice { index, value });
    }
    let logs: Vec<f64> = prices.iter().map(|p| p.ln()).collect();
    let values = logs[horizon..]
        .iter()
        .zip(&logs)
        .map(|(now, then)| now - then)
        .collect();
    Ok(ReturnSeries { horizon, values })
}

/// Smallest tail the Hill estimator accepts.
pub const MIN_TAIL: usize = 10;

/// Hill tail index from the largest `floor(tail_fraction · n)` values.
///
/// Zero (and non-finite) values are dropped first; the threshold is the
/// largest value outside the tail.
pub fn hill_alpha(abs_returns: &[f64], tail_fraction: f64) -> Option<f64> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return None;
    }
    let mut x: Vec<f64> = abs_returns
        .iter()
        .copied()
        .filter(|v| v.is_finite() && *v > 0.0)
        .collect();
    let n = x.len();
    let m = (tail_fraction * n as f64).floor() as usize;
    if m < MIN_TAIL || m >= n {
        return None;
    }
    x.sort_by(f64::total_cmp);
    let threshold = x[n - m - 1].ln();
    let mean_spacing = x[n - m..].iter().map(|v| v.ln() - threshold).sum::<f64>() / m as f64;
    (mean_spacing > 0.0).then(|| 1.0 / mean_spacing)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Bias-corrected sample excess kurtosis (the usual `G2` estimator).
pub fn excess_kurtosis(x: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 4 {
        return None;
    }
    let mu = mean(x);
    let (mut m2, mut m4) = (0.0, 0.0);
    for v in x {
        let d = v - mu;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    let nf = n as f64;
    m2 /= nf;
    m4 /= nf;
    if !(m2 > 1e-28 * mu * mu) {
        return None;
    }
    let g2 = m4 / (m2 * m2) - 3.0;
    Some(((nf + 1.0) * g2 + 6.0) * (nf - 1.0) / ((nf - 2.0) * (nf - 3.0)))
}

/// Sample autocorrelation at `lag`, with the full-sample mean and both the
/// lagged covariance and the variance divided by `n`.
pub fn acf(x: &[f64], lag: usize) -> Option<f64> {
    acf_many(x, lag).and_then(|v| v.get(lag).copied())
}

/// Autocorrelations at lags `0..=max_lag`.
pub fn acf_many(x: &[f64], max_lag: usize) -> Option<Vec<f64>> {
    let n = x.len();
    if n <= max_lag {
        return None;
    }
    let mu = mean(x);
    let d: Vec<f64> = x.iter().map(|v| v - mu).collect();
    let c0: f64 = d.iter().map(|v| v * v).sum();
    if !(c0 > 0.0) {
        return None;
    }
    Some(
        (0..=max_lag)
            .map(|lag| d[lag..].iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / c0)
            .collect(),
    )
}

/// Power-law fit `acf(τ) ≈ a·τ^(−β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub amplitude: f64,
    pub exponent: f64,
    /// Number of positive ACF points used.
    pub points: usize,
}

/// Fewest positive ACF points a decay fit accepts.
pub const MIN_DECAY_POINTS: usize = 5;

/// Log-log least squares on `acf_by_lag[i]` taken at lag `i + 1`; non-positive
/// entries are skipped.
pub fn fit_power_law(acf_by_lag: &[f64]) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> = acf_by_lag
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite() && **v > 0.0)
        .map(|(i, v)| (((i + 1) as f64).ln(), v.ln()))
        .collect();
    if pts.len() < MIN_DECAY_POINTS {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in &pts {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    Some(DecayFit {
        amplitude: (my - slope * mx).exp(),
        exponent: -slope,
        points: pts.len(),
    })
}

/// ACF decay fit of a series (typically absolute returns) over lags `1..=max_lag`.
pub fn acf_decay_fit(series: &[f64], max_lag: usize) -> Option<DecayFit> {
    let r = acf_many(series, max_lag)?;
    fit_power_law(&r[1..])
}

/// Population standard deviation of prices.
pub fn volatility(prices: &[f64]) -> f64 {
    if prices.is_empty() {
        return 0.0;
    }
    let mu = mean(prices);
    (prices.iter().map(|p| (p - mu) * (p - mu)).sum::<f64>() / prices.len() as f64).sqrt()
}

/// RMS deviation from the fundamental minus the price standard deviation.
pub fn fundamental_deviation(prices: &[f64], fundamentals: &[f64]) -> Result<f64> {
    if prices.len() != fundamentals.len() {
        return Err(Error::LengthMismatch {
            left: prices.len(),
            right: fundamentals.len(),
        });
    }
    if prices.is_empty() {
        return Err(Error::SeriesTooShort { len: 0, needed: 1 });
    }
    let rms = (prices
        .iter()
        .zip(fundamentals)
        .map(|(p, f)| (p - f) * (p - f))
        .sum::<f64>()
        / prices.len() as f64)
        .sqrt();
    Ok(rms - volatility(prices))
}

/// Horizons, lags and tail sizes used for a report.
///
/// Return-based metrics see the price series thinned to one observation
/// every `sample_interval` steps, so horizons and lags count samples. The
/// default of 100 steps is one unit of model time at the preset step size.
/// Volatility and fundamental deviation always use every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StylizedConfig {
    pub sample_interval: usize,
    pub tail_fractions: Vec<f64>,
    pub tail_horizon: usize,
    pub kurtosis_horizons: Vec<usize>,
    pub acf_lag: usize,
    pub acf_horizon: usize,
    pub decay_max_lag: usize,
}

impl Default for StylizedConfig {
    fn default() -> Self {
        StylizedConfig {
            sample_interval: 100,
            tail_fractions: vec![0.025, 0.05, 0.10],
            tail_horizon: 1,
            kurtosis_horizons: vec![1, 10, 50],
            acf_lag: 10,
            acf_horizon: 70,
            decay_max_lag: 70,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailIndex {
    pub fraction: f64,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kurtosis {
    pub horizon: usize,
    pub excess: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StylizedReport {
    pub tail: Vec<TailIndex>,
    pub kurtosis: Vec<Kurtosis>,
    /// ACF of absolute returns at the configured (lag, horizon).
    pub acf_abs: Option<f64>,
    /// ACF of squared returns at the configured (lag, horizon).
    pub acf_sq: Option<f64>,
    pub decay: Option<DecayFit>,
    pub volatility: f64,
    /// Absent when no fundamental series was supplied.
    pub fundamental_deviation: Option<f64>,
}

impl StylizedReport {
    pub fn compute(prices: &[f64], fundamentals: Option<&[f64]>, cfg: &StylizedConfig) -> Result<Self> {
        if let Some(f) = fundamentals {
            if prices.len() != f.len() {
                return Err(Error::LengthMismatch {
                    left: prices.len(),
                    right: f.len(),
                });
            }
        }
        if cfg.sample_interval == 0 {
            return Err(Error::invalid("sample_interval", "must be at least 1"));
        }
        if prices.is_empty() {
            return Err(Error::SeriesTooShort { len: 0, needed: 1 });
        }
        let full = prices;
        let sampled: Vec<f64> = full.iter().step_by(cfg.sample_interval).copied().collect();
        let prices = &sampled[..];

        let tail_returns = log_returns(prices, cfg.tail_horizon).ok().map(|r| r.abs());
        let tail = cfg
            .tail_fractions
            .iter()
            .map(|&fraction| TailIndex {
                fraction,
                alpha: tail_returns.as_ref().and_then(|r| hill_alpha(r, fraction)),
            })
            .collect();
        let kurtosis = cfg
            .kurtosis_horizons
            .iter()
            .map(|&horizon| Kurtosis {
                horizon,
                excess: log_returns(prices, horizon).ok().and_then(|r| excess_kurtosis(&r.values)),
            })
            .collect();
        let (acf_abs, acf_sq, decay) = match log_returns(prices, cfg.acf_horizon) {
            Ok(r) => {
                let abs = r.abs();
                let max_lag = cfg.acf_lag.max(cfg.decay_max_lag);
                let abs_acf = acf_many(&abs, max_lag);
                (
                    abs_acf.as_ref().map(|a| a[cfg.acf_lag]),
                    acf(&r.squared(), cfg.acf_lag),
                    abs_acf.and_then(|a| fit_power_law(&a[1..=cfg.decay_max_lag])),
                )
            }
            Err(_) => (None, None, None),
        };
        Ok(StylizedReport {
            tail,
            kurtosis,
            acf_abs,
            acf_sq,
            decay,
            volatility: volatility(full),
            fundamental_deviation: fundamentals.map(|f| fundamental_deviation(full, f)).transpose()?,
        })
    }

    pub fn tail_alpha(&self, fraction: f64) -> Option<f64> {
        self.tail
            .iter()
            .find(|t| (t.fraction - fraction).abs() < 1e-12)
            .and_then(|t| t.alpha)
    }

    pub fn kurtosis_at(&self, horizon: usize) -> Option<f64> {
        self.kurtosis
            .iter()
            .find(|k| k.horizon == horizon)
            .and_then(|k| k.excess)
    }
}
