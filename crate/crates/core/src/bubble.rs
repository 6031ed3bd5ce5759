//! Right-tailed unit-root tests for explosive price behaviour.
//!
//! The ADF regression `Δy_t = a + ρ·y_{t−1} + Σ c_j·Δy_{t−j} + ε_t` is solved
//! by Givens-rotation QR updates. A window scan that keeps its start fixed and
//! extends its end only appends rows, so every recursive statistic of the
//! SADF/GSADF scans costs `O(p²)` on top of the previous one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least squares kept as an upper-triangular `R` and `Qᵀy`, updated one row
/// at a time with Givens rotations.
#[derive(Debug, Clone)]
pub struct IncrementalLeastSquares {
    p: usize,
    r: Vec<f64>,
    qty: Vec<f64>,
    rss: f64,
    rows: usize,
    y_sq: f64,
    col_sq: Vec<f64>,
}

impl IncrementalLeastSquares {
    pub fn new(p: usize) -> Self {
        IncrementalLeastSquares {
            p,
            r: vec![0.0; p * p],
            qty: vec![0.0; p],
            rss: 0.0,
            rows: 0,
            y_sq: 0.0,
            col_sq: vec![0.0; p],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn residual_sum_of_squares(&self) -> f64 {
        self.rss
    }

    /// Appends one observation. `x` is used as scratch space.
    pub fn push(&mut self, x: &mut [f64], mut y: f64) {
        debug_assert_eq!(x.len(), self.p);
        let p = self.p;
        self.rows += 1;
        self.y_sq += y * y;
        for (acc, v) in self.col_sq.iter_mut().zip(x.iter()) {
            *acc += v * v;
        }
        for j in 0..p {
            let b = x[j];
            if b == 0.0 {
                continue;
            }
            let a = self.r[j * p + j];
            let h = a.hypot(b);
            let (c, s) = (a / h, b / h);
            self.r[j * p + j] = h;
            for k in j + 1..p {
                let rk = self.r[j * p + k];
                self.r[j * p + k] = c * rk + s * x[k];
                x[k] = c * x[k] - s * rk;
            }
            let z = self.qty[j];
            self.qty[j] = c * z + s * y;
            y = c * y - s * z;
        }
        self.rss += y * y;
    }

    fn is_singular(&self) -> bool {
        let p = self.p;
        (0..p).any(|j| {
            let d = self.r[j * p + j].abs();
            d == 0.0 || d <= 1e-11 * self.col_sq[j].sqrt()
        })
    }

    /// Inverse of `R` by back substitution, row-major.
    fn r_inverse(&self) -> Vec<f64> {
        let p = self.p;
        let mut inv = vec![0.0; p * p];
        for col in 0..p {
            for row in (0..=col).rev() {
                let mut acc = if row == col { 1.0 } else { 0.0 };
                for k in row + 1..=col {
                    acc -= self.r[row * p + k] * inv[k * p + col];
                }
                inv[row * p + col] = acc / self.r[row * p + row];
            }
        }
        inv
    }

    pub fn coefficients(&self) -> Option<Vec<f64>> {
        if self.rows < self.p || self.is_singular() {
            return None;
        }
        let p = self.p;
        let inv = self.r_inverse();
        Some(
            (0..p)
                .map(|i| (i..p).map(|k| inv[i * p + k] * self.qty[k]).sum())
                .collect(),
        )
    }

    /// t-statistic of coefficient `j`. An exact fit yields 0 when the
    /// coefficient is numerically zero and no statistic otherwise.
    pub fn t_stat(&self, j: usize) -> Option<f64> {
        if self.rows <= self.p || self.is_singular() {
            return None;
        }
        let p = self.p;
        let inv = self.r_inverse();
        let beta: f64 = (j..p).map(|k| inv[j * p + k] * self.qty[k]).sum();
        if self.rss <= 1e-24 * self.y_sq {
            let scaled = beta.abs() * self.col_sq[j].sqrt();
            return (scaled <= 1e-8 * self.y_sq.sqrt()).then_some(0.0);
        }
        let sigma2 = self.rss / (self.rows - p) as f64;
        let var: f64 = (j..p).map(|k| inv[j * p + k] * inv[j * p + k]).sum::<f64>() * sigma2;
        Some(beta / var.sqrt())
    }
}

/// Index of ρ in the regressor vector `[1, y_{t−1}, Δy_{t−1}, …]`.
const RHO: usize = 1;

/// Smallest window (in observations) the ADF regression accepts.
pub fn min_adf_len(lags: usize) -> usize {
    lags + 10
}

/// Fills the regressors for the observation ending at index `t` (needs `t > lags`).
fn regression_row(y: &[f64], t: usize, lags: usize, x: &mut [f64]) -> f64 {
    x[0] = 1.0;
    x[RHO] = y[t - 1];
    for j in 1..=lags {
        x[RHO + j] = y[t - j] - y[t - j - 1];
    }
    y[t] - y[t - 1]
}

/// ADF t-statistic of ρ with an intercept and `lags` lagged differences.
pub fn adf_stat(y: &[f64], lags: usize) -> Option<f64> {
    if y.len() < min_adf_len(lags) {
        return None;
    }
    let p = lags + 2;
    let mut ls = IncrementalLeastSquares::new(p);
    let mut x = vec![0.0; p];
    for t in lags + 1..y.len() {
        let dy = regression_row(y, t, lags, &mut x);
        ls.push(&mut x, dy);
    }
    ls.t_stat(RHO)
}

/// Calls `visit(end, stat)` for every window `[start, end]` whose length is at
/// least `min_window`, extending the end one observation at a time.
fn scan_from<F: FnMut(usize, Option<f64>)>(y: &[f64], start: usize, min_window: usize, lags: usize, mut visit: F) {
    let p = lags + 2;
    let mut ls = IncrementalLeastSquares::new(p);
    let mut x = vec![0.0; p];
    let min_len = min_window.max(1);
    for end in start..y.len() {
        let len = end - start + 1;
        if end > start + lags {
            let dy = regression_row(y, end, lags, &mut x);
            ls.push(&mut x, dy);
        }
        if len >= min_len {
            let stat = if len >= min_adf_len(lags) { ls.t_stat(RHO) } else { None };
            visit(end, stat);
        }
    }
}

/// Minimum window length `ceil(r0 · n)`, at least one observation.
pub fn min_window(n: usize, r0: f64) -> usize {
    ((r0 * n as f64 - 1e-9).ceil() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SadfResult {
    /// Supremum of the recursive statistics; absent when no window qualified.
    pub stat: Option<f64>,
    /// Statistic for each window end from `first_end` on; NaN where the
    /// window was too short or singular.
    pub sequence: Vec<f64>,
    /// Observation index of the first window end.
    pub first_end: usize,
}

/// Forward-expanding windows `[0, r2]` for `r2` from `r0` to 1.
pub fn sadf(y: &[f64], r0: f64, lags: usize) -> SadfResult {
    let w = min_window(y.len(), r0);
    let mut sequence = Vec::with_capacity(y.len().saturating_sub(w) + 1);
    scan_from(y, 0, w, lags, |_, s| sequence.push(s.unwrap_or(f64::NAN)));
    let stat = sequence.iter().copied().filter(|s| !s.is_nan()).reduce(f64::max);
    SadfResult {
        stat,
        sequence,
        first_end: w - 1,
    }
}

/// Supremum over all windows `[r1, r2]` with `r2 − r1 ≥ r0`.
pub fn gsadf(y: &[f64], r0: f64, lags: usize) -> Option<f64> {
    let n = y.len();
    let w = min_window(n, r0);
    if w > n {
        return None;
    }
    (0..=n - w)
        .into_par_iter()
        .filter_map(|start| {
            let mut best: Option<f64> = None;
            scan_from(y, start, w, lags, |_, s| {
                if let Some(s) = s {
                    best = Some(best.map_or(s, |b| b.max(s)));
                }
            });
            best
        })
        .reduce_with(f64::max)
}

/// Half-open interval of indices `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// Default gap below which neighbouring exceedance runs are merged.
pub const MERGE_GAP: usize = 3;

/// Maximal runs where `sequence[i] > cv`, as observation intervals offset by
/// `first_index`; runs separated by fewer than `merge_gap` observations are joined.
pub fn pwy_stamp(sequence: &[f64], cv: f64, first_index: usize, merge_gap: usize) -> Vec<Interval> {
    let mut runs: Vec<Interval> = Vec::new();
    let mut open: Option<usize> = None;
    for (i, s) in sequence.iter().enumerate() {
        match (*s > cv, open) {
            (true, None) => open = Some(i),
            (false, Some(start)) => {
                runs.push(Interval { start, end: i });
                open = None;
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        runs.push(Interval {
            start,
            end: sequence.len(),
        });
    }
    let mut merged: Vec<Interval> = Vec::with_capacity(runs.len());
    for run in runs {
        match merged.last_mut() {
            Some(last) if run.start - last.end < merge_gap => last.end = run.end,
            _ => merged.push(run),
        }
    }
    for iv in &mut merged {
        iv.start += first_index;
        iv.end += first_index;
    }
    merged
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestKind {
    Sadf,
    Gsadf,
}

/// Significance columns of the critical-value table. `Top` is the most
/// severe tabulated column, labelled "100%" in the source table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "90")]
    P90,
    #[serde(rename = "95")]
    P95,
    #[serde(rename = "100")]
    Top,
}

impl Level {
    fn column(self) -> usize {
        match self {
            Level::P90 => 0,
            Level::P95 => 1,
            Level::Top => 2,
        }
    }

    /// Nominal rejection rate under the null (the top column has none).
    pub fn nominal_size(self) -> Option<f64> {
        match self {
            Level::P90 => Some(0.10),
            Level::P95 => Some(0.05),
            Level::Top => None,
        }
    }

    pub fn from_percent(p: u32) -> Option<Level> {
        match p {
            90 => Some(Level::P90),
            95 => Some(Level::P95),
            99 | 100 => Some(Level::Top),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalRow {
    pub n: usize,
    pub sadf: [f64; 3],
    pub gsadf: [f64; 3],
    pub r0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalValueTable {
    rows: Vec<CriticalRow>,
}

impl Default for CriticalValueTable {
    fn default() -> Self {
        Self::standard()
    }
}

impl CriticalValueTable {
    /// Asymptotic SADF and finite-sample GSADF values with their minimum
    /// window fractions.
    pub fn standard() -> Self {
        let row = |n, sadf, gsadf, r0| CriticalRow { n, sadf, gsadf, r0 };
        CriticalValueTable {
            rows: vec![
                row(100, [1.10, 1.37, 1.88], [1.65, 2.00, 2.57], 0.190),
                row(200, [1.12, 1.41, 2.03], [1.84, 2.08, 2.70], 0.137),
                row(400, [1.20, 1.49, 2.07], [1.92, 2.20, 2.80], 0.100),
                row(800, [1.21, 1.51, 2.06], [2.10, 2.34, 2.79], 0.074),
                row(1600, [1.23, 1.51, 2.06], [2.19, 2.41, 2.87], 0.055),
            ],
        }
    }

    pub fn rows(&self) -> &[CriticalRow] {
        &self.rows
    }

    /// Critical value and minimum window fraction for a sample of `n`
    /// observations, interpolated linearly in `ln n` and clamped above the
    /// largest row.
    pub fn critical_value(&self, test: TestKind, n: usize, level: Level) -> Result<(f64, f64)> {
        let first = self.rows[0].n;
        if n < first {
            return Err(Error::SampleBelowTable(n));
        }
        let pick = |r: &CriticalRow| {
            let col = level.column();
            let cv = match test {
                TestKind::Sadf => r.sadf[col],
                TestKind::Gsadf => r.gsadf[col],
            };
            (cv, r.r0)
        };
        let last = self.rows.last().expect("table is not empty");
        if n >= last.n {
            return Ok(pick(last));
        }
        let i = self.rows.partition_point(|r| r.n <= n) - 1;
        let (lo, hi) = (&self.rows[i], &self.rows[i + 1]);
        if n == lo.n {
            return Ok(pick(lo));
        }
        let w = ((n as f64).ln() - (lo.n as f64).ln()) / ((hi.n as f64).ln() - (lo.n as f64).ln());
        let (a, ra) = pick(lo);
        let (b, rb) = pick(hi);
        Ok((a + w * (b - a), ra + w * (rb - ra)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BubbleConfig {
    /// Keep one price every `stride` steps.
    pub stride: usize,
    /// Test log prices instead of levels.
    pub log_prices: bool,
    pub level: Level,
    pub lags: usize,
    pub merge_gap: usize,
}

impl Default for BubbleConfig {
    fn default() -> Self {
        BubbleConfig {
            stride: 100,
            log_prices: false,
            level: Level::P90,
            lags: 0,
            merge_gap: MERGE_GAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleReport {
    /// Observations after downsampling.
    pub observations: usize,
    pub r0: f64,
    pub level: Level,
    pub sadf_stat: Option<f64>,
    pub gsadf_stat: Option<f64>,
    pub sadf_cv: f64,
    pub gsadf_cv: f64,
    pub sadf_significant: bool,
    pub gsadf_significant: bool,
    /// Explosive periods in simulation steps, half-open.
    pub explosive_intervals: Vec<Interval>,
}

/// Downsamples `prices` and runs SADF, GSADF and date-stamping.
pub fn detect(prices: &[f64], cfg: &BubbleConfig) -> Result<BubbleReport> {
    detect_with_table(prices, cfg, &CriticalValueTable::standard())
}

pub fn detect_with_table(prices: &[f64], cfg: &BubbleConfig, table: &CriticalValueTable) -> Result<BubbleReport> {
    let stride = cfg.stride.max(1);
    let mut y: Vec<f64> = prices.iter().step_by(stride).copied().collect();
    if cfg.log_prices {
        if let Some((index, &value)) = y.iter().enumerate().find(|(_, p)| !(**p > 0.0)) {
            return Err(Error::NonPositivePrice {
                index: index * stride,
                value,
            });
        }
        y.iter_mut().for_each(|p| *p = p.ln());
    }
    let n = y.len();
    let (gsadf_cv, r0) = table.critical_value(TestKind::Gsadf, n, cfg.level)?;
    let (sadf_cv, _) = table.critical_value(TestKind::Sadf, n, cfg.level)?;
    let sadf_res = sadf(&y, r0, cfg.lags);
    let gsadf_stat = gsadf(&y, r0, cfg.lags);
    let explosive_intervals = pwy_stamp(&sadf_res.sequence, sadf_cv, sadf_res.first_end, cfg.merge_gap)
        .into_iter()
        .map(|iv| Interval {
            start: iv.start * stride,
            end: ((iv.end - 1) * stride + 1).min(prices.len()),
        })
        .collect();
    Ok(BubbleReport {
        observations: n,
        r0,
        level: cfg.level,
        sadf_stat: sadf_res.stat,
        gsadf_stat,
        sadf_cv,
        gsadf_cv,
        sadf_significant: sadf_res.stat.is_some_and(|s| s > sadf_cv),
        gsadf_significant: gsadf_stat.is_some_and(|s| s > gsadf_cv),
        explosive_intervals,
    })
}
