#![allow(dead_code)]

use hiermarket::{CommunityState, TraderRole};
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, StudentsT};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn sample_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// One-sided Welch test of `mean(a) > mean(b)`; returns the p-value.
pub fn welch_greater(a: &[f64], b: &[f64]) -> f64 {
    let (va, vb) = (sample_var(a) / a.len() as f64, sample_var(b) / b.len() as f64);
    let se = (va + vb).sqrt();
    if se == 0.0 {
        return if mean(a) > mean(b) { 0.0 } else { 1.0 };
    }
    let t = (mean(a) - mean(b)) / se;
    let df = (va + vb).powi(2) / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    1.0 - StudentsT::new(0.0, 1.0, df).unwrap().cdf(t)
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>().sqrt();
    let sy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum::<f64>().sqrt();
    cov / (sx * sy)
}

/// `P(X >= k)` for `X ~ Binomial(n, p)`.
pub fn binomial_upper_tail(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    1.0 - Binomial::new(p, n).unwrap().cdf(k - 1)
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    (d, kolmogorov_q(lambda))
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = 2.0 * (-1.0f64).powi(j - 1) * (-2.0 * jf * jf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Straightforward recursive tree passes over a level-order node array.
pub struct ReferenceTree {
    pub levels: usize,
    pub branching: usize,
}

impl ReferenceTree {
    fn first_of_level(&self, level: usize) -> usize {
        (0..level).map(|l| self.branching.pow(l as u32)).sum()
    }

    fn state(&self, level: usize, pos: usize, roles: &[TraderRole], w: f64, u: f64) -> [f64; 3] {
        if level == self.levels - 1 {
            return match roles[pos] {
                TraderRole::Optimist => [w, 0.0, 0.0],
                TraderRole::Pessimist => [0.0, u, 0.0],
                TraderRole::Fundamentalist => [0.0, 0.0, 1.0],
            };
        }
        let mut sum = [0.0; 3];
        for c in 0..self.branching {
            let child = self.state(level + 1, pos * self.branching + c, roles, w, u);
            for i in 0..3 {
                sum[i] += child[i];
            }
        }
        sum.map(|s| s / self.branching as f64)
    }

    /// Community states after the backward pass, level order.
    pub fn backward(&self, roles: &[TraderRole], w: f64, u: f64) -> Vec<[f64; 3]> {
        let mut out = Vec::new();
        for level in 0..self.levels - 1 {
            for pos in 0..self.branching.pow(level as u32) {
                out.push(self.state(level, pos, roles, w, u));
            }
        }
        out
    }

    fn blended(&self, level: usize, pos: usize, before: &[[f64; 3]], phi: f64) -> [f64; 3] {
        let own = before[self.first_of_level(level) + pos];
        if level == 0 {
            return own;
        }
        let parent = self.blended(level - 1, pos / self.branching, before, phi);
        [0, 1, 2].map(|i| own[i] * 0.5 + parent[i] * phi)
    }

    /// States after the forward pass applied to `before`.
    pub fn forward(&self, before: &[[f64; 3]], phi: f64) -> Vec<[f64; 3]> {
        let mut out = Vec::new();
        for level in 0..self.levels - 1 {
            for pos in 0..self.branching.pow(level as u32) {
                out.push(self.blended(level, pos, before, phi));
            }
        }
        out
    }
}

pub fn as_arrays(nodes: &[CommunityState]) -> Vec<[f64; 3]> {
    nodes.iter().map(CommunityState::as_array).collect()
}
