//! Trader role switching and price formation.
//!
//! Traders are fundamentalists, optimists or pessimists. Each step the
//! community tree is refreshed, every trader may switch role with
//! probabilities driven by excess profits, the price trend and its local
//! community opinion, and the price then moves by at most one tick in the
//! direction of noisy excess demand.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{HierarchyParams, HierarchyTree};
use crate::scenario::Scenario;
use crate::seed::StreamSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TraderRole {
    Optimist,
    Pessimist,
    Fundamentalist,
}

/// Scalar market parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Chartist sensitivity to the price trend (α₂).
    pub trend_sensitivity: f64,
    /// Sensitivity to excess profits (α₃).
    pub profit_sensitivity: f64,
    /// Opinion revision frequency (v₁).
    pub opinion_freq: f64,
    /// Strategy revision frequency (v₂).
    pub strategy_freq: f64,
    /// Price adjustment frequency (β).
    pub price_adjust_freq: f64,
    /// Dividend per unit time (r).
    pub dividend: f64,
    /// Return of the alternative investment per unit time (R).
    pub alt_return: f64,
    /// Fundamentalist profit discount (s).
    pub discount: f64,
    /// Fundamental value (p_f).
    pub fundamental: f64,
    /// Standard deviation of the demand noise (μ).
    pub noise: f64,
    /// Fundamentalist reaction strength (γ).
    pub fundamentalist_reaction: f64,
    /// Volume traded by each chartist (t_c).
    pub chartist_volume: f64,
    /// Length of a time step (δt).
    pub dt: f64,
    /// Trend lookback (δt′).
    pub dt_trend: f64,
    /// Price increment of one adjustment event.
    pub tick: f64,
}

/// The three calibrated parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "SET_II")]
    SetII,
    #[serde(rename = "SET_III")]
    SetIII,
    #[serde(rename = "SET_IV")]
    SetIV,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::SetII, Preset::SetIII, Preset::SetIV];

    pub fn model(self) -> ModelParams {
        let base = ModelParams {
            trend_sensitivity: 0.25,
            profit_sensitivity: 1.0,
            opinion_freq: 4.0,
            strategy_freq: 1.0,
            price_adjust_freq: 4.0,
            dividend: 0.004,
            alt_return: 0.0004,
            discount: 0.75,
            fundamental: 10.0,
            noise: 0.1,
            fundamentalist_reaction: 0.01,
            chartist_volume: 0.015,
            dt: 0.01,
            dt_trend: 0.002,
            tick: 0.01,
        };
        match self {
            Preset::SetII => base,
            Preset::SetIII => ModelParams {
                profit_sensitivity: 0.75,
                opinion_freq: 0.5,
                strategy_freq: 0.5,
                price_adjust_freq: 2.0,
                fundamentalist_reaction: 0.02,
                chartist_volume: 0.02,
                ..base
            },
            Preset::SetIV => ModelParams {
                trend_sensitivity: 0.2,
                opinion_freq: 2.0,
                strategy_freq: 0.6,
                noise: 0.05,
                chartist_volume: 0.01,
                ..base
            },
        }
    }

    pub fn hierarchy(self) -> HierarchyParams {
        let strength = match self {
            Preset::SetII => 1.8,
            Preset::SetIII => 2.25,
            Preset::SetIV => 2.4,
        };
        HierarchyParams {
            strength,
            ..HierarchyParams::default()
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::SetII => "SET_II",
            Preset::SetIII => "SET_III",
            Preset::SetIV => "SET_IV",
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("trend_sensitivity", self.trend_sensitivity),
            ("profit_sensitivity", self.profit_sensitivity),
            ("opinion_freq", self.opinion_freq),
            ("strategy_freq", self.strategy_freq),
            ("price_adjust_freq", self.price_adjust_freq),
            ("dividend", self.dividend),
            ("alt_return", self.alt_return),
            ("discount", self.discount),
            ("fundamental", self.fundamental),
            ("noise", self.noise),
            ("fundamentalist_reaction", self.fundamentalist_reaction),
            ("chartist_volume", self.chartist_volume),
            ("dt", self.dt),
            ("dt_trend", self.dt_trend),
            ("tick", self.tick),
        ];
        for (key, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(key, format!("must be finite, got {v}")));
            }
        }
        for (key, v) in [
            ("dt", self.dt),
            ("dt_trend", self.dt_trend),
            ("fundamental", self.fundamental),
            ("tick", self.tick),
        ] {
            if v <= 0.0 {
                return Err(Error::invalid(key, format!("must be positive, got {v}")));
            }
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::invalid(
                "discount",
                format!("must lie in (0, 1], got {}", self.discount),
            ));
        }
        if self.opinion_freq == 0.0 || self.strategy_freq == 0.0 {
            return Err(Error::invalid("opinion_freq/strategy_freq", "must be non-zero"));
        }
        if self.noise < 0.0 {
            return Err(Error::invalid("noise", "must be non-negative"));
        }
        Ok(())
    }

    /// Whole steps between the two prices compared by the trend.
    pub fn trend_lag(&self) -> usize {
        ((self.dt_trend / self.dt).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RoleCounts {
    pub optimists: usize,
    pub pessimists: usize,
    pub fundamentalists: usize,
}

impl RoleCounts {
    pub fn from_roles(roles: &[TraderRole]) -> Self {
        let mut c = RoleCounts::default();
        for r in roles {
            match r {
                TraderRole::Optimist => c.optimists += 1,
                TraderRole::Pessimist => c.pessimists += 1,
                TraderRole::Fundamentalist => c.fundamentalists += 1,
            }
        }
        c
    }

    pub fn chartists(&self) -> usize {
        self.optimists + self.pessimists
    }

    pub fn total(&self) -> usize {
        self.chartists() + self.fundamentalists
    }
}

/// Recent prices, newest last.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceHistory {
    prices: VecDeque<f64>,
    lag: usize,
}

impl PriceHistory {
    pub fn new(initial: f64, lag: usize) -> Self {
        let lag = lag.max(1);
        let mut prices = VecDeque::with_capacity(lag + 1);
        prices.push_back(initial);
        PriceHistory { prices, lag }
    }

    pub fn push(&mut self, price: f64) {
        if self.prices.len() == self.lag + 1 {
            self.prices.pop_front();
        }
        self.prices.push_back(price);
    }

    pub fn current(&self) -> f64 {
        *self.prices.back().expect("history is never empty")
    }

    /// Price `lag` steps ago, or the oldest recorded one early in the run.
    pub fn lagged(&self) -> f64 {
        *self.prices.front().expect("history is never empty")
    }

    pub fn lag(&self) -> usize {
        self.lag
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    pub price: f64,
    pub fundamental: f64,
    pub history: PriceHistory,
    pub counts: RoleCounts,
}

/// `ṗ = (p_t − p_{t−ℓ}) / δt′`.
pub fn price_trend(history: &PriceHistory, params: &ModelParams) -> f64 {
    (history.current() - history.lagged()) / params.dt_trend
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcessProfits {
    pub fundamentalist: f64,
    pub optimist: f64,
    pub pessimist: f64,
}

pub fn excess_profits(price: f64, fundamental: f64, trend: f64, params: &ModelParams) -> ExcessProfits {
    let fundamentalist = params.discount * ((fundamental - price) / price).abs();
    let chartist_yield = (params.dividend + trend / params.strategy_freq) / price;
    ExcessProfits {
        fundamentalist,
        optimist: chartist_yield - params.alt_return,
        pessimist: params.alt_return - chartist_yield,
    }
}

/// Pressures on the three role pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pressures {
    /// Optimist ↔ pessimist (U₁); positive values push pessimists to optimism.
    pub opinion: f64,
    /// Optimist ↔ fundamentalist (U₂₁).
    pub optimist_fundamentalist: f64,
    /// Pessimist ↔ fundamentalist (U₂₂).
    pub pessimist_fundamentalist: f64,
}

/// U₁ from the local community opinion and the trend. The opinion term is 0
/// when the community holds no chartist mass.
pub fn opinion_pressure(local: (f64, f64), trend: f64, params: &ModelParams, strength: f64) -> f64 {
    let (o, p) = local;
    let mass = o + p;
    let herd = if mass < 1e-12 { 0.0 } else { (o - p) / mass };
    strength * herd + params.trend_sensitivity * trend / params.opinion_freq
}

pub fn transition_pressures(
    local: (f64, f64),
    trend: f64,
    profits: &ExcessProfits,
    params: &ModelParams,
    hparams: &HierarchyParams,
) -> Pressures {
    Pressures {
        opinion: opinion_pressure(local, trend, params, hparams.strength),
        optimist_fundamentalist: params.profit_sensitivity * (profits.fundamentalist - profits.optimist),
        pessimist_fundamentalist: params.profit_sensitivity * (profits.fundamentalist - profits.pessimist),
    }
}

/// Per-trader switching probabilities for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionProbabilities {
    pub optimist_to_pessimist: f64,
    pub pessimist_to_optimist: f64,
    pub optimist_to_fundamentalist: f64,
    pub fundamentalist_to_optimist: f64,
    pub pessimist_to_fundamentalist: f64,
    pub fundamentalist_to_pessimist: f64,
}

impl TransitionProbabilities {
    /// The two exit probabilities of a trader holding `role`, in a fixed order.
    pub fn exits(&self, role: TraderRole) -> [(TraderRole, f64); 2] {
        use TraderRole::*;
        match role {
            Optimist => [
                (Pessimist, self.optimist_to_pessimist),
                (Fundamentalist, self.optimist_to_fundamentalist),
            ],
            Pessimist => [
                (Optimist, self.pessimist_to_optimist),
                (Fundamentalist, self.pessimist_to_fundamentalist),
            ],
            Fundamentalist => [
                (Optimist, self.fundamentalist_to_optimist),
                (Pessimist, self.fundamentalist_to_pessimist),
            ],
        }
    }
}

/// Scales a pair of exit probabilities down proportionally when they sum past 1.
fn cap_pair(a: f64, b: f64) -> (f64, f64) {
    let sum = a + b;
    if sum > 1.0 {
        (a / sum, b / sum)
    } else {
        (a, b)
    }
}

impl TransitionProbabilities {
    /// Renormalises each trader's pair of exits so they sum to at most 1.
    pub fn capped(self) -> Self {
        let (op, of) = cap_pair(self.optimist_to_pessimist, self.optimist_to_fundamentalist);
        let (po, pf) = cap_pair(self.pessimist_to_optimist, self.pessimist_to_fundamentalist);
        let (fo, fp) = cap_pair(self.fundamentalist_to_optimist, self.fundamentalist_to_pessimist);
        TransitionProbabilities {
            optimist_to_pessimist: op,
            pessimist_to_optimist: po,
            optimist_to_fundamentalist: of,
            fundamentalist_to_optimist: fo,
            pessimist_to_fundamentalist: pf,
            fundamentalist_to_pessimist: fp,
        }
    }
}

fn clamp_unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// `π_{o→p}, π_{p→o}` for a given opinion pressure.
fn opinion_probabilities(counts: &RoleCounts, u1: f64, params: &ModelParams) -> (f64, f64) {
    let n = counts.total() as f64;
    let chartist_share = if n > 0.0 { counts.chartists() as f64 / n } else { 0.0 };
    let rate = params.opinion_freq * chartist_share * params.dt;
    (clamp_unit(rate * (-u1).exp()), clamp_unit(rate * u1.exp()))
}

/// The six probabilities, each clamped to [0, 1] but not yet capped per trader.
fn raw_probabilities(counts: &RoleCounts, pressures: &Pressures, params: &ModelParams) -> TransitionProbabilities {
    let n = counts.total() as f64;
    let frac = |k: usize| if n > 0.0 { k as f64 / n } else { 0.0 };
    let u21 = pressures.optimist_fundamentalist;
    let u22 = pressures.pessimist_fundamentalist;
    let rate = params.strategy_freq * params.dt;
    let (op, po) = opinion_probabilities(counts, pressures.opinion, params);
    TransitionProbabilities {
        optimist_to_pessimist: op,
        pessimist_to_optimist: po,
        optimist_to_fundamentalist: clamp_unit(rate * frac(counts.optimists) * (-u21).exp()),
        fundamentalist_to_optimist: clamp_unit(rate * frac(counts.fundamentalists) * u21.exp()),
        pessimist_to_fundamentalist: clamp_unit(rate * frac(counts.pessimists) * (-u22).exp()),
        fundamentalist_to_pessimist: clamp_unit(rate * frac(counts.fundamentalists) * u22.exp()),
    }
}

pub fn transition_probabilities(
    counts: &RoleCounts,
    pressures: &Pressures,
    params: &ModelParams,
) -> TransitionProbabilities {
    raw_probabilities(counts, pressures, params).capped()
}

/// Chartist and fundamentalist excess demand `(ED_c, ED_f)`.
pub fn excess_demand(counts: &RoleCounts, price: f64, fundamental: f64, params: &ModelParams) -> (f64, f64) {
    let chartist = (counts.optimists as f64 - counts.pessimists as f64) * params.chartist_volume;
    let fundamentalist = counts.fundamentalists as f64 * params.fundamentalist_reaction * (fundamental - price);
    (chartist, fundamentalist)
}

/// Probabilities `(up, down)` of a one-tick move for a given noisy excess demand.
pub fn price_move_probabilities(total_demand: f64, params: &ModelParams) -> (f64, f64) {
    let pressure = params.price_adjust_freq * total_demand * params.dt;
    let up = pressure.max(0.0).min(1.0);
    let down = (-pressure).max(0.0).min(1.0);
    (up, down)
}

/// Draws noise and moves the price by at most one tick; never below one tick.
/// The result lies on the tick grid.
pub fn price_update<R: Rng + ?Sized>(
    price: f64,
    demand: (f64, f64),
    params: &ModelParams,
    rng: &mut R,
) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let (up, down) = price_move_probabilities(demand.0 + demand.1 + params.noise * z, params);
    let u: f64 = rng.random();
    let per_unit = 1.0 / params.tick;
    let level = (price * per_unit).round();
    let next = if u < up {
        level + 1.0
    } else if u < down {
        level - 1.0
    } else {
        level
    };
    next.max(1.0) / per_unit
}

/// Per-step record of one run. Index 0 holds the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSeries {
    pub price: Vec<f64>,
    pub fundamental: Vec<f64>,
    pub optimists: Vec<u32>,
    pub pessimists: Vec<u32>,
    pub fundamentalists: Vec<u32>,
    pub params: ModelParams,
    pub hierarchy: HierarchyParams,
    pub seed: StreamSeed,
}

impl MarketSeries {
    fn with_capacity(cap: usize, params: ModelParams, hierarchy: HierarchyParams, seed: StreamSeed) -> Self {
        MarketSeries {
            price: Vec::with_capacity(cap),
            fundamental: Vec::with_capacity(cap),
            optimists: Vec::with_capacity(cap),
            pessimists: Vec::with_capacity(cap),
            fundamentalists: Vec::with_capacity(cap),
            params,
            hierarchy,
            seed,
        }
    }

    fn record(&mut self, state: &MarketState) {
        self.price.push(state.price);
        self.fundamental.push(state.fundamental);
        self.optimists.push(state.counts.optimists as u32);
        self.pessimists.push(state.counts.pessimists as u32);
        self.fundamentalists.push(state.counts.fundamentalists as u32);
    }

    /// Number of simulated steps (the initial state is not a step).
    pub fn steps(&self) -> usize {
        self.price.len().saturating_sub(1)
    }

    pub fn max_price_from(&self, start: usize) -> Option<f64> {
        self.price.get(start..)?.iter().copied().reduce(f64::max)
    }
}

/// One run of the hierarchical market.
#[derive(Debug, Clone)]
pub struct Simulation {
    params: ModelParams,
    hparams: HierarchyParams,
    scenario: Scenario,
    tree: HierarchyTree,
    state: MarketState,
    rng: ChaCha8Rng,
    step: usize,
    series: MarketSeries,
    // scratch: per bottom-community (o→p, p→o) probabilities
    local_probs: Vec<(f64, f64)>,
}

impl Simulation {
    /// Roles start one third each (residue to fundamentalists), placed on
    /// the leaves in a seeded random order; the price starts at `p_f`.
    pub fn new(params: ModelParams, hparams: HierarchyParams, scenario: Scenario, seed: StreamSeed) -> Result<Self> {
        params.validate()?;
        hparams.validate()?;
        let n = crate::hierarchy::counts(&hparams)?.traders;
        scenario.validate(&hparams)?;
        let mut rng = ChaCha8Rng::from_seed(seed.0);
        let third = n / 3;
        let mut roles = Vec::with_capacity(n);
        roles.extend(std::iter::repeat_n(TraderRole::Optimist, third));
        roles.extend(std::iter::repeat_n(TraderRole::Pessimist, third));
        roles.extend(std::iter::repeat_n(TraderRole::Fundamentalist, n - 2 * third));
        roles.shuffle(&mut rng);
        Self::with_roles(params, hparams, scenario, seed, rng, roles)
    }

    /// Starts from an explicit role assignment.
    pub fn from_roles(
        params: ModelParams,
        hparams: HierarchyParams,
        scenario: Scenario,
        seed: StreamSeed,
        roles: Vec<TraderRole>,
    ) -> Result<Self> {
        params.validate()?;
        hparams.validate()?;
        scenario.validate(&hparams)?;
        let rng = ChaCha8Rng::from_seed(seed.0);
        Self::with_roles(params, hparams, scenario, seed, rng, roles)
    }

    fn with_roles(
        params: ModelParams,
        hparams: HierarchyParams,
        scenario: Scenario,
        seed: StreamSeed,
        rng: ChaCha8Rng,
        roles: Vec<TraderRole>,
    ) -> Result<Self> {
        let mut tree = HierarchyTree::new(&hparams, roles)?;
        tree.refresh(&hparams);
        let counts = RoleCounts::from_roles(tree.roles());
        let state = MarketState {
            price: params.fundamental,
            fundamental: params.fundamental,
            history: PriceHistory::new(params.fundamental, params.trend_lag()),
            counts,
        };
        let mut series = MarketSeries::with_capacity(1, params, hparams, seed);
        series.record(&state);
        let bottom = tree.level_range(hparams.levels - 2).len();
        Ok(Simulation {
            params,
            hparams,
            scenario,
            tree,
            state,
            rng,
            step: 0,
            series,
            local_probs: vec![(0.0, 0.0); bottom],
        })
    }

    pub fn state(&self) -> &MarketState {
        &self.state
    }

    pub fn tree(&self) -> &HierarchyTree {
        &self.tree
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn hierarchy_params(&self) -> &HierarchyParams {
        &self.hparams
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Steps completed so far.
    pub fn steps_done(&self) -> usize {
        self.step
    }

    pub fn series(&self) -> &MarketSeries {
        &self.series
    }

    pub fn into_series(self) -> MarketSeries {
        self.series
    }

    /// Backward pass, forward pass, role switching, price update.
    pub fn step(&mut self) {
        let t = self.step + 1;
        let hp = self.hparams;
        let params = self.params;

        let echo = self.scenario.echo();
        self.tree.backward_pass_with(|role, parent| {
            echo.effective_influence(role, parent, hp.optimist_influence, hp.pessimist_influence)
        });
        let pump = self.scenario.pump_dump().filter(|p| p.is_active(t));
        match pump {
            Some(p) => self
                .tree
                .forward_pass_with(hp.diffusion, |node, q| p.emission(node, q)),
            None => self.tree.forward_pass(hp.diffusion),
        }

        let trend = price_trend(&self.state.history, &params);
        let profits = excess_profits(self.state.price, self.state.fundamental, trend, &params);
        let global = raw_probabilities(
            &self.state.counts,
            &transition_pressures((0.0, 0.0), trend, &profits, &params, &hp),
            &params,
        );

        let bottom = self.tree.level_range(hp.levels - 2);
        for (slot, node) in self.local_probs.iter_mut().zip(bottom) {
            let mut s = self.tree.node(node);
            if let Some(p) = pump {
                s = p.emission(node, &s);
            }
            let u1 = opinion_pressure((s.optimist, s.pessimist), trend, &params, hp.strength);
            *slot = opinion_probabilities(&self.state.counts, u1, &params);
        }

        // leaves of bottom community j are the j-th chunk of k roles
        let k = hp.branching;
        let roles = self.tree.roles_mut();
        for (group, &(op, po)) in roles.chunks_mut(k).zip(self.local_probs.iter()) {
            let local = TransitionProbabilities {
                optimist_to_pessimist: op,
                pessimist_to_optimist: po,
                ..global
            }
            .capped();
            for role in group.iter_mut() {
                let u: f64 = self.rng.random();
                let [(first, p1), (second, p2)] = local.exits(*role);
                if u < p1 {
                    *role = first;
                } else if u < p1 + p2 {
                    *role = second;
                }
            }
        }
        self.state.counts = RoleCounts::from_roles(self.tree.roles());

        let demand = excess_demand(&self.state.counts, self.state.price, self.state.fundamental, &params);
        self.state.price = price_update(self.state.price, demand, &params, &mut self.rng);
        self.state.history.push(self.state.price);
        self.step = t;
        self.series.record(&self.state);
    }

    pub fn run(mut self, steps: usize) -> MarketSeries {
        let extra = steps.saturating_sub(self.step);
        self.series.price.reserve(extra);
        self.series.fundamental.reserve(extra);
        self.series.optimists.reserve(extra);
        self.series.pessimists.reserve(extra);
        self.series.fundamentalists.reserve(extra);
        while self.step < steps {
            self.step();
        }
        self.series
    }
}

/// Convenience wrapper: simulate `steps` steps and return the series.
pub fn simulate(
    params: ModelParams,
    hparams: HierarchyParams,
    scenario: Scenario,
    seed: StreamSeed,
    steps: usize,
) -> Result<MarketSeries> {
    Ok(Simulation::new(params, hparams, scenario, seed)?.run(steps))
}
