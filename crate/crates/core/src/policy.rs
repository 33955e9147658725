//! Sampling policies over a fixed budget of pulls.
//!
//! Every policy starts by pulling each arm once. The reversible rule then
//! repeatedly takes the `m` arms with the largest upper index and pulls the
//! one among them with the smallest lower index, concentrating pulls on arms
//! near the top-`m` boundary.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::env::{Environment, SimRng};
use crate::error::{Error, Result};
use crate::index::{classic_ucb_index, lower_index, upper_index};
use crate::metrics::c_heuristic;
use crate::ranking::{top_m_indices, Asc, Desc, TopSplit};
use crate::thermo::{ArmState, ThermoParams, DEFAULT_SIGMA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Rucb,
    Ucb,
    Uniform,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Rucb => "rucb",
            Policy::Ucb => "ucb",
            Policy::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rucb" => Ok(Policy::Rucb),
            "ucb" => Ok(Policy::Ucb),
            "uniform" => Ok(Policy::Uniform),
            other => Err(Error::InvalidConfig(format!("unknown policy {other:?}"))),
        }
    }
}

/// Exploration parameter: fixed, or derived from the positive rate `m/N`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Exploration {
    #[default]
    Auto,
    Fixed(f64),
}

impl Exploration {
    pub fn resolve(&self, top_m: usize, n_arms: usize) -> Result<f64> {
        match *self {
            Exploration::Fixed(c) => Ok(c),
            Exploration::Auto => c_heuristic(top_m as f64 / n_arms as f64),
        }
    }
}

impl fmt::Display for Exploration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exploration::Auto => f.write_str("auto"),
            Exploration::Fixed(c) => write!(f, "{c}"),
        }
    }
}

impl FromStr for Exploration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Exploration::Auto);
        }
        s.parse::<f64>()
            .map(Exploration::Fixed)
            .map_err(|_| Error::InvalidConfig(format!("c must be a number or \"auto\", got {s:?}")))
    }
}

impl Serialize for Exploration {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exploration::Auto => serializer.serialize_str("auto"),
            Exploration::Fixed(c) => serializer.serialize_f64(*c),
        }
    }
}

impl<'de> Deserialize<'de> for Exploration {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(c) => Ok(Exploration::Fixed(c)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_arms: usize,
    pub top_m: usize,
    pub budget: usize,
    #[serde(default)]
    pub c: Exploration,
    #[serde(default = "default_sigma")]
    pub default_sigma: f64,
    /// Lower bound on the spread fed to the indices. A two-pull sample std
    /// can be arbitrarily close to zero, which would freeze that arm's band.
    #[serde(default = "default_sigma")]
    pub sigma_floor: f64,
    #[serde(default)]
    pub seed: u64,
    pub policy: Policy,
    #[serde(default)]
    pub thermo: ThermoParams,
    #[serde(default)]
    pub record_trace: bool,
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA
}

impl RunConfig {
    pub fn new(policy: Policy, n_arms: usize, top_m: usize, budget: usize) -> Self {
        Self {
            n_arms,
            top_m,
            budget,
            c: Exploration::Auto,
            default_sigma: DEFAULT_SIGMA,
            sigma_floor: DEFAULT_SIGMA,
            seed: 0,
            policy,
            thermo: ThermoParams::default(),
            record_trace: false,
        }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = Exploration::Fixed(c);
        self
    }

    pub fn with_sigma_floor(mut self, floor: f64) -> Self {
        self.sigma_floor = floor;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.top_m == 0 || self.top_m >= self.n_arms {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= top_m < n_arms, got top_m={} n_arms={}",
                self.top_m, self.n_arms
            )));
        }
        if self.budget < self.n_arms {
            return Err(Error::InsufficientBudget { budget: self.budget, n_arms: self.n_arms });
        }
        if let Exploration::Fixed(c) = self.c {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::InvalidConfig(format!("c must be finite and non-negative, got {c}")));
            }
        }
        if !(self.default_sigma.is_finite() && self.default_sigma >= 0.0) {
            return Err(Error::InvalidConfig("default_sigma must be finite and non-negative".into()));
        }
        if !(self.sigma_floor.is_finite() && self.sigma_floor >= 0.0) {
            return Err(Error::InvalidConfig("sigma_floor must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// One pull: round `t` (1-based), the arm pulled and the free energy drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub t: usize,
    pub arm: usize,
    pub dg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub policy: Policy,
    /// Exploration parameter actually used.
    pub c: f64,
    /// Predicted top-`m` arm indices in ascending order.
    pub predicted_top: Vec<usize>,
    pub final_estimates: Vec<f64>,
    pub pull_counts: Vec<u64>,
    pub trace: Option<Vec<TraceStep>>,
}

impl RunResult {
    pub fn total_pulls(&self) -> u64 {
        self.pull_counts.iter().sum()
    }
}

/// Per-run mutable state shared by the policies.
struct Sampler<'a, E: Environment + ?Sized> {
    env: &'a E,
    thermo: ThermoParams,
    default_sigma: f64,
    sigma_floor: f64,
    rng: SimRng,
    states: Vec<ArmState>,
    trace: Option<Vec<TraceStep>>,
    t: usize,
}

impl<'a, E: Environment + ?Sized> Sampler<'a, E> {
    fn new(config: &RunConfig, env: &'a E) -> Result<Self> {
        config.validate()?;
        if env.n_arms() < config.n_arms {
            return Err(Error::InvalidConfig(format!(
                "environment has {} arms, config needs {}",
                env.n_arms(),
                config.n_arms
            )));
        }
        Ok(Self {
            env,
            thermo: config.thermo,
            default_sigma: config.default_sigma,
            sigma_floor: config.sigma_floor,
            rng: SimRng::seed_from_u64(config.seed),
            states: vec![ArmState::new(); config.n_arms],
            trace: config.record_trace.then(|| Vec::with_capacity(config.budget)),
            t: 0,
        })
    }

    fn pull(&mut self, arm: usize) -> Result<()> {
        let dg = self.env.sample_dg(arm, &mut self.rng)?;
        self.states[arm].record_pull(dg, &self.thermo)?;
        self.t += 1;
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceStep { t: self.t, arm, dg });
        }
        Ok(())
    }

    fn initialize(&mut self) -> Result<()> {
        for arm in 0..self.states.len() {
            self.pull(arm)?;
        }
        Ok(())
    }

    fn estimate(&self, arm: usize) -> Result<f64> {
        self.states[arm].estimate_log_kapp()
    }

    fn sigma(&self, arm: usize) -> Result<f64> {
        Ok(self.states[arm].estimate_sigma(self.default_sigma)?.max(self.sigma_floor))
    }

    fn band(&self, arm: usize, c: f64) -> Result<(f64, f64)> {
        let est = self.estimate(arm)?;
        let sigma = self.sigma(arm)?;
        let n = self.states[arm].pulls();
        Ok((upper_index(est, sigma, n, c)?, lower_index(est, sigma, n, c)?))
    }

    fn finish(self, policy: Policy, c: f64, top_m: usize) -> Result<RunResult> {
        let final_estimates = self.states.iter().map(ArmState::estimate_log_kapp).collect::<Result<Vec<f64>>>()?;
        Ok(RunResult {
            policy,
            c,
            predicted_top: top_m_indices(&final_estimates, top_m),
            final_estimates,
            pull_counts: self.states.iter().map(ArmState::pulls).collect(),
            trace: self.trace,
        })
    }
}

/// Runs the policy named in `config`.
pub fn run<E: Environment + ?Sized>(config: &RunConfig, env: &E) -> Result<RunResult> {
    match config.policy {
        Policy::Rucb => run_rucb(config, env),
        Policy::Ucb => run_ucb(config, env),
        Policy::Uniform => run_uniform(config, env),
    }
}

/// Reversible UCB with incrementally maintained rankings.
pub fn run_rucb<E: Environment + ?Sized>(config: &RunConfig, env: &E) -> Result<RunResult> {
    let mut sampler = Sampler::new(config, env)?;
    let c = config.c.resolve(config.top_m, config.n_arms)?;
    sampler.initialize()?;
    let (upper, lower): (Vec<f64>, Vec<f64>) =
        (0..config.n_arms).map(|j| sampler.band(j, c)).collect::<Result<Vec<_>>>()?.into_iter().unzip();
    let mut split = TopSplit::new(config.top_m, upper, lower);
    for _ in config.n_arms..config.budget {
        let arm = split.pick();
        sampler.pull(arm)?;
        let (u, l) = sampler.band(arm, c)?;
        split.update(arm, u, l);
    }
    sampler.finish(Policy::Rucb, c, config.top_m)
}

/// Reversible UCB recomputing every index at every round. Kept as the
/// reference the incremental version is checked against.
pub fn run_rucb_naive<E: Environment + ?Sized>(config: &RunConfig, env: &E) -> Result<RunResult> {
    let mut sampler = Sampler::new(config, env)?;
    let c = config.c.resolve(config.top_m, config.n_arms)?;
    sampler.initialize()?;
    for _ in config.n_arms..config.budget {
        let bands = (0..config.n_arms).map(|j| sampler.band(j, c)).collect::<Result<Vec<_>>>()?;
        let mut by_upper: Vec<Desc> = bands.iter().enumerate().map(|(j, b)| Desc(b.0, j)).collect();
        by_upper.sort_unstable();
        let arm = by_upper[..config.top_m].iter().map(|k| Asc(bands[k.1].1, k.1)).min().expect("top_m >= 1").1;
        sampler.pull(arm)?;
    }
    sampler.finish(Policy::Rucb, c, config.top_m)
}

/// Classic UCB: each round pulls the single arm maximizing
/// `estimate + c * sigma * sqrt(ln t / n)`. The prediction is the top `m` by
/// final estimate, as for the reversible rule.
pub fn run_ucb<E: Environment + ?Sized>(config: &RunConfig, env: &E) -> Result<RunResult> {
    let mut sampler = Sampler::new(config, env)?;
    let c = config.c.resolve(config.top_m, config.n_arms)?;
    sampler.initialize()?;
    for t in (config.n_arms + 1)..=config.budget {
        let mut best: Option<Desc> = None;
        for j in 0..config.n_arms {
            let state = &sampler.states[j];
            let idx = classic_ucb_index(sampler.estimate(j)?, sampler.sigma(j)?, state.pulls(), t as u64, c)?;
            let key = Desc(idx, j);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        sampler.pull(best.expect("n_arms >= 2").1)?;
    }
    sampler.finish(Policy::Ucb, c, config.top_m)
}

/// Uniform allocation: `budget / N` pulls per arm, with the remainder
/// handed to distinct arms chosen at random.
pub fn run_uniform<E: Environment + ?Sized>(config: &RunConfig, env: &E) -> Result<RunResult> {
    let mut sampler = Sampler::new(config, env)?;
    let c = config.c.resolve(config.top_m, config.n_arms)?;
    let n = config.n_arms;
    let rounds = config.budget / n;
    let mut extra = sample(&mut sampler.rng, n, config.budget % n).into_vec();
    extra.sort_unstable();
    for _ in 0..rounds {
        sampler.initialize()?;
    }
    for arm in extra {
        sampler.pull(arm)?;
    }
    sampler.finish(Policy::Uniform, c, config.top_m)
}
