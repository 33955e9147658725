//! Replicated execution of one policy configuration.
//!
//! Replicate `i` derives its seeds from `(master_seed, i)` alone, and results
//! are gathered in replicate order, so output does not depend on the number
//! of worker threads.

use std::borrow::Cow;

use rayon::prelude::*;
use rayon::ThreadPool;
use rucb_core::{
    derive_seed, generate_synthetic, load_pool, run, score, AnyEnv, Environment, Exploration, MetricsReport, Policy,
    RunConfig, RunResult, ThermoParams,
};

use crate::error::{BenchError, Result};
use crate::spec::{EnvSource, ExperimentSpec};

/// Environment variable consulted when no thread count is configured.
pub const THREADS_ENV: &str = "SCREEN_THREADS";

#[derive(Debug, Clone)]
pub struct Replicate {
    pub index: usize,
    pub seed: u64,
    pub precision: f64,
    pub loss: f64,
    pub result: RunResult,
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub policy: Policy,
    pub top_m: usize,
    pub budget: usize,
    pub c: f64,
    pub replicates: Vec<Replicate>,
}

impl Batch {
    pub fn report(&self) -> Result<MetricsReport> {
        let precisions = self.replicates.iter().map(|r| r.precision).collect();
        let losses = self.replicates.iter().map(|r| r.loss).collect();
        Ok(MetricsReport::from_replicates(precisions, losses)?)
    }

    pub fn results(&self) -> Vec<RunResult> {
        self.replicates.iter().map(|r| r.result.clone()).collect()
    }
}

pub struct Experiment {
    spec: ExperimentSpec,
    thermo: ThermoParams,
    fixed_env: Option<AnyEnv>,
    n_arms: usize,
    pool: ThreadPool,
}

fn resolve_threads(configured: Option<usize>) -> Result<usize> {
    if let Some(n) = configured {
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| BenchError::Spec(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

impl Experiment {
    pub fn new(spec: ExperimentSpec) -> Result<Self> {
        spec.validate()?;
        let thermo = spec.thermo()?;
        let (fixed_env, n_arms) = match &spec.environment {
            EnvSource::Pool(path) => {
                let pool = load_pool(path)?;
                let n = pool.n_arms();
                (Some(AnyEnv::Pool(pool)), n)
            }
            EnvSource::Synthetic(s) if !spec.fresh_env_per_replicate => {
                (Some(AnyEnv::Synthetic(generate_synthetic(s)?)), s.n_arms)
            }
            EnvSource::Synthetic(s) => (None, s.n_arms),
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(resolve_threads(spec.threads)?)
            .build()
            .map_err(|e| BenchError::Spec(format!("cannot start worker threads: {e}")))?;
        Ok(Self { spec, thermo, fixed_env, n_arms, pool })
    }

    pub fn spec(&self) -> &ExperimentSpec {
        &self.spec
    }

    pub fn thermo(&self) -> &ThermoParams {
        &self.thermo
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// The environment shared by all replicates, if there is one.
    pub fn fixed_env(&self) -> Option<&AnyEnv> {
        self.fixed_env.as_ref()
    }

    /// `m` for a positive rate, rounded to the nearest integer.
    pub fn top_m_for_rate(&self, rate: f64) -> Result<usize> {
        let m = (rate * self.n_arms as f64).round() as usize;
        if m == 0 || m >= self.n_arms {
            return Err(BenchError::Spec(format!("rate {rate} gives top_m={m}, outside [1, {})", self.n_arms)));
        }
        Ok(m)
    }

    /// `m` from the explicit `top_m` or the first rate.
    pub fn primary_top_m(&self) -> Result<usize> {
        match self.spec.top_m {
            Some(m) => Ok(m),
            None => self.top_m_for_rate(self.spec.rates[0]),
        }
    }

    pub fn budget_for_ratio(&self, ratio: f64) -> usize {
        (ratio * self.n_arms as f64).round() as usize
    }

    fn env_for(&self, replicate_seed: u64) -> Result<Cow<'_, AnyEnv>> {
        match (&self.fixed_env, &self.spec.environment) {
            (Some(env), _) => Ok(Cow::Borrowed(env)),
            (None, EnvSource::Synthetic(s)) => {
                let mut s = *s;
                s.seed = derive_seed(replicate_seed, 0);
                Ok(Cow::Owned(AnyEnv::Synthetic(generate_synthetic(&s)?)))
            }
            (None, EnvSource::Pool(_)) => unreachable!("pools are always fixed"),
        }
    }

    fn run_one(&self, config: &RunConfig, index: usize) -> Result<Replicate> {
        let seed = derive_seed(self.spec.seed, index as u64);
        let env = self.env_for(seed)?;
        let mut config = config.clone();
        config.seed = derive_seed(seed, 1);
        let result = run(&config, env.as_ref())?;
        let truth = env.true_values(&self.thermo)?;
        let (precision, loss) = score(&result, &truth)?;
        Ok(Replicate { index, seed, precision, loss, result })
    }

    /// Runs every replicate of one configuration.
    pub fn run_batch(&self, policy: Policy, top_m: usize, budget: usize, c: Exploration) -> Result<Batch> {
        let mut config = RunConfig::new(policy, self.n_arms, top_m, budget);
        config.c = c;
        config.default_sigma = self.spec.default_sigma;
        config.sigma_floor = self.spec.sigma_floor;
        config.thermo = self.thermo;
        config.validate()?;
        let c_used = c.resolve(top_m, self.n_arms)?;
        let replicates = self.pool.install(|| {
            (0..self.spec.replicates).into_par_iter().map(|i| self.run_one(&config, i)).collect::<Result<Vec<_>>>()
        })?;
        Ok(Batch { policy, top_m, budget, c: c_used, replicates })
    }
}
