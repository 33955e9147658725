//! Experiment configuration: a single JSON document whose fields can all be
//! overridden from the command line.

use std::fs;
use std::path::{Path, PathBuf};

use rucb_core::{Exploration, Policy, SyntheticEnvSpec, ThermoParams, DEFAULT_RT, DEFAULT_SIGMA};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvSource {
    Synthetic(SyntheticEnvSpec),
    Pool(PathBuf),
}

impl Default for EnvSource {
    fn default() -> Self {
        EnvSource::Synthetic(SyntheticEnvSpec::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub environment: EnvSource,
    /// Draw a new synthetic library for every replicate. When false the
    /// library comes from the synthetic spec's own seed. Pools are always
    /// fixed.
    pub fresh_env_per_replicate: bool,
    pub policy: Policy,
    /// Positive rates `m/N`; `run` and `profile` use the first.
    pub rates: Vec<f64>,
    /// Explicit `m`, taking precedence over `rates` for `run` and `profile`.
    pub top_m: Option<usize>,
    pub budget_ratio: f64,
    /// Uniform-policy budgets for `match-budget`.
    pub budget_ratios: Vec<f64>,
    pub c: Exploration,
    pub c_grid: Vec<f64>,
    pub default_sigma: f64,
    pub sigma_floor: f64,
    pub rt: f64,
    pub replicates: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub n_bins: usize,
    /// Rows written by `gen-pool`.
    pub conformations: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            environment: EnvSource::default(),
            fresh_env_per_replicate: true,
            policy: Policy::Rucb,
            rates: vec![0.01],
            top_m: None,
            budget_ratio: 2.0,
            budget_ratios: vec![1.0, 2.0, 5.0, 10.0, 20.0, 30.0],
            c: Exploration::Auto,
            c_grid: log_grid(0.5, 8.0, 8),
            default_sigma: DEFAULT_SIGMA,
            sigma_floor: DEFAULT_SIGMA,
            rt: DEFAULT_RT,
            replicates: 200,
            seed: 0,
            out: PathBuf::from("out"),
            threads: None,
            n_bins: 100,
            conformations: 1000,
        }
    }
}

/// `points` values spaced evenly in log between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let step = (hi / lo).ln() / (points - 1) as f64;
    (0..points).map(|k| lo * (step * k as f64).exp()).collect()
}

impl ExperimentSpec {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| BenchError::Config { path: path.to_owned(), source })?;
        serde_json::from_str(&text).map_err(|source| BenchError::ConfigJson { path: path.to_owned(), source })
    }

    pub fn thermo(&self) -> Result<ThermoParams> {
        Ok(ThermoParams::new(self.rt)?)
    }

    pub fn set_n_arms(&mut self, n_arms: usize) {
        match &mut self.environment {
            EnvSource::Synthetic(s) => s.n_arms = n_arms,
            EnvSource::Pool(_) => {}
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(BenchError::Spec(msg.to_owned()));
        if self.replicates == 0 {
            return fail("replicates must be at least 1");
        }
        if self.rates.is_empty() {
            return fail("rate axis is empty");
        }
        if self.rates.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return fail("rates must lie in (0, 1)");
        }
        if self.budget_ratios.is_empty() || self.c_grid.is_empty() {
            return fail("sweep axes must be non-empty");
        }
        if [self.budget_ratio].iter().chain(&self.budget_ratios).any(|r| r.is_nan() || *r < 1.0) {
            return fail("budget ratios must be at least 1");
        }
        if self.c_grid.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return fail("c grid values must be finite and non-negative");
        }
        if self.threads == Some(0) {
            return fail("threads must be at least 1");
        }
        if let EnvSource::Synthetic(s) = &self.environment {
            s.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let spec = ExperimentSpec::default();
        let text = serde_json::to_string(&spec).unwrap();
        let back: ExperimentSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let spec: ExperimentSpec = serde_json::from_str(
            r#"{"environment": {"synthetic": {"n_arms": 500, "seed": 3}}, "c": 2.5, "policy": "uniform"}"#,
        )
        .unwrap();
        assert_eq!(spec.c, Exploration::Fixed(2.5));
        assert_eq!(spec.policy, Policy::Uniform);
        match spec.environment {
            EnvSource::Synthetic(s) => {
                assert_eq!(s.n_arms, 500);
                assert_eq!(s.mu_prior_mean, -5.1);
            }
            EnvSource::Pool(_) => panic!("expected synthetic"),
        }
        let pool: ExperimentSpec = serde_json::from_str(r#"{"environment": {"pool": "x.csv"}, "c": "auto"}"#).unwrap();
        assert_eq!(pool.environment, EnvSource::Pool("x.csv".into()));
        assert!(serde_json::from_str::<ExperimentSpec>(r#"{"replicats": 3}"#).is_err());
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = log_grid(0.5, 8.0, 5);
        assert_eq!(g.len(), 5);
        assert!((g[0] - 0.5).abs() < 1e-12 && (g[4] - 8.0).abs() < 1e-12);
        assert!((g[1] / g[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let mut spec = ExperimentSpec::default();
        assert!(spec.validate().is_ok());
        spec.replicates = 0;
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::default();
        spec.rates.clear();
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::default();
        spec.set_n_arms(0);
        assert!(spec.validate().is_err());
    }
}
