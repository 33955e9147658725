//! Free energy to association constant conversion and per-arm running
//! estimators.
//!
//! A pull yields one binding free energy sample `dg` (kcal/mol). Its
//! association constant is `K = exp(-dg / RT)`; the apparent constant of an
//! arm is the arithmetic mean of `K` over its pulls. All reported "log K"
//! quantities are base 10.

use std::f64::consts::LN_10;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gas constant in kcal/(mol K).
pub const GAS_CONSTANT: f64 = 1.98720e-3;

/// RT at 298.15 K, rounded to the value used throughout.
pub const DEFAULT_RT: f64 = 0.5925;

/// Default per-pull log10 K spread used when an arm has a single pull.
pub const DEFAULT_SIGMA: f64 = 0.35;

/// Thermodynamic constants used to convert free energies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoParams {
    rt: f64,
}

impl ThermoParams {
    pub fn new(rt: f64) -> Result<Self> {
        if !(rt.is_finite() && rt > 0.0) {
            return Err(Error::InvalidInput(format!("rt must be positive and finite, got {rt}")));
        }
        Ok(Self { rt })
    }

    pub fn from_temperature(kelvin: f64) -> Result<Self> {
        Self::new(GAS_CONSTANT * kelvin)
    }

    pub fn rt(&self) -> f64 {
        self.rt
    }

    pub fn log_base(&self) -> f64 {
        10.0
    }

    /// log10 K of a single free energy sample.
    pub fn log10_ka(&self, dg: f64) -> f64 {
        -dg / (self.rt * LN_10)
    }
}

impl Default for ThermoParams {
    fn default() -> Self {
        Self { rt: DEFAULT_RT }
    }
}

fn check_finite(dg: f64) -> Result<()> {
    if dg.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("free energy must be finite, got {dg}")))
    }
}

/// Association constant `exp(-dg / RT)`.
pub fn ka_from_dg(dg: f64, thermo: &ThermoParams) -> Result<f64> {
    check_finite(dg)?;
    Ok((-dg / thermo.rt).exp())
}

/// Running statistics of one arm.
///
/// `sum_ka` accumulates raw association constants for the apparent-constant
/// estimate, while the per-pull log10 K values feed a Welford accumulator for
/// the spread estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    n: u64,
    sum_ka: f64,
    logk_mean: f64,
    logk_m2: f64,
}

impl ArmState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pulls(&self) -> u64 {
        self.n
    }

    pub fn sum_ka(&self) -> f64 {
        self.sum_ka
    }

    pub fn logk_mean(&self) -> f64 {
        self.logk_mean
    }

    pub fn logk_m2(&self) -> f64 {
        self.logk_m2
    }

    /// Fold one free energy sample into the statistics.
    pub fn record_pull(&mut self, dg: f64, thermo: &ThermoParams) -> Result<()> {
        let ka = ka_from_dg(dg, thermo)?;
        let logk = thermo.log10_ka(dg);
        self.n += 1;
        self.sum_ka += ka;
        let delta = logk - self.logk_mean;
        self.logk_mean += delta / self.n as f64;
        self.logk_m2 += delta * (logk - self.logk_mean);
        Ok(())
    }

    /// Functional form of [`ArmState::record_pull`].
    pub fn with_pull(mut self, dg: f64, thermo: &ThermoParams) -> Result<Self> {
        self.record_pull(dg, thermo)?;
        Ok(self)
    }

    /// log10 of the mean association constant over all pulls.
    pub fn estimate_log_kapp(&self) -> Result<f64> {
        if self.n == 0 {
            return Err(Error::UndefinedEstimate);
        }
        Ok((self.sum_ka / self.n as f64).log10())
    }

    /// Sample standard deviation of the per-pull log10 K values, or
    /// `default_sigma` when only one pull exists.
    pub fn estimate_sigma(&self, default_sigma: f64) -> Result<f64> {
        match self.n {
            0 => Err(Error::UndefinedEstimate),
            1 => Ok(default_sigma),
            n => Ok((self.logk_m2.max(0.0) / (n - 1) as f64).sqrt()),
        }
    }
}
