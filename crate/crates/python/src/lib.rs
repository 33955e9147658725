//! Python bindings for `rucb-core`, built as the `rucb_py` extension module.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use rucb_core as core;
use rucb_core::Environment as _;

fn to_py(err: core::Error) -> PyErr {
    match err {
        core::Error::Io(_) => PyIOError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn thermo_or_default(thermo: Option<PyRef<'_, ThermoParams>>) -> core::ThermoParams {
    thermo.map(|t| t.inner).unwrap_or_default()
}

/// Gas constant times temperature, in kcal/mol.
#[pyclass(frozen, skip_from_py_object, module = "rucb_py")]
#[derive(Clone, Copy)]
struct ThermoParams {
    inner: core::ThermoParams,
}

#[pymethods]
impl ThermoParams {
    #[new]
    #[pyo3(signature = (rt = core::DEFAULT_RT))]
    fn new(rt: f64) -> PyResult<Self> {
        Ok(Self { inner: core::ThermoParams::new(rt).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_temperature(kelvin: f64) -> PyResult<Self> {
        Ok(Self { inner: core::ThermoParams::from_temperature(kelvin).map_err(to_py)? })
    }

    #[getter]
    fn rt(&self) -> f64 {
        self.inner.rt()
    }

    fn log10_ka(&self, dg: f64) -> f64 {
        self.inner.log10_ka(dg)
    }

    fn __repr__(&self) -> String {
        format!("ThermoParams(rt={})", self.inner.rt())
    }
}

/// Running statistics for one arm.
#[pyclass(skip_from_py_object, module = "rucb_py")]
#[derive(Clone, Default)]
struct ArmState {
    inner: core::ArmState,
}

#[pymethods]
impl ArmState {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    #[pyo3(signature = (dg, thermo = None))]
    fn record_pull(&mut self, dg: f64, thermo: Option<PyRef<'_, ThermoParams>>) -> PyResult<()> {
        self.inner.record_pull(dg, &thermo_or_default(thermo)).map_err(to_py)
    }

    #[getter]
    fn pulls(&self) -> u64 {
        self.inner.pulls()
    }

    #[getter]
    fn sum_ka(&self) -> f64 {
        self.inner.sum_ka()
    }

    fn estimate_log_kapp(&self) -> PyResult<f64> {
        self.inner.estimate_log_kapp().map_err(to_py)
    }

    #[pyo3(signature = (default_sigma = core::DEFAULT_SIGMA))]
    fn estimate_sigma(&self, default_sigma: f64) -> PyResult<f64> {
        self.inner.estimate_sigma(default_sigma).map_err(to_py)
    }
}

/// A library of arms: either synthetic Gaussian arms or a finite pool.
#[pyclass(frozen, module = "rucb_py")]
struct Environment {
    inner: core::AnyEnv,
}

#[pymethods]
impl Environment {
    #[staticmethod]
    #[pyo3(signature = (n_arms, seed = 0, mu_mean = -5.1, mu_std = 0.65, sigma_mean = 0.44, sigma_std = 0.08))]
    fn synthetic(
        n_arms: usize,
        seed: u64,
        mu_mean: f64,
        mu_std: f64,
        sigma_mean: f64,
        sigma_std: f64,
    ) -> PyResult<Self> {
        let spec = core::SyntheticEnvSpec {
            n_arms,
            mu_prior_mean: mu_mean,
            mu_prior_std: mu_std,
            sigma_prior_mean: sigma_mean,
            sigma_prior_std: sigma_std,
            seed,
        };
        let env = core::generate_synthetic(&spec).map_err(to_py)?;
        Ok(Self { inner: core::AnyEnv::Synthetic(env) })
    }

    /// Arms with explicit `(mu, sigma)` free-energy distributions.
    #[staticmethod]
    fn gaussian(arms: Vec<(f64, f64)>) -> PyResult<Self> {
        let arms = arms
            .into_iter()
            .map(|(mu, sigma)| core::GaussianArm::new(mu, sigma))
            .collect::<core::Result<Vec<_>>>()
            .map_err(to_py)?;
        let env = core::SyntheticEnv::from_arms(arms).map_err(to_py)?;
        Ok(Self { inner: core::AnyEnv::Synthetic(env) })
    }

    #[staticmethod]
    fn load_pool(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self { inner: core::AnyEnv::Pool(core::load_pool(path).map_err(to_py)?) })
    }

    /// Pool from one row of free energies per conformation.
    #[staticmethod]
    fn pool(ligand_ids: Vec<String>, rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self { inner: core::AnyEnv::Pool(core::FinitePool::new(ligand_ids, rows).map_err(to_py)?) })
    }

    /// Dock every synthetic arm against `n_conformations` fixed draws.
    #[pyo3(signature = (n_conformations, seed = 0))]
    fn to_pool(&self, n_conformations: usize, seed: u64) -> PyResult<Self> {
        match &self.inner {
            core::AnyEnv::Synthetic(env) => {
                let pool = core::FinitePool::from_synthetic(env, n_conformations, seed).map_err(to_py)?;
                Ok(Self { inner: core::AnyEnv::Pool(pool) })
            }
            core::AnyEnv::Pool(_) => Err(PyValueError::new_err("environment is already a pool")),
        }
    }

    fn write_csv(&self, path: std::path::PathBuf) -> PyResult<()> {
        match &self.inner {
            core::AnyEnv::Pool(pool) => pool.write_csv(path).map_err(to_py),
            core::AnyEnv::Synthetic(_) => Err(PyValueError::new_err("only pools can be written")),
        }
    }

    fn shifted(&self, offset: f64) -> PyResult<Self> {
        match &self.inner {
            core::AnyEnv::Pool(pool) => Ok(Self { inner: core::AnyEnv::Pool(pool.shifted(offset)) }),
            core::AnyEnv::Synthetic(_) => Err(PyValueError::new_err("only pools can be shifted")),
        }
    }

    #[getter]
    fn n_arms(&self) -> usize {
        self.inner.n_arms()
    }

    #[getter]
    fn is_pool(&self) -> bool {
        matches!(self.inner, core::AnyEnv::Pool(_))
    }

    #[pyo3(signature = (thermo = None))]
    fn true_values(&self, thermo: Option<PyRef<'_, ThermoParams>>) -> PyResult<Vec<f64>> {
        self.inner.true_values(&thermo_or_default(thermo)).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.n_arms()
    }
}

#[pyclass(frozen, module = "rucb_py")]
struct RunResult {
    #[pyo3(get)]
    policy: String,
    #[pyo3(get)]
    c: f64,
    #[pyo3(get)]
    predicted_top: Vec<usize>,
    #[pyo3(get)]
    final_estimates: Vec<f64>,
    #[pyo3(get)]
    pull_counts: Vec<u64>,
    /// `(t, arm, dg)` per pull, or None when not recorded.
    #[pyo3(get)]
    trace: Option<Vec<(usize, usize, f64)>>,
    inner: core::RunResult,
}

impl From<core::RunResult> for RunResult {
    fn from(r: core::RunResult) -> Self {
        Self {
            policy: r.policy.to_string(),
            c: r.c,
            predicted_top: r.predicted_top.clone(),
            final_estimates: r.final_estimates.clone(),
            pull_counts: r.pull_counts.clone(),
            trace: r.trace.as_ref().map(|t| t.iter().map(|s| (s.t, s.arm, s.dg)).collect()),
            inner: r,
        }
    }
}

#[pymethods]
impl RunResult {
    fn total_pulls(&self) -> u64 {
        self.inner.total_pulls()
    }

    /// `(precision, performance_loss)` against the environment's truth.
    #[pyo3(signature = (env, thermo = None))]
    fn score(&self, env: PyRef<'_, Environment>, thermo: Option<PyRef<'_, ThermoParams>>) -> PyResult<(f64, f64)> {
        let truth = env.inner.true_values(&thermo_or_default(thermo)).map_err(to_py)?;
        core::score(&self.inner, &truth).map_err(to_py)
    }
}

#[pyclass(frozen, get_all, skip_from_py_object, module = "rucb_py")]
#[derive(Clone, Copy)]
struct CauchyFit {
    amplitude: f64,
    center: f64,
    width: f64,
    residual: f64,
    iterations: usize,
    status: &'static str,
}

#[pymethods]
impl CauchyFit {
    fn __call__(&self, y: f64) -> f64 {
        self.amplitude / ((y - self.center).powi(2) + self.width * self.width)
    }

    #[getter]
    fn converged(&self) -> bool {
        self.status == "converged"
    }
}

/// Run one policy (`"rucb"`, `"ucb"` or `"uniform"`) for `budget` pulls.
/// `c=None` picks the exploration parameter from the positive rate.
#[pyfunction]
#[pyo3(signature = (env, policy, top_m, budget, c = None, seed = 0, sigma_floor = core::DEFAULT_SIGMA, trace = false, thermo = None))]
#[allow(clippy::too_many_arguments)]
fn run(
    env: PyRef<'_, Environment>,
    policy: &str,
    top_m: usize,
    budget: usize,
    c: Option<f64>,
    seed: u64,
    sigma_floor: f64,
    trace: bool,
    thermo: Option<PyRef<'_, ThermoParams>>,
) -> PyResult<RunResult> {
    let policy: core::Policy = policy.parse().map_err(to_py)?;
    let mut config =
        core::RunConfig::new(policy, env.inner.n_arms(), top_m, budget).with_seed(seed).with_sigma_floor(sigma_floor);
    config.thermo = thermo_or_default(thermo);
    if let Some(c) = c {
        config = config.with_c(c);
    }
    if trace {
        config = config.with_trace();
    }
    Ok(core::run(&config, &env.inner).map_err(to_py)?.into())
}

#[pyfunction]
#[pyo3(signature = (dg, thermo = None))]
fn ka_from_dg(dg: f64, thermo: Option<PyRef<'_, ThermoParams>>) -> PyResult<f64> {
    core::ka_from_dg(dg, &thermo_or_default(thermo)).map_err(to_py)
}

#[pyfunction]
fn upper_index(estimate: f64, sigma: f64, n: u64, c: f64) -> PyResult<f64> {
    core::upper_index(estimate, sigma, n, c).map_err(to_py)
}

#[pyfunction]
fn lower_index(estimate: f64, sigma: f64, n: u64, c: f64) -> PyResult<f64> {
    core::lower_index(estimate, sigma, n, c).map_err(to_py)
}

#[pyfunction]
fn classic_ucb_index(estimate: f64, sigma: f64, n: u64, t: u64, c: f64) -> PyResult<f64> {
    core::classic_ucb_index(estimate, sigma, n, t, c).map_err(to_py)
}

#[pyfunction]
fn top_m_indices(values: Vec<f64>, m: usize) -> Vec<usize> {
    core::top_m_indices(&values, m)
}

#[pyfunction]
fn precision(predicted: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    core::precision(&predicted, &truth).map_err(to_py)
}

#[pyfunction]
fn performance_loss(predicted: Vec<usize>, true_values: Vec<f64>, truth: Vec<usize>) -> PyResult<f64> {
    core::performance_loss(&predicted, &true_values, &truth).map_err(to_py)
}

#[pyfunction]
fn c_heuristic(positive_rate: f64) -> PyResult<f64> {
    core::c_heuristic(positive_rate).map_err(to_py)
}

type BinTuple = (f64, f64, f64, usize, f64);

/// Mean pulls binned by true value: a list of
/// `(lo, hi, center, arms, mean_pulls)` tuples.
#[pyfunction]
#[pyo3(signature = (results, true_values, n_bins = 100))]
fn pull_profile(results: Vec<PyRef<'_, RunResult>>, true_values: Vec<f64>, n_bins: usize) -> PyResult<Vec<BinTuple>> {
    let runs: Vec<core::RunResult> = results.iter().map(|r| r.inner.clone()).collect();
    let bins = core::pull_profile(&runs, &true_values, n_bins).map_err(to_py)?;
    Ok(bins.into_iter().map(|b| (b.lo, b.hi, b.center, b.arms, b.mean_pulls)).collect())
}

#[pyfunction]
fn fit_cauchy(ys: Vec<f64>, ns: Vec<f64>) -> PyResult<CauchyFit> {
    let fit = core::fit_cauchy(&ys, &ns).map_err(to_py)?;
    Ok(CauchyFit {
        amplitude: fit.amplitude,
        center: fit.center,
        width: fit.width,
        residual: fit.residual,
        iterations: fit.iterations,
        status: match fit.status {
            core::FitStatus::Converged => "converged",
            core::FitStatus::NotConverged => "not_converged",
            core::FitStatus::Degenerate => "degenerate",
        },
    })
}

#[pyfunction]
fn derive_seed(master: u64, index: u64) -> u64 {
    core::derive_seed(master, index)
}

#[pymodule]
fn rucb_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DEFAULT_RT", core::DEFAULT_RT)?;
    m.add("DEFAULT_SIGMA", core::DEFAULT_SIGMA)?;
    m.add_class::<ThermoParams>()?;
    m.add_class::<ArmState>()?;
    m.add_class::<Environment>()?;
    m.add_class::<RunResult>()?;
    m.add_class::<CauchyFit>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(ka_from_dg, m)?)?;
    m.add_function(wrap_pyfunction!(upper_index, m)?)?;
    m.add_function(wrap_pyfunction!(lower_index, m)?)?;
    m.add_function(wrap_pyfunction!(classic_ucb_index, m)?)?;
    m.add_function(wrap_pyfunction!(top_m_indices, m)?)?;
    m.add_function(wrap_pyfunction!(precision, m)?)?;
    m.add_function(wrap_pyfunction!(performance_loss, m)?)?;
    m.add_function(wrap_pyfunction!(c_heuristic, m)?)?;
    m.add_function(wrap_pyfunction!(pull_profile, m)?)?;
    m.add_function(wrap_pyfunction!(fit_cauchy, m)?)?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    Ok(())
}
