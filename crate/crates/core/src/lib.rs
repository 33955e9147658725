//! Top-m arm identification under a fixed pull budget, framed as ensemble
//! docking: arms are ligands, a pull docks one ligand against one randomly
//! chosen receptor conformation, and the reward is the resulting binding
//! free energy.
//!
//! The main entry point is [`policy::run`], which executes the reversible
//! UCB rule or one of the baselines over an [`env::Environment`].

pub mod env;
pub mod error;
pub mod fit;
pub mod index;
pub mod metrics;
pub mod policy;
mod ranking;
pub mod seed;
pub mod thermo;

pub use env::{
    generate_synthetic, load_pool, pool_true_log_kapp, AnyEnv, Environment, FinitePool, GaussianArm, SimRng,
    SyntheticEnv, SyntheticEnvSpec,
};
pub use error::{Error, Result};
pub use fit::{fit_cauchy, CauchyFit, FitStatus};
pub use index::{classic_ucb_index, lower_index, upper_index};
pub use metrics::{
    c_heuristic, mean_pull_counts, performance_loss, precision, pull_profile, score, MetricsReport, ProfileBin, Summary,
};
pub use policy::{
    run, run_rucb, run_rucb_naive, run_ucb, run_uniform, Exploration, Policy, RunConfig, RunResult, TraceStep,
};
pub use ranking::top_m_indices;
pub use seed::derive_seed;
pub use thermo::{ka_from_dg, ArmState, ThermoParams, DEFAULT_RT, DEFAULT_SIGMA};
