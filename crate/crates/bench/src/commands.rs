//! The experiment subcommands. Each writes its tables under the spec's
//! output directory and also returns them for programmatic use.

use std::path::PathBuf;

use rucb_core::{
    fit_cauchy, generate_synthetic, mean_pull_counts, pull_profile, CauchyFit, Environment, Exploration, FinitePool,
    Policy, ProfileBin, Summary,
};
use serde::Serialize;

use crate::error::{BenchError, Result};
use crate::harness::{Batch, Experiment};
use crate::output::{ensure_dir, write_json, Table};
use crate::row;
use crate::spec::{EnvSource, ExperimentSpec};

/// Aggregate of one (policy, configuration) batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub policy: Policy,
    pub rate: f64,
    pub n_arms: usize,
    pub top_m: usize,
    pub budget_ratio: f64,
    pub budget: usize,
    pub c: f64,
    pub replicates: usize,
    pub precision: Summary,
    pub performance_loss: Summary,
}

impl BatchSummary {
    fn of(exp: &Experiment, batch: &Batch) -> Result<Self> {
        let report = batch.report()?;
        let n = exp.n_arms();
        Ok(Self {
            policy: batch.policy,
            rate: batch.top_m as f64 / n as f64,
            n_arms: n,
            top_m: batch.top_m,
            budget_ratio: batch.budget as f64 / n as f64,
            budget: batch.budget,
            c: batch.c,
            replicates: report.replicates,
            precision: report.precision,
            performance_loss: report.performance_loss,
        })
    }

    pub fn precision_std_error(&self) -> f64 {
        self.precision.std_error(self.replicates)
    }
}

const SUMMARY_HEADER: [&str; 12] = [
    "policy",
    "rate",
    "n_arms",
    "top_m",
    "budget_ratio",
    "budget",
    "c",
    "replicates",
    "precision_mean",
    "precision_std",
    "loss_mean",
    "loss_std",
];

fn summary_row(s: &BatchSummary) -> Vec<String> {
    row![
        s.policy,
        s.rate,
        s.n_arms,
        s.top_m,
        s.budget_ratio,
        s.budget,
        s.c,
        s.replicates,
        s.precision.mean,
        s.precision.std,
        s.performance_loss.mean,
        s.performance_loss.std,
    ]
}

fn write_summaries(path: PathBuf, rows: &[BatchSummary]) -> Result<()> {
    let mut table = Table::new(&SUMMARY_HEADER);
    for s in rows {
        table.push(summary_row(s));
    }
    table.write(&path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub summary: BatchSummary,
    pub seed: u64,
    pub pull_count_min: u64,
    pub pull_count_max: u64,
}

/// One policy over all replicates: `run_replicates.csv` and `run_summary.json`.
pub fn cmd_run(spec: &ExperimentSpec) -> Result<RunReport> {
    let exp = Experiment::new(spec.clone())?;
    let out = ensure_dir(&spec.out)?;
    let top_m = exp.primary_top_m()?;
    let budget = exp.budget_for_ratio(spec.budget_ratio);
    let batch = exp.run_batch(spec.policy, top_m, budget, spec.c)?;

    let mut table =
        Table::new(&["replicate", "seed", "precision", "performance_loss", "pull_count_min", "pull_count_max"]);
    let mut lo = u64::MAX;
    let mut hi = 0;
    for r in &batch.replicates {
        let min = *r.result.pull_counts.iter().min().expect("non-empty");
        let max = *r.result.pull_counts.iter().max().expect("non-empty");
        lo = lo.min(min);
        hi = hi.max(max);
        table.push(row![r.index, r.seed, r.precision, r.loss, min, max]);
    }
    table.write(&out.join("run_replicates.csv"))?;

    let report =
        RunReport { summary: BatchSummary::of(&exp, &batch)?, seed: spec.seed, pull_count_min: lo, pull_count_max: hi };
    write_json(&out.join("run_summary.json"), &report)?;
    Ok(report)
}

/// Reversible UCB against uniform at every positive rate: `sweep_rate.csv`.
pub fn cmd_sweep_rate(spec: &ExperimentSpec) -> Result<Vec<BatchSummary>> {
    let exp = Experiment::new(spec.clone())?;
    let out = ensure_dir(&spec.out)?;
    let budget = exp.budget_for_ratio(spec.budget_ratio);
    let mut rows = Vec::new();
    for &rate in &spec.rates {
        let top_m = exp.top_m_for_rate(rate)?;
        for policy in [Policy::Rucb, Policy::Uniform] {
            let batch = exp.run_batch(policy, top_m, budget, spec.c)?;
            rows.push(BatchSummary::of(&exp, &batch)?);
        }
    }
    write_summaries(out.join("sweep_rate.csv"), &rows)?;
    Ok(rows)
}

/// Uniform at every budget ratio plus one reversible-UCB reference row at
/// `budget_ratio`, per rate: `match_budget.csv`.
pub fn cmd_match_budget(spec: &ExperimentSpec) -> Result<Vec<BatchSummary>> {
    let exp = Experiment::new(spec.clone())?;
    let out = ensure_dir(&spec.out)?;
    let mut rows = Vec::new();
    for &rate in &spec.rates {
        let top_m = exp.top_m_for_rate(rate)?;
        for &ratio in &spec.budget_ratios {
            let batch = exp.run_batch(Policy::Uniform, top_m, exp.budget_for_ratio(ratio), spec.c)?;
            rows.push(BatchSummary::of(&exp, &batch)?);
        }
        let reference = exp.run_batch(Policy::Rucb, top_m, exp.budget_for_ratio(spec.budget_ratio), spec.c)?;
        rows.push(BatchSummary::of(&exp, &reference)?);
    }
    write_summaries(out.join("match_budget.csv"), &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct COptimum {
    pub rate: f64,
    pub c_heuristic: f64,
    pub c_max_precision: f64,
    pub max_precision: f64,
    pub c_min_loss: f64,
    pub min_loss: f64,
}

/// Reversible UCB over the c grid at every rate: `sweep_c.csv` and
/// `sweep_c_optimum.csv`.
pub fn cmd_sweep_c(spec: &ExperimentSpec) -> Result<(Vec<BatchSummary>, Vec<COptimum>)> {
    let exp = Experiment::new(spec.clone())?;
    let out = ensure_dir(&spec.out)?;
    let budget = exp.budget_for_ratio(spec.budget_ratio);
    let mut rows = Vec::new();
    let mut optima = Vec::new();
    for &rate in &spec.rates {
        let top_m = exp.top_m_for_rate(rate)?;
        let start = rows.len();
        for &c in &spec.c_grid {
            let batch = exp.run_batch(Policy::Rucb, top_m, budget, Exploration::Fixed(c))?;
            rows.push(BatchSummary::of(&exp, &batch)?);
        }
        let slice: &[BatchSummary] = &rows[start..];
        // first grid point wins ties
        let best_p = slice.iter().fold(&slice[0], |b, s| if s.precision.mean > b.precision.mean { s } else { b });
        let best_l =
            slice.iter().fold(&slice[0], |b, s| if s.performance_loss.mean < b.performance_loss.mean { s } else { b });
        optima.push(COptimum {
            rate: slice[0].rate,
            c_heuristic: rucb_core::c_heuristic(slice[0].rate)?,
            c_max_precision: best_p.c,
            max_precision: best_p.precision.mean,
            c_min_loss: best_l.c,
            min_loss: best_l.performance_loss.mean,
        });
    }
    write_summaries(out.join("sweep_c.csv"), &rows)?;
    let mut table = Table::new(&["rate", "c_heuristic", "c_max_precision", "max_precision", "c_min_loss", "min_loss"]);
    for o in &optima {
        table.push(row![o.rate, o.c_heuristic, o.c_max_precision, o.max_precision, o.c_min_loss, o.min_loss]);
    }
    table.write(&out.join("sweep_c_optimum.csv"))?;
    Ok((rows, optima))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileReport {
    pub policy: Policy,
    pub n_arms: usize,
    pub top_m: usize,
    pub budget: usize,
    pub c: f64,
    pub replicates: usize,
    pub n_bins: usize,
    /// Midpoint between the m-th and (m+1)-th largest true log10 K.
    pub boundary: f64,
    pub peak_bin_mean: f64,
    pub median_bin_mean: f64,
    pub fit: Option<CauchyFit>,
    pub fit_error: Option<String>,
    #[serde(skip)]
    pub bins: Vec<ProfileBin>,
    #[serde(skip)]
    pub arm_true_values: Vec<f64>,
    #[serde(skip)]
    pub arm_mean_pulls: Vec<f64>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Pull-count profile against true log10 K over a fixed library:
/// `profile_bins.csv`, `profile_arms.csv` and `profile_fit.json`.
pub fn cmd_profile(spec: &ExperimentSpec) -> Result<ProfileReport> {
    let mut spec = spec.clone();
    spec.fresh_env_per_replicate = false;
    let exp = Experiment::new(spec.clone())?;
    let out = ensure_dir(&spec.out)?;
    let env = exp.fixed_env().expect("profile runs on a fixed environment");
    let truth = env.true_values(exp.thermo())?;
    let top_m = exp.primary_top_m()?;
    let budget = exp.budget_for_ratio(spec.budget_ratio);
    let batch = exp.run_batch(spec.policy, top_m, budget, spec.c)?;
    let results = batch.results();

    let bins = pull_profile(&results, &truth, spec.n_bins)?;
    let means = mean_pull_counts(&results)?;
    let mut sorted = truth.clone();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let boundary = 0.5 * (sorted[top_m - 1] + sorted[top_m]);
    let peak_bin_mean = bins.iter().map(|b| b.mean_pulls).fold(f64::NEG_INFINITY, f64::max);
    let median_bin_mean = median(&mut bins.iter().map(|b| b.mean_pulls).collect::<Vec<_>>());
    let ys: Vec<f64> = bins.iter().map(|b| b.center).collect();
    let ns: Vec<f64> = bins.iter().map(|b| b.mean_pulls).collect();
    let (fit, fit_error) = match fit_cauchy(&ys, &ns) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let mut table = Table::new(&["bin_lo", "bin_hi", "bin_center", "arms", "mean_pulls"]);
    for b in &bins {
        table.push(row![b.lo, b.hi, b.center, b.arms, b.mean_pulls]);
    }
    table.write(&out.join("profile_bins.csv"))?;
    let mut table = Table::new(&["arm", "true_log_kapp", "mean_pulls"]);
    for (j, (v, n)) in truth.iter().zip(&means).enumerate() {
        table.push(row![j, v, n]);
    }
    table.write(&out.join("profile_arms.csv"))?;

    let report = ProfileReport {
        policy: spec.policy,
        n_arms: exp.n_arms(),
        top_m,
        budget,
        c: batch.c,
        replicates: batch.replicates.len(),
        n_bins: spec.n_bins,
        boundary,
        peak_bin_mean,
        median_bin_mean,
        fit,
        fit_error,
        bins,
        arm_true_values: truth,
        arm_mean_pulls: means,
    };
    write_json(&out.join("profile_fit.json"), &report)?;
    Ok(report)
}

/// Samples a complete docking matrix from the synthetic library:
/// `pool.csv` plus `pool_truth.csv` with closed-form and exact-pool truths.
pub fn cmd_gen_pool(spec: &ExperimentSpec) -> Result<PathBuf> {
    spec.validate()?;
    let EnvSource::Synthetic(synthetic) = &spec.environment else {
        return Err(BenchError::Spec("gen-pool needs a synthetic environment".into()));
    };
    if spec.conformations == 0 {
        return Err(BenchError::Spec("conformations must be at least 1".into()));
    }
    let out = ensure_dir(&spec.out)?;
    let thermo = spec.thermo()?;
    let env = generate_synthetic(synthetic)?;
    let pool = FinitePool::from_synthetic(&env, spec.conformations, rucb_core::derive_seed(spec.seed, 0))?;
    let path = out.join("pool.csv");
    pool.write_csv(&path)?;
    let mut table = Table::new(&["ligand", "mu", "sigma", "closed_form_log_kapp", "pool_log_kapp"]);
    for (j, arm) in env.arms().iter().enumerate() {
        table.push(row![
            pool.ligand_ids()[j],
            arm.mu,
            arm.sigma,
            arm.true_log_kapp(&thermo),
            pool.true_log_kapp(j, &thermo)?,
        ]);
    }
    table.write(&out.join("pool_truth.csv"))?;
    Ok(path)
}
