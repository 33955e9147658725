use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rucb_bench::{
    cmd_gen_pool, cmd_match_budget, cmd_profile, cmd_run, cmd_sweep_c, cmd_sweep_rate, BenchError, EnvSource,
    ExperimentSpec, Result,
};
use rucb_core::{Exploration, Policy};

#[derive(Parser)]
#[command(name = "rucb-bench", version, about = "Top-m screening experiments with reversible UCB")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one policy over all replicates.
    Run(Overrides),
    /// Compare rUCB and uniform across positive rates.
    SweepRate(Overrides),
    /// Uniform at increasing budgets against the rUCB reference.
    MatchBudget(Overrides),
    /// Sweep the exploration parameter c.
    SweepC(Overrides),
    /// Pull-count profile and Cauchy-Lorentz fit.
    Profile(Overrides),
    /// Write a synthetic docking matrix as a pool CSV.
    GenPool(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// JSON experiment document; flags below take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_arms: Option<usize>,
    #[arg(long)]
    top_m: Option<usize>,
    #[arg(long)]
    budget_ratio: Option<f64>,
    /// Number or "auto".
    #[arg(long)]
    c: Option<Exploration>,
    #[arg(long)]
    policy: Option<Policy>,
    /// Positive rate(s) m/N, comma separated.
    #[arg(long, value_delimiter = ',')]
    rate: Option<Vec<f64>>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Pool CSV to use instead of the synthetic library.
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to SCREEN_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    c_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    budget_ratios: Option<Vec<f64>>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    conformations: Option<usize>,
    /// Seed of the synthetic library when it is fixed or written by gen-pool.
    #[arg(long)]
    env_seed: Option<u64>,
    /// Keep one synthetic library for all replicates.
    #[arg(long)]
    fixed_env: bool,
    #[arg(long)]
    rt: Option<f64>,
    /// Lower bound on the spread used in the indices; 0 disables it.
    #[arg(long)]
    sigma_floor: Option<f64>,
}

impl Overrides {
    fn into_spec(self) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_json_file(path)?,
            None => ExperimentSpec::default(),
        };
        if let Some(pool) = self.pool {
            spec.environment = EnvSource::Pool(pool);
        }
        if let Some(n) = self.n_arms {
            if let EnvSource::Pool(_) = spec.environment {
                return Err(BenchError::Spec("--n-arms cannot be combined with a pool".into()));
            }
            spec.set_n_arms(n);
        }
        if let Some(seed) = self.env_seed {
            match &mut spec.environment {
                EnvSource::Synthetic(s) => s.seed = seed,
                EnvSource::Pool(_) => return Err(BenchError::Spec("--env-seed needs a synthetic library".into())),
            }
        }
        if let Some(m) = self.top_m {
            spec.top_m = Some(m);
        }
        if let Some(v) = self.budget_ratio {
            spec.budget_ratio = v;
        }
        if let Some(c) = self.c {
            spec.c = c;
        }
        if let Some(p) = self.policy {
            spec.policy = p;
        }
        if let Some(rates) = self.rate {
            spec.rates = rates;
            // an explicit rate replaces a configured m
            if self.top_m.is_none() {
                spec.top_m = None;
            }
        }
        if let Some(r) = self.replicates {
            spec.replicates = r;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(out) = self.out {
            spec.out = out;
        }
        if let Some(t) = self.threads {
            spec.threads = Some(t);
        }
        if let Some(grid) = self.c_grid {
            spec.c_grid = grid;
        }
        if let Some(ratios) = self.budget_ratios {
            spec.budget_ratios = ratios;
        }
        if let Some(b) = self.bins {
            spec.n_bins = b;
        }
        if let Some(k) = self.conformations {
            spec.conformations = k;
        }
        if let Some(rt) = self.rt {
            spec.rt = rt;
        }
        if let Some(f) = self.sigma_floor {
            spec.sigma_floor = f;
        }
        if self.fixed_env {
            spec.fresh_env_per_replicate = false;
        }
        Ok(spec)
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run(o) => {
            let report = cmd_run(&o.into_spec()?)?;
            println!(
                "{} precision {:.4} ± {:.4}, loss {:.4} ± {:.4} over {} replicates",
                report.summary.policy,
                report.summary.precision.mean,
                report.summary.precision.std,
                report.summary.performance_loss.mean,
                report.summary.performance_loss.std,
                report.summary.replicates
            );
        }
        Command::SweepRate(o) => {
            for s in cmd_sweep_rate(&o.into_spec()?)? {
                println!(
                    "rate {} {}: precision {:.4} loss {:.4}",
                    s.rate, s.policy, s.precision.mean, s.performance_loss.mean
                );
            }
        }
        Command::MatchBudget(o) => {
            for s in cmd_match_budget(&o.into_spec()?)? {
                println!(
                    "rate {} {} T/N={}: precision {:.4} loss {:.4}",
                    s.rate, s.policy, s.budget_ratio, s.precision.mean, s.performance_loss.mean
                );
            }
        }
        Command::SweepC(o) => {
            let (_, optima) = cmd_sweep_c(&o.into_spec()?)?;
            for opt in optima {
                println!(
                    "rate {}: best c for precision {} ({:.4}), for loss {} ({:.4}); heuristic {:.4}",
                    opt.rate, opt.c_max_precision, opt.max_precision, opt.c_min_loss, opt.min_loss, opt.c_heuristic
                );
            }
        }
        Command::Profile(o) => {
            let report = cmd_profile(&o.into_spec()?)?;
            match (&report.fit, &report.fit_error) {
                (Some(fit), _) => println!(
                    "peak {:.2} / median {:.2}; fit {:?}: center {:.4} (boundary {:.4}), width {:.4}",
                    report.peak_bin_mean, report.median_bin_mean, fit.status, fit.center, report.boundary, fit.width
                ),
                (None, Some(err)) => println!("profile written; fit skipped: {err}"),
                (None, None) => unreachable!(),
            }
        }
        Command::GenPool(o) => {
            let spec = o.into_spec()?;
            if let EnvSource::Pool(_) = spec.environment {
                return Err(BenchError::Spec("gen-pool writes a pool; do not pass --pool".into()));
            }
            let path = cmd_gen_pool(&spec)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
