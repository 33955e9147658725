//! Acceptance gate. Runs every criterion at full size and prints one
//! PASS/FAIL line each; exits non-zero if any fails.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rucb_bench::{cmd_profile, cmd_run, cmd_sweep_c, cmd_sweep_rate, log_grid, EnvSource, Experiment, ExperimentSpec};
use rucb_core::{
    c_heuristic, generate_synthetic, load_pool, pool_true_log_kapp, run, run_rucb, run_rucb_naive, ArmState,
    Environment, Exploration, FinitePool, GaussianArm, Policy, RunConfig, SyntheticEnv, SyntheticEnvSpec, ThermoParams,
};

const N: usize = 10_000;
const REPLICATES: usize = 200;
const MASTER_SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn synthetic_spec(replicates: usize) -> ExperimentSpec {
    ExperimentSpec {
        environment: EnvSource::Synthetic(SyntheticEnvSpec::new(N, MASTER_SEED)),
        replicates,
        seed: MASTER_SEED,
        ..ExperimentSpec::default()
    }
}

fn gap_one_percent() -> Outcome {
    let exp = Experiment::new(synthetic_spec(REPLICATES)).unwrap();
    let r = exp.run_batch(Policy::Rucb, 100, 2 * N, Exploration::Auto).unwrap().report().unwrap();
    let u = exp.run_batch(Policy::Uniform, 100, 2 * N, Exploration::Auto).unwrap().report().unwrap();
    let pass = r.precision.mean >= 0.80
        && u.precision.mean <= 0.65
        && r.performance_loss.mean <= 0.02
        && u.performance_loss.mean >= 0.08;
    outcome(
        pass,
        format!(
            "rucb precision {:.4} (>= 0.80) loss {:.4} (<= 0.02); uniform precision {:.4} (<= 0.65) loss {:.4} (>= 0.08)",
            r.precision.mean, r.performance_loss.mean, u.precision.mean, u.performance_loss.mean
        ),
    )
}

fn gap_tenth_percent() -> Outcome {
    let exp = Experiment::new(synthetic_spec(REPLICATES)).unwrap();
    let r = exp.run_batch(Policy::Rucb, 10, 2 * N, Exploration::Auto).unwrap().report().unwrap();
    let u = exp.run_batch(Policy::Uniform, 10, 2 * N, Exploration::Auto).unwrap().report().unwrap();
    let gap = r.precision.mean - u.precision.mean;
    let pass = gap >= 0.25 && r.performance_loss.mean <= u.performance_loss.mean / 5.0;
    outcome(
        pass,
        format!(
            "precision gap {:.4} (>= 0.25); rucb loss {:.4} vs uniform loss / 5 = {:.4}",
            gap,
            r.performance_loss.mean,
            u.performance_loss.mean / 5.0
        ),
    )
}

fn budget_match() -> Outcome {
    let exp = Experiment::new(synthetic_spec(REPLICATES)).unwrap();
    let r = exp.run_batch(Policy::Rucb, 100, 2 * N, Exploration::Auto).unwrap().report().unwrap();
    let u = exp.run_batch(Policy::Uniform, 100, 30 * N, Exploration::Auto).unwrap().report().unwrap();
    let diff = (u.precision.mean - r.precision.mean).abs();
    outcome(
        diff <= 0.05,
        format!(
            "uniform T/N=30 precision {:.4} vs rucb T/N=2 {:.4}, |diff| {:.4} (<= 0.05)",
            u.precision.mean, r.precision.mean, diff
        ),
    )
}

fn profile(out: &Path) -> Outcome {
    let spec = ExperimentSpec {
        fresh_env_per_replicate: false,
        top_m: Some(100),
        out: out.join("profile"),
        ..synthetic_spec(100)
    };
    let report = cmd_profile(&spec).unwrap();
    let ratio = report.peak_bin_mean / report.median_bin_mean;
    let Some(fit) = report.fit else {
        return outcome(false, format!("fit unavailable: {:?}", report.fit_error));
    };
    let err = (fit.center - report.boundary).abs();
    outcome(
        ratio >= 10.0 && fit.converged() && err <= 0.05,
        format!(
            "peak/median {:.2} (>= 10); fit {:?}, center {:.4} vs boundary {:.4}, |err| {:.4} (<= 0.05)",
            ratio, fit.status, fit.center, report.boundary, err
        ),
    )
}

fn c_sweep(out: &Path) -> Outcome {
    let spec = ExperimentSpec {
        c_grid: log_grid(0.5, 8.0, 8),
        rates: vec![0.01],
        out: out.join("sweep_c"),
        ..synthetic_spec(REPLICATES)
    };
    let (_, optima) = cmd_sweep_c(&spec).unwrap();
    let best = optima[0].c_max_precision;
    let heuristic = c_heuristic(0.01).unwrap();
    let ratio = best / heuristic;
    outcome(
        (0.5..=2.0).contains(&ratio),
        format!("argmax-precision c {best:.4} vs heuristic {heuristic:.4}, ratio {ratio:.3} (within [0.5, 2])"),
    )
}

fn closed_form_oracle() -> Outcome {
    // Independent Monte-Carlo estimate of log10 E[exp(-dg/RT)].
    let rt = 0.5925f64;
    let draws = 10_000_000usize;
    let normal = Normal::new(-5.1f64, 0.44).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed);
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for _ in 0..draws {
        let k = (-normal.sample(&mut rng) / rt).exp();
        sum += k;
        sum_sq += k * k;
    }
    let mean = sum / draws as f64;
    let var = (sum_sq / draws as f64 - mean * mean) * draws as f64 / (draws - 1) as f64;
    let se_log10 = (var / draws as f64).sqrt() / (mean * std::f64::consts::LN_10);
    let mc = mean.log10();
    let closed = GaussianArm::new(-5.1, 0.44).unwrap().true_log_kapp(&ThermoParams::new(rt).unwrap());
    let z = (closed - mc).abs() / se_log10;
    outcome(
        z <= 3.0,
        format!("closed form {closed:.6} vs Monte-Carlo {mc:.6} (se {se_log10:.2e}), {z:.2} standard errors (<= 3)"),
    )
}

fn incremental_equivalence() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(77);
    let mut mismatches = 0;
    for instance in 0..50u64 {
        let n = rng.random_range(2..=200usize);
        let m = rng.random_range(1..n);
        let budget = rng.random_range(n..=2000usize.max(n));
        let c = rng.random_range(0.0..6.0);
        let env = generate_synthetic(&SyntheticEnvSpec::new(n, rng.random())).unwrap();
        let config = RunConfig::new(Policy::Rucb, n, m, budget).with_c(c).with_seed(instance).with_trace();
        let fast = run_rucb(&config, &env).unwrap();
        let slow = run_rucb_naive(&config, &env).unwrap();
        if fast != slow {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} of 50 random instances differ"))
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn conservation_and_determinism(out: &Path) -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let mut violations = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..=300usize);
        let m = rng.random_range(1..n);
        let budget = n + rng.random_range(0..=3 * n);
        let env = generate_synthetic(&SyntheticEnvSpec::new(n, rng.random())).unwrap();
        for policy in [Policy::Rucb, Policy::Ucb, Policy::Uniform] {
            let r = run(&RunConfig::new(policy, n, m, budget).with_seed(rng.random()), &env).unwrap();
            if r.total_pulls() != budget as u64 || r.pull_counts.contains(&0) {
                violations += 1;
            }
        }
    }

    let small = |threads: usize, name: &str| ExperimentSpec {
        environment: EnvSource::Synthetic(SyntheticEnvSpec::new(2000, 1)),
        rates: vec![0.005, 0.01],
        replicates: 24,
        seed: 99,
        threads: Some(threads),
        out: out.join(name),
        ..ExperimentSpec::default()
    };
    cmd_sweep_rate(&small(1, "single")).unwrap();
    cmd_sweep_rate(&small(4, "multi")).unwrap();
    let threads_equal = dir_bytes(&out.join("single")) == dir_bytes(&out.join("multi"));

    let once = |name: &str| ExperimentSpec { replicates: 1, ..small(2, name) };
    cmd_run(&once("run_a")).unwrap();
    cmd_run(&once("run_b")).unwrap();
    let reruns_equal = dir_bytes(&out.join("run_a")) == dir_bytes(&out.join("run_b"));

    outcome(
        violations == 0 && threads_equal && reruns_equal,
        format!(
            "{violations} conservation violations over 300 runs; 1 vs 4 threads identical: {threads_equal}; reruns identical: {reruns_equal}"
        ),
    )
}

fn finite_pool(out: &Path) -> Outcome {
    let thermo = ThermoParams::default();
    let env: SyntheticEnv = generate_synthetic(&SyntheticEnvSpec::new(60, 5)).unwrap();
    let path = out.join("pool.csv");
    FinitePool::from_synthetic(&env, 200, 6).unwrap().write_csv(&path).unwrap();
    let pool = load_pool(&path).unwrap();
    let mut exact = true;
    for j in 0..pool.n_arms() {
        let mut s = ArmState::new();
        for dg in pool.column(j) {
            s.record_pull(dg, &thermo).unwrap();
        }
        exact &= s.estimate_log_kapp().unwrap() == pool_true_log_kapp(&pool, j, &thermo).unwrap();
    }
    let shifted = pool.shifted(-1.25);
    let mut same = true;
    for seed in 0..20 {
        let config = RunConfig::new(Policy::Rucb, 60, 6, 240).with_seed(seed).with_trace();
        let a = run(&config, &pool).unwrap();
        let b = run(&config, &shifted).unwrap();
        let arms = |r: &rucb_core::RunResult| r.trace.as_ref().unwrap().iter().map(|s| s.arm).collect::<Vec<_>>();
        same &= a.predicted_top == b.predicted_top && arms(&a) == arms(&b);
    }
    outcome(exact && same, format!("exhaustive estimate exact: {exact}; shifted pool gives identical choices: {same}"))
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("1 rucb vs uniform at 1% rate", Box::new(gap_one_percent)),
        ("2 rucb vs uniform at 0.1% rate", Box::new(gap_tenth_percent)),
        ("3 uniform budget match", Box::new(budget_match)),
        ("4 pull profile and Cauchy fit", Box::new(|| profile(out))),
        ("5 c sweep optimum", Box::new(|| c_sweep(out))),
        ("6 closed-form oracle", Box::new(closed_form_oracle)),
        ("7 incremental vs naive traces", Box::new(incremental_equivalence)),
        ("8 conservation and determinism", Box::new(|| conservation_and_determinism(out))),
        ("9 finite-pool exactness and shift invariance", Box::new(|| finite_pool(out))),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let start = Instant::now();
        let result = check();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        if !result.pass {
            failed += 1;
        }
        println!("[{tag}] {name}: {} ({:.1}s)", result.detail, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
