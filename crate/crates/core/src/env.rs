//! Sources of free energy samples.
//!
//! Two environments are provided: a synthetic generative model where each
//! arm's conformational free energies are Gaussian, and a finite pool backed
//! by a conformations x ligands matrix read from CSV.

use std::f64::consts::LN_10;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermo::{ka_from_dg, ThermoParams};

/// RNG used for every simulated stream.
pub type SimRng = ChaCha8Rng;

/// Per-arm spread draws at or below this value are rejected and redrawn.
pub const SIGMA_FLOOR: f64 = 0.01;

/// Common interface over sample sources.
pub trait Environment {
    fn n_arms(&self) -> usize;

    /// Draws one free energy sample (kcal/mol) for `arm`.
    fn sample_dg(&self, arm: usize, rng: &mut SimRng) -> Result<f64>;

    /// Exact log10 apparent association constant of `arm`.
    fn true_log_kapp(&self, arm: usize, thermo: &ThermoParams) -> Result<f64>;

    fn true_values(&self, thermo: &ThermoParams) -> Result<Vec<f64>> {
        (0..self.n_arms()).map(|j| self.true_log_kapp(j, thermo)).collect()
    }
}

fn check_index(index: usize, n_arms: usize) -> Result<()> {
    if index < n_arms {
        Ok(())
    } else {
        Err(Error::InvalidIndex { index, n_arms })
    }
}

/// Gaussian free energy distribution of one ligand over the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianArm {
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianArm {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidInput(format!(
                "gaussian arm needs finite mu and positive sigma, got mu={mu} sigma={sigma}"
            )));
        }
        Ok(Self { mu, sigma })
    }

    /// Closed-form log10 of `E[exp(-dg / RT)]` for `dg ~ N(mu, sigma^2)`.
    pub fn true_log_kapp(&self, thermo: &ThermoParams) -> f64 {
        let rt = thermo.rt();
        let ln_k = -(self.mu - self.sigma * self.sigma / (2.0 * rt)) / rt;
        ln_k / LN_10
    }

    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mu + self.sigma * z
    }
}

/// Parameters of the synthetic library generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticEnvSpec {
    pub n_arms: usize,
    pub mu_prior_mean: f64,
    pub mu_prior_std: f64,
    pub sigma_prior_mean: f64,
    pub sigma_prior_std: f64,
    pub seed: u64,
}

impl Default for SyntheticEnvSpec {
    fn default() -> Self {
        Self {
            n_arms: 10_000,
            mu_prior_mean: -5.1,
            mu_prior_std: 0.65,
            sigma_prior_mean: 0.44,
            sigma_prior_std: 0.08,
            seed: 0,
        }
    }
}

impl SyntheticEnvSpec {
    pub fn new(n_arms: usize, seed: u64) -> Self {
        Self { n_arms, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_arms == 0 {
            return Err(Error::InvalidSpec("n_arms must be at least 1".into()));
        }
        let finite = [self.mu_prior_mean, self.sigma_prior_mean].iter().all(|v| v.is_finite());
        let positive = [self.mu_prior_std, self.sigma_prior_std].iter().all(|v| v.is_finite() && *v > 0.0);
        if !finite || !positive {
            return Err(Error::InvalidSpec("prior means must be finite and prior stds positive".into()));
        }
        if self.sigma_prior_mean + 10.0 * self.sigma_prior_std <= SIGMA_FLOOR {
            return Err(Error::InvalidSpec("sigma prior has no mass above the floor".into()));
        }
        Ok(())
    }
}

/// Library of Gaussian arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticEnv {
    arms: Vec<GaussianArm>,
}

impl SyntheticEnv {
    pub fn from_arms(arms: Vec<GaussianArm>) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::InvalidSpec("environment needs at least one arm".into()));
        }
        Ok(Self { arms })
    }

    pub fn arms(&self) -> &[GaussianArm] {
        &self.arms
    }
}

/// Draws a synthetic library: `mu_j ~ N(mu_prior)`, `sigma_j ~ N(sigma_prior)`
/// with spread draws at or below [`SIGMA_FLOOR`] redrawn.
pub fn generate_synthetic(spec: &SyntheticEnvSpec) -> Result<SyntheticEnv> {
    spec.validate()?;
    let mut rng = SimRng::seed_from_u64(spec.seed);
    let mu_prior = Normal::new(spec.mu_prior_mean, spec.mu_prior_std).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let sigma_prior =
        Normal::new(spec.sigma_prior_mean, spec.sigma_prior_std).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let arms = (0..spec.n_arms)
        .map(|_| {
            let mu = mu_prior.sample(&mut rng);
            let sigma = loop {
                let s = sigma_prior.sample(&mut rng);
                if s > SIGMA_FLOOR {
                    break s;
                }
            };
            GaussianArm { mu, sigma }
        })
        .collect();
    Ok(SyntheticEnv { arms })
}

impl Environment for SyntheticEnv {
    fn n_arms(&self) -> usize {
        self.arms.len()
    }

    fn sample_dg(&self, arm: usize, rng: &mut SimRng) -> Result<f64> {
        check_index(arm, self.arms.len())?;
        Ok(self.arms[arm].sample(rng))
    }

    fn true_log_kapp(&self, arm: usize, thermo: &ThermoParams) -> Result<f64> {
        check_index(arm, self.arms.len())?;
        Ok(self.arms[arm].true_log_kapp(thermo))
    }
}

/// Complete docking matrix: one row per conformation, one column per ligand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitePool {
    ligand_ids: Vec<String>,
    // row-major, conformations x ligands
    dg: Vec<f64>,
    n_conformations: usize,
}

impl FinitePool {
    pub fn new(ligand_ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if ligand_ids.is_empty() {
            return Err(Error::InvalidSpec("pool needs at least one ligand".into()));
        }
        if rows.is_empty() {
            return Err(Error::InvalidSpec("pool needs at least one conformation".into()));
        }
        let width = ligand_ids.len();
        let mut dg = Vec::with_capacity(width * rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Parse {
                    row: i + 2,
                    column: row.len().min(width) + 1,
                    message: format!("expected {width} values, found {}", row.len()),
                });
            }
            if let Some(col) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Parse { row: i + 2, column: col + 1, message: "non-finite free energy".into() });
            }
            dg.extend_from_slice(row);
        }
        Ok(Self { ligand_ids, dg, n_conformations: rows.len() })
    }

    pub fn ligand_ids(&self) -> &[String] {
        &self.ligand_ids
    }

    pub fn n_conformations(&self) -> usize {
        self.n_conformations
    }

    pub fn dg(&self, conformation: usize, ligand: usize) -> f64 {
        self.dg[conformation * self.ligand_ids.len() + ligand]
    }

    /// Free energies of one ligand across all conformations, in row order.
    pub fn column(&self, ligand: usize) -> impl Iterator<Item = f64> + '_ {
        self.dg.iter().skip(ligand).step_by(self.ligand_ids.len()).copied()
    }

    /// Same pool with `offset` added to every free energy.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            ligand_ids: self.ligand_ids.clone(),
            dg: self.dg.iter().map(|v| v + offset).collect(),
            n_conformations: self.n_conformations,
        }
    }

    /// Samples `n_conformations` rows from each arm of a synthetic library.
    pub fn from_synthetic(env: &SyntheticEnv, n_conformations: usize, seed: u64) -> Result<Self> {
        let mut rng = SimRng::seed_from_u64(seed);
        let ids = (0..env.n_arms()).map(|j| format!("L{j}")).collect();
        let rows = (0..n_conformations).map(|_| env.arms().iter().map(|a| a.sample(&mut rng)).collect()).collect();
        Self::new(ids, rows)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        if let Some(bad) = self.ligand_ids.iter().find(|id| id.contains([',', '\n', '\r', '"'])) {
            return Err(Error::InvalidInput(format!("ligand id {bad:?} cannot be written to CSV")));
        }
        writeln!(out, "{}", self.ligand_ids.join(","))?;
        for row in self.dg.chunks(self.ligand_ids.len()) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Reads a pool CSV: a header of ligand ids followed by one row of free
/// energies per conformation.
pub fn load_pool(path: impl AsRef<Path>) -> Result<FinitePool> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    parse_pool(text.as_bytes())
}

pub fn parse_pool<R: Read>(input: R) -> Result<FinitePool> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(csv_error)?,
        None => return Err(Error::Parse { row: 1, column: 1, message: "empty file".into() }),
    };
    let ids: Vec<String> = header.iter().map(str::to_owned).collect();
    if let Some(col) = ids.iter().position(String::is_empty) {
        return Err(Error::Parse { row: 1, column: col + 1, message: "empty ligand id".into() });
    }
    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let row_no = i + 2;
        let rec = rec.map_err(csv_error)?;
        if rec.len() != ids.len() {
            return Err(Error::Parse {
                row: row_no,
                column: rec.len().min(ids.len()) + 1,
                message: format!("expected {} values, found {}", ids.len(), rec.len()),
            });
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    row: row_no,
                    column: c + 1,
                    message: format!("not a finite number: {cell:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse { row: 2, column: 1, message: "no conformation rows".into() });
    }
    FinitePool::new(ids, rows)
}

fn csv_error(err: csv::Error) -> Error {
    let row = err.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse { row, column: 0, message: err.to_string() }
}

/// log10 of the mean association constant over every conformation of
/// `ligand`.
pub fn pool_true_log_kapp(pool: &FinitePool, ligand: usize, thermo: &ThermoParams) -> Result<f64> {
    check_index(ligand, pool.ligand_ids.len())?;
    let mut sum = 0.0;
    for dg in pool.column(ligand) {
        sum += ka_from_dg(dg, thermo)?;
    }
    Ok((sum / pool.n_conformations as f64).log10())
}

impl Environment for FinitePool {
    fn n_arms(&self) -> usize {
        self.ligand_ids.len()
    }

    fn sample_dg(&self, arm: usize, rng: &mut SimRng) -> Result<f64> {
        check_index(arm, self.ligand_ids.len())?;
        let row = rng.random_range(0..self.n_conformations);
        Ok(self.dg(row, arm))
    }

    fn true_log_kapp(&self, arm: usize, thermo: &ThermoParams) -> Result<f64> {
        pool_true_log_kapp(self, arm, thermo)
    }
}

/// Either environment behind one type, for callers choosing at runtime.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyEnv {
    Synthetic(SyntheticEnv),
    Pool(FinitePool),
}

impl Environment for AnyEnv {
    fn n_arms(&self) -> usize {
        match self {
            AnyEnv::Synthetic(e) => e.n_arms(),
            AnyEnv::Pool(e) => e.n_arms(),
        }
    }

    fn sample_dg(&self, arm: usize, rng: &mut SimRng) -> Result<f64> {
        match self {
            AnyEnv::Synthetic(e) => e.sample_dg(arm, rng),
            AnyEnv::Pool(e) => e.sample_dg(arm, rng),
        }
    }

    fn true_log_kapp(&self, arm: usize, thermo: &ThermoParams) -> Result<f64> {
        match self {
            AnyEnv::Synthetic(e) => e.true_log_kapp(arm, thermo),
            AnyEnv::Pool(e) => e.true_log_kapp(arm, thermo),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::ArmState;

    fn thermo() -> ThermoParams {
        ThermoParams::default()
    }

    fn mean_std(values: &[f64]) -> (f64, f64) {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var.sqrt())
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticEnvSpec::new(500, 42);
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
        let other = SyntheticEnvSpec::new(500, 43);
        assert_ne!(generate_synthetic(&spec).unwrap(), generate_synthetic(&other).unwrap());
    }

    #[test]
    fn zero_arms_rejected() {
        let spec = SyntheticEnvSpec::new(0, 1);
        assert!(matches!(generate_synthetic(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn priors_match_at_large_n() {
        let env = generate_synthetic(&SyntheticEnvSpec::new(100_000, 7)).unwrap();
        let mus: Vec<f64> = env.arms().iter().map(|a| a.mu).collect();
        let sigmas: Vec<f64> = env.arms().iter().map(|a| a.sigma).collect();
        let (mu_mean, mu_std) = mean_std(&mus);
        let (sigma_mean, _) = mean_std(&sigmas);
        assert!((mu_mean + 5.1).abs() < 0.01, "{mu_mean}");
        assert!((mu_std - 0.65).abs() < 0.01, "{mu_std}");
        assert!((sigma_mean - 0.44).abs() < 0.002, "{sigma_mean}");
        assert!(sigmas.iter().all(|s| *s > SIGMA_FLOOR));
    }

    #[test]
    fn closed_form_reference_value() {
        let arm = GaussianArm::new(-5.1, 0.44).unwrap();
        // mpmath, 30 digits
        assert!((arm.true_log_kapp(&thermo()) - 3.857_983_034_170_125).abs() < 1e-12);
    }

    #[test]
    fn closed_form_degenerate_gaussian() {
        let t = thermo();
        let arm = GaussianArm::new(-t.rt() * LN_10, 1e-12).unwrap();
        assert!((arm.true_log_kapp(&t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_increases_with_spread() {
        let t = thermo();
        let narrow = GaussianArm::new(-5.0, 0.3).unwrap().true_log_kapp(&t);
        let wide = GaussianArm::new(-5.0, 0.5).unwrap().true_log_kapp(&t);
        assert!(wide > narrow);
    }

    #[test]
    fn gaussian_sample_mean() {
        let env = SyntheticEnv::from_arms(vec![GaussianArm::new(-5.3, 0.4).unwrap()]).unwrap();
        let mut rng = SimRng::seed_from_u64(11);
        let n = 1_000_000;
        let sum: f64 = (0..n).map(|_| env.sample_dg(0, &mut rng).unwrap()).sum();
        let se = 0.4 / (n as f64).sqrt();
        assert!((sum / n as f64 + 5.3).abs() < 4.0 * se);
    }

    #[test]
    fn empirical_log_mean_k_converges_to_closed_form() {
        let t = thermo();
        let arm = GaussianArm::new(-5.1, 0.44).unwrap();
        let env = SyntheticEnv::from_arms(vec![arm]).unwrap();
        let mut rng = SimRng::seed_from_u64(3);
        let mut state = ArmState::new();
        for _ in 0..1_000_000 {
            state.record_pull(env.sample_dg(0, &mut rng).unwrap(), &t).unwrap();
        }
        let gap = (state.estimate_log_kapp().unwrap() - arm.true_log_kapp(&t)).abs();
        assert!(gap < 0.01, "{gap}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let env = generate_synthetic(&SyntheticEnvSpec::new(10, 1)).unwrap();
        let draw = |seed| {
            let mut rng = SimRng::seed_from_u64(seed);
            (0..50).map(|i| env.sample_dg(i % 10, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
    }

    #[test]
    fn out_of_range_index() {
        let env = generate_synthetic(&SyntheticEnvSpec::new(3, 1)).unwrap();
        let mut rng = SimRng::seed_from_u64(0);
        assert_eq!(env.sample_dg(3, &mut rng), Err(Error::InvalidIndex { index: 3, n_arms: 3 }));
    }

    #[test]
    fn single_conformation_pool_is_constant() {
        let pool = FinitePool::new(vec!["a".into(), "b".into()], vec![vec![-4.5, -6.25]]).unwrap();
        let mut rng = SimRng::seed_from_u64(9);
        for _ in 0..20 {
            assert_eq!(pool.sample_dg(1, &mut rng).unwrap(), -6.25);
        }
    }

    #[test]
    fn pool_truth_values() {
        let t = thermo();
        let pool = parse_pool("x,y\n0,-5\n0,-5\n0,-5\n".as_bytes()).unwrap();
        assert_eq!(pool_true_log_kapp(&pool, 0, &t).unwrap(), 0.0);
        let y = pool_true_log_kapp(&pool, 1, &t).unwrap();
        assert!((y - 3.664_932_336_736_303).abs() < 1e-12, "{y}");
    }

    #[test]
    fn exhaustive_pulls_match_pool_truth_exactly() {
        let t = thermo();
        let env = generate_synthetic(&SyntheticEnvSpec::new(5, 2)).unwrap();
        let pool = FinitePool::from_synthetic(&env, 37, 8).unwrap();
        for j in 0..5 {
            let mut s = ArmState::new();
            for dg in pool.column(j) {
                s.record_pull(dg, &t).unwrap();
            }
            assert_eq!(s.estimate_log_kapp().unwrap(), pool_true_log_kapp(&pool, j, &t).unwrap());
        }
    }

    #[test]
    fn shift_preserves_ranking() {
        let t = thermo();
        let env = generate_synthetic(&SyntheticEnvSpec::new(20, 4)).unwrap();
        let pool = FinitePool::from_synthetic(&env, 15, 5).unwrap();
        let shifted = pool.shifted(-0.75);
        let a = pool.true_values(&t).unwrap();
        let b = shifted.true_values(&t).unwrap();
        let expected = 0.75 / (t.rt() * LN_10);
        for (x, y) in a.iter().zip(&b) {
            assert!((y - x - expected).abs() < 1e-9);
        }
        let order = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&i, &j| v[j].total_cmp(&v[i]));
            idx
        };
        assert_eq!(order(&a), order(&b));
    }

    #[test]
    fn csv_round_trip() {
        let env = generate_synthetic(&SyntheticEnvSpec::new(6, 3)).unwrap();
        let pool = FinitePool::from_synthetic(&env, 9, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pool.csv");
        pool.write_csv(&path).unwrap();
        let back = load_pool(&path).unwrap();
        assert_eq!(back, pool);
        let t = thermo();
        assert_eq!(back.true_values(&t).unwrap(), pool.true_values(&t).unwrap());
    }

    #[test]
    fn csv_accepts_scientific_notation() {
        let pool = parse_pool("a,b\n-5.1e0,-4.2E+00\n".as_bytes()).unwrap();
        assert_eq!(pool.dg(0, 0), -5.1);
        assert_eq!(pool.dg(0, 1), -4.2);
    }

    #[test]
    fn csv_errors_name_location() {
        let ragged = parse_pool("a,b,c\n1,2,3\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(ragged, Error::Parse { row: 3, column: 3, .. }), "{ragged:?}");
        let bad = parse_pool("a,b\n1,2\n1,oops\n".as_bytes()).unwrap_err();
        assert!(matches!(bad, Error::Parse { row: 3, column: 2, .. }), "{bad:?}");
        let empty = parse_pool("".as_bytes()).unwrap_err();
        assert!(matches!(empty, Error::Parse { row: 1, .. }), "{empty:?}");
        let header_only = parse_pool("a,b\n".as_bytes()).unwrap_err();
        assert!(matches!(header_only, Error::Parse { row: 2, .. }), "{header_only:?}");
        let missing = parse_pool("a,b\n1,\n".as_bytes()).unwrap_err();
        assert!(matches!(missing, Error::Parse { row: 2, column: 2, .. }), "{missing:?}");
    }
}
