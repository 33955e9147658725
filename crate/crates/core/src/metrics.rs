//! Scoring of predictions against ground truth, the pull-count profile,
//! and the exploration-parameter heuristic.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::RunResult;
use crate::ranking::top_m_indices;

fn as_set(indices: &[usize]) -> Result<HashSet<usize>> {
    let set: HashSet<usize> = indices.iter().copied().collect();
    if set.len() != indices.len() {
        return Err(Error::InvalidInput("index set contains duplicates".into()));
    }
    Ok(set)
}

fn check_sizes(predicted: &[usize], truth: &[usize]) -> Result<()> {
    if predicted.len() != truth.len() || truth.is_empty() {
        return Err(Error::InvalidInput(format!(
            "predicted and true sets must have the same non-zero size, got {} and {}",
            predicted.len(),
            truth.len()
        )));
    }
    Ok(())
}

/// Fraction of the predicted set that belongs to the true set.
pub fn precision(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    check_sizes(predicted, truth)?;
    let truth = as_set(truth)?;
    let hits = as_set(predicted)?.intersection(&truth).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Mean true value of the true set minus mean true value of the predicted
/// set.
///
/// Computed as a sum of pairwise gaps between the arms only in `truth` and
/// the arms only in `predicted`, both sorted descending, so the result is
/// exactly non-negative whenever `truth` is the true top set.
pub fn performance_loss(predicted: &[usize], true_values: &[f64], truth: &[usize]) -> Result<f64> {
    check_sizes(predicted, truth)?;
    if let Some(&bad) = predicted.iter().chain(truth).find(|&&j| j >= true_values.len()) {
        return Err(Error::InvalidIndex { index: bad, n_arms: true_values.len() });
    }
    let truth_set = as_set(truth)?;
    let predicted_set = as_set(predicted)?;
    let mut missed: Vec<f64> = truth.iter().filter(|j| !predicted_set.contains(j)).map(|&j| true_values[j]).collect();
    let mut extra: Vec<f64> = predicted.iter().filter(|j| !truth_set.contains(j)).map(|&j| true_values[j]).collect();
    missed.sort_unstable_by(|a, b| b.total_cmp(a));
    extra.sort_unstable_by(|a, b| b.total_cmp(a));
    let gap: f64 = missed.iter().zip(&extra).map(|(a, b)| a - b).sum();
    Ok(gap / truth.len() as f64)
}

/// Exploration parameter `exp(1.96 - 1.9 x^0.16)` for positive rate `x = m/N`.
pub fn c_heuristic(positive_rate: f64) -> Result<f64> {
    if !(positive_rate > 0.0 && positive_rate <= 1.0) {
        return Err(Error::InvalidInput(format!("positive rate must lie in (0, 1], got {positive_rate}")));
    }
    Ok((1.96 - 1.9 * positive_rate.powf(0.16)).exp())
}

/// Precision and loss of one run against the true top `m`.
pub fn score(result: &RunResult, true_values: &[f64]) -> Result<(f64, f64)> {
    let m = result.predicted_top.len();
    let truth = top_m_indices(true_values, m);
    Ok((precision(&result.predicted_top, &truth)?, performance_loss(&result.predicted_top, true_values, &truth)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std =
            if n > 1 { (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
        Self { mean, std }
    }

    pub fn std_error(&self, n: usize) -> f64 {
        self.std / (n as f64).sqrt()
    }
}

/// Precision and loss across replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub replicates: usize,
    pub precision: Summary,
    pub performance_loss: Summary,
    pub precisions: Vec<f64>,
    pub losses: Vec<f64>,
}

impl MetricsReport {
    pub fn from_replicates(precisions: Vec<f64>, losses: Vec<f64>) -> Result<Self> {
        if precisions.is_empty() || precisions.len() != losses.len() {
            return Err(Error::InvalidInput("need matching, non-empty replicate vectors".into()));
        }
        Ok(Self {
            replicates: precisions.len(),
            precision: Summary::of(&precisions),
            performance_loss: Summary::of(&losses),
            precisions,
            losses,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileBin {
    pub lo: f64,
    pub hi: f64,
    pub center: f64,
    pub arms: usize,
    pub mean_pulls: f64,
}

/// Mean pull count of each arm across replicates.
pub fn mean_pull_counts(results: &[RunResult]) -> Result<Vec<f64>> {
    let first =
        results.first().ok_or_else(|| Error::InvalidInput("pull profile needs at least one replicate".into()))?;
    let n = first.pull_counts.len();
    let mut totals = vec![0.0; n];
    for r in results {
        if r.pull_counts.len() != n {
            return Err(Error::InvalidInput("replicates disagree on the number of arms".into()));
        }
        for (acc, &c) in totals.iter_mut().zip(&r.pull_counts) {
            *acc += c as f64;
        }
    }
    let reps = results.len() as f64;
    Ok(totals.into_iter().map(|t| t / reps).collect())
}

/// Bins arms by true log10 K over `[min, max]` into `n_bins` equal-width
/// bins and reports the mean pull count of every non-empty bin.
pub fn pull_profile(results: &[RunResult], true_values: &[f64], n_bins: usize) -> Result<Vec<ProfileBin>> {
    if n_bins < 10 {
        return Err(Error::InvalidInput(format!("need at least 10 bins, got {n_bins}")));
    }
    let means = mean_pull_counts(results)?;
    if means.len() != true_values.len() {
        return Err(Error::InvalidInput("true values and pull counts differ in length".into()));
    }
    let lo = true_values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = true_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / n_bins as f64;
    let mut sums = vec![0.0; n_bins];
    let mut counts = vec![0usize; n_bins];
    for (&v, &n) in true_values.iter().zip(&means) {
        let k = if width > 0.0 { (((v - lo) / width) as usize).min(n_bins - 1) } else { 0 };
        sums[k] += n;
        counts[k] += 1;
    }
    Ok((0..n_bins)
        .filter(|&k| counts[k] > 0)
        .map(|k| {
            let (bin_lo, bin_hi) =
                if width > 0.0 { (lo + k as f64 * width, lo + (k + 1) as f64 * width) } else { (lo, hi) };
            ProfileBin {
                lo: bin_lo,
                hi: bin_hi,
                center: 0.5 * (bin_lo + bin_hi),
                arms: counts[k],
                mean_pulls: sums[k] / counts[k] as f64,
            }
        })
        .collect())
}
