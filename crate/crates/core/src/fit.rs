//! Cauchy-Lorentz fit of a pull-count profile, `n(y) = A / ((y - y0)^2 + g^2)`,
//! by damped Gauss-Newton with a central-difference Jacobian.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 200;
pub const MAX_HALVINGS: usize = 30;
pub const REL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    /// Iteration limit hit; parameters are the best seen.
    NotConverged,
    /// Profile carries no peak to fit.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyFit {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub residual: f64,
    pub iterations: usize,
    pub status: FitStatus,
}

impl CauchyFit {
    pub fn converged(&self) -> bool {
        self.status == FitStatus::Converged
    }

    pub fn eval(&self, y: f64) -> f64 {
        lorentzian(&Vector3::new(self.amplitude, self.center, self.width), y)
    }
}

fn lorentzian(p: &Vector3<f64>, y: f64) -> f64 {
    let d = y - p[1];
    p[0] / (d * d + p[2] * p[2])
}

fn sse(p: &Vector3<f64>, ys: &[f64], ns: &[f64]) -> f64 {
    ys.iter().zip(ns).map(|(&y, &n)| (n - lorentzian(p, y)).powi(2)).sum()
}

/// Half width at half maximum around `peak`, by linear interpolation.
fn hwhm(ys: &[f64], ns: &[f64], peak: usize) -> Option<f64> {
    let half = ns[peak] / 2.0;
    let crossing = |range: &mut dyn Iterator<Item = usize>| {
        let mut prev = peak;
        for k in range {
            if ns[k] < half {
                let t = (ns[prev] - half) / (ns[prev] - ns[k]);
                return Some(ys[prev] + t * (ys[k] - ys[prev]));
            }
            prev = k;
        }
        None
    };
    let left = crossing(&mut (0..peak).rev()).map(|y| ys[peak] - y);
    let right = crossing(&mut (peak + 1..ys.len())).map(|y| y - ys[peak]);
    match (left, right) {
        (Some(l), Some(r)) => Some(0.5 * (l + r)),
        (Some(w), None) | (None, Some(w)) => Some(w),
        (None, None) => None,
    }
}

/// Fits `(amplitude, center, width)` to `(ys, ns)`. Errors on too few points or
/// non-positive counts; fit failures are reported through [`FitStatus`].
pub fn fit_cauchy(ys: &[f64], ns: &[f64]) -> Result<CauchyFit> {
    if ys.len() != ns.len() {
        return Err(Error::InvalidInput("profile coordinates differ in length".into()));
    }
    if ys.len() < 5 {
        return Err(Error::InvalidInput(format!("need at least 5 profile points, got {}", ys.len())));
    }
    if ys.iter().chain(ns).any(|v| !v.is_finite()) || ns.iter().any(|&n| n <= 0.0) {
        return Err(Error::InvalidInput("profile values must be finite and counts positive".into()));
    }
    // ys need not be sorted by the caller
    let mut order: Vec<usize> = (0..ys.len()).collect();
    order.sort_by(|&a, &b| ys[a].total_cmp(&ys[b]));
    let ys: Vec<f64> = order.iter().map(|&k| ys[k]).collect();
    let ns: Vec<f64> = order.iter().map(|&k| ns[k]).collect();

    let span = ys[ys.len() - 1] - ys[0];
    let (peak, &n_max) =
        ns.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0))).expect("non-empty");
    let n_min = ns.iter().copied().fold(f64::INFINITY, f64::min);
    let min_spacing = ys.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
    let gamma0 =
        hwhm(&ys, &ns, peak).unwrap_or(span / 4.0).max(if min_spacing.is_finite() { min_spacing / 2.0 } else { 0.0 });
    let mut params = Vector3::new(n_max * gamma0 * gamma0, ys[peak], gamma0);
    let mut residual = sse(&params, &ys, &ns);

    if n_max - n_min <= 1e-9 * n_max || span <= 0.0 || gamma0 <= 0.0 {
        return Ok(CauchyFit {
            amplitude: params[0],
            center: params[1],
            width: params[2].abs(),
            residual,
            iterations: 0,
            status: FitStatus::Degenerate,
        });
    }

    let mut status = FitStatus::NotConverged;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let scale = [params[0].abs(), params[2].abs().max(params[1].abs()), params[2].abs()];
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        let steps: Vec<f64> = scale.iter().map(|s| 1e-6 * s.max(f64::MIN_POSITIVE)).collect();
        for (&y, &n) in ys.iter().zip(&ns) {
            let r = n - lorentzian(&params, y);
            let mut row = Vector3::zeros();
            for k in 0..3 {
                let mut hi = params;
                let mut lo = params;
                hi[k] += steps[k];
                lo[k] -= steps[k];
                row[k] = (lorentzian(&hi, y) - lorentzian(&lo, y)) / (2.0 * steps[k]);
            }
            jtj += row * row.transpose();
            jtr += row * r;
        }
        let Some(delta) = jtj.lu().solve(&jtr) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = params + delta * lambda;
            let trial_sse = sse(&trial, &ys, &ns);
            if trial_sse.is_finite() && trial_sse < residual {
                accepted = Some((trial, trial_sse));
                break;
            }
            lambda *= 0.5;
        }
        let Some((next, next_sse)) = accepted else {
            // no descent direction left at working precision
            status = FitStatus::Converged;
            break;
        };
        let small = (0..3).all(|k| (next[k] - params[k]).abs() <= REL_TOLERANCE * scale[k]);
        params = next;
        residual = next_sse;
        if small {
            status = FitStatus::Converged;
            break;
        }
    }
    if !(params[0] > 0.0 && params[2] != 0.0 && params.iter().all(|v| v.is_finite())) {
        status = FitStatus::NotConverged;
    }
    Ok(CauchyFit { amplitude: params[0], center: params[1], width: params[2].abs(), residual, iterations, status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_curve(a: f64, y0: f64, g: f64, lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let ys: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
        let ns = ys.iter().map(|y| a / ((y - y0).powi(2) + g * g)).collect();
        (ys, ns)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn recovers_exact_curve() {
        let (ys, ns) = sample_curve(100.0, 5.0, 0.1, 4.0, 6.0, 50);
        let fit = fit_cauchy(&ys, &ns).unwrap();
        assert!(fit.converged(), "{fit:?}");
        assert!(rel(fit.amplitude, 100.0) < 1e-6, "{fit:?}");
        assert!(rel(fit.center, 5.0) < 1e-6, "{fit:?}");
        assert!(rel(fit.width, 0.1) < 1e-6, "{fit:?}");
    }

    #[test]
    fn amplitude_scales_linearly() {
        let (ys, clean) = sample_curve(40.0, 3.9, 0.2, 3.0, 5.0, 60);
        // deterministic wobble so the optimum is not exact
        let ns: Vec<f64> =
            clean.iter().enumerate().map(|(k, n)| n * (1.0 + 0.05 * (k as f64 * 1.7).sin()) + 1.0).collect();
        let base = fit_cauchy(&ys, &ns).unwrap();
        let scaled_ns: Vec<f64> = ns.iter().map(|n| n * 7.0).collect();
        let scaled = fit_cauchy(&ys, &scaled_ns).unwrap();
        assert!(base.converged() && scaled.converged());
        assert!(rel(scaled.amplitude, 7.0 * base.amplitude) < 1e-7);
        assert!((scaled.center - base.center).abs() < 1e-8);
        assert!((scaled.width - base.width).abs() < 1e-8);
    }

    #[test]
    fn flat_profile_is_degenerate() {
        let ys: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let fit = fit_cauchy(&ys, &[2.0; 20]).unwrap();
        assert_eq!(fit.status, FitStatus::Degenerate);
    }

    #[test]
    fn preconditions() {
        assert!(fit_cauchy(&[1.0, 2.0, 3.0, 4.0], &[1.0; 4]).is_err());
        assert!(fit_cauchy(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 2.0, 0.0, 1.0, 1.0]).is_err());
        assert!(fit_cauchy(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn unsorted_input() {
        let (mut ys, mut ns) = sample_curve(10.0, 1.0, 0.3, 0.0, 2.0, 21);
        ys.reverse();
        ns.reverse();
        ys.swap(3, 11);
        ns.swap(3, 11);
        let fit = fit_cauchy(&ys, &ns).unwrap();
        assert!(fit.converged());
        assert!(rel(fit.center, 1.0) < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn recovers_random_parameters(
            log_a in 0.0f64..4.0,
            y0 in 2.0f64..6.0,
            log_g in -2.0f64..0.0,
            shift in -0.5f64..0.5,
        ) {
            let a = 10f64.powf(log_a);
            let g = 10f64.powf(log_g);
            let lo = y0 - 6.0 * g + shift * g;
            let hi = y0 + 6.0 * g + shift * g;
            let (ys, ns) = sample_curve(a, y0, g, lo, hi, 50);
            let fit = fit_cauchy(&ys, &ns).unwrap();
            prop_assert!(fit.converged(), "{:?}", fit);
            prop_assert!(rel(fit.amplitude, a) < 1e-6, "{:?}", fit);
            prop_assert!(rel(fit.center, y0) < 1e-6, "{:?}", fit);
            prop_assert!(rel(fit.width, g) < 1e-6, "{:?}", fit);
        }
    }
}
