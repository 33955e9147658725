//! Confidence index functions.
//!
//! The reversible rule drops the `ln t` factor of the classic index, so an
//! arm's upper and lower indices only change when that arm is pulled.

use crate::error::{Error, Result};

fn bonus(sigma: f64, n: u64, c: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("index needs at least one pull".into()));
    }
    Ok(c * sigma * (1.0 / n as f64).sqrt())
}

/// `estimate + c * sigma * sqrt(1/n)`
pub fn upper_index(estimate: f64, sigma: f64, n: u64, c: f64) -> Result<f64> {
    Ok(estimate + bonus(sigma, n, c)?)
}

/// `estimate - c * sigma * sqrt(1/n)`
pub fn lower_index(estimate: f64, sigma: f64, n: u64, c: f64) -> Result<f64> {
    Ok(estimate - bonus(sigma, n, c)?)
}

/// Classic UCB index `estimate + c * sigma * sqrt(ln t / n)`.
pub fn classic_ucb_index(estimate: f64, sigma: f64, n: u64, t: u64, c: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("index needs at least one pull".into()));
    }
    if t < 2 {
        return Err(Error::InvalidInput(format!("round must be at least 2, got {t}")));
    }
    Ok(estimate + c * sigma * ((t as f64).ln() / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_c_returns_estimate() {
        assert_eq!(upper_index(4.2, 0.35, 3, 0.0).unwrap(), 4.2);
        assert_eq!(lower_index(4.2, 0.35, 3, 0.0).unwrap(), 4.2);
        assert_eq!(classic_ucb_index(4.2, 0.35, 3, 10, 0.0).unwrap(), 4.2);
    }

    #[test]
    fn direct_substitution() {
        assert!((upper_index(4.0, 0.35, 4, 2.0).unwrap() - 4.35).abs() < 1e-12);
        assert!((lower_index(4.0, 0.35, 4, 2.0).unwrap() - 3.65).abs() < 1e-12);
    }

    #[test]
    fn upper_approaches_estimate() {
        let mut prev = f64::INFINITY;
        for n in [1u64, 10, 100, 10_000, 1_000_000] {
            let u = upper_index(3.0, 0.4, n, 2.5).unwrap();
            assert!(u < prev && u > 3.0);
            prev = u;
        }
        assert!(prev - 3.0 < 1e-2);
    }

    #[test]
    fn band_width_identity() {
        for (est, sigma, n, c) in [(1.0, 0.2, 1u64, 0.5), (-3.0, 0.9, 17, 3.1), (5.5, 0.01, 400, 10.0)] {
            let width = upper_index(est, sigma, n, c).unwrap() - lower_index(est, sigma, n, c).unwrap();
            assert!((width - 2.0 * c * sigma / (n as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn classic_index_values() {
        // integer rounds only, so ln t = 2 is approached via t = 7 (ln 7 ~ 1.95)
        let idx = classic_ucb_index(0.0, 1.0, 1, 7, 1.0).unwrap();
        assert!((idx - 7f64.ln().sqrt()).abs() < 1e-12);
        let idx = classic_ucb_index(1.0, 0.5, 4, 55, 2.0).unwrap();
        assert!((idx - (1.0 + (55f64.ln() / 4.0).sqrt())).abs() < 1e-12);
        // bonus equals c * sigma when n matches ln t: t = e^3 rounds to 20, ln 20 ~ 3
        let idx = classic_ucb_index(2.0, 0.4, 3, 20, 1.5).unwrap();
        assert!((idx - (2.0 + 1.5 * 0.4)).abs() < 2e-3);
    }

    #[test]
    fn rejects_zero_pulls_and_early_rounds() {
        assert!(upper_index(0.0, 1.0, 0, 1.0).is_err());
        assert!(lower_index(0.0, 1.0, 0, 1.0).is_err());
        assert!(classic_ucb_index(0.0, 1.0, 0, 5, 1.0).is_err());
        assert!(classic_ucb_index(0.0, 1.0, 1, 1, 1.0).is_err());
    }
}
