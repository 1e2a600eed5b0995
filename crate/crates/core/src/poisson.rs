//! Truncated Poisson probabilities with a certified right-tail bound.
//!
//! Weights are computed from the mode outwards with the ratio
//! `p(n+1)/p(n) = λt/(n+1)` and then normalised, which avoids both
//! underflow of `e^{-λt}` and overflow of `(λt)^n / n!`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonWeights {
    pub lambda_t: f64,
    pub n_max: usize,
    /// `w_0 ..= w_{n_max}`.
    pub weights: Vec<f64>,
    /// Upper bound on `Σ_{n > n_max} p(n)`.
    pub tail_bound: f64,
    /// Relative error bound of every stored weight.
    pub rel_error: f64,
    // suffix[k] = Σ_{j ≥ k, j ≤ n_max} w_j, suffix[n_max + 1] = 0
    suffix: Vec<f64>,
}

impl PoissonWeights {
    /// Lower bound on `Pr[N ≥ k]`.
    pub fn tail_lo(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let s = self.suffix.get(k).copied().unwrap_or(0.0);
        (s * (1.0 - self.rel_error)).max(0.0)
    }

    /// Upper bound on `Pr[N ≥ k]`.
    pub fn tail_hi(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let s = self.suffix.get(k).copied().unwrap_or(0.0);
        (s * (1.0 + self.rel_error) + self.tail_bound).min(1.0)
    }

    /// Best estimate of `Pr[N ≥ k]`.
    pub fn tail_mid(&self, k: usize) -> f64 {
        0.5 * (self.tail_lo(k) + self.tail_hi(k))
    }
}

/// Poisson weights for mean `lambda_t`, truncated so that the right tail is
/// below `epsilon`.
pub fn poisson_weights(lambda_t: f64, epsilon: f64) -> Result<PoissonWeights> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(lambda_t >= 0.0) || !lambda_t.is_finite() {
        return Err(Error::InvalidArgument(format!("λt must be finite and non-negative, got {lambda_t}")));
    }
    if lambda_t == 0.0 {
        return Ok(PoissonWeights {
            lambda_t,
            n_max: 0,
            weights: vec![1.0],
            tail_bound: 0.0,
            rel_error: 0.0,
            suffix: vec![1.0, 0.0],
        });
    }

    let mode = lambda_t.floor() as usize;
    // right end: far enough that the neglected mass is negligible relative
    // to the mode even after normalisation
    let mut raw = vec![0.0_f64; mode + 1];
    raw[mode] = 1.0;
    for k in (1..=mode).rev() {
        raw[k - 1] = raw[k] * (k as f64 / lambda_t);
    }
    let mut k = mode;
    loop {
        let next = raw[k] * (lambda_t / (k + 1) as f64);
        raw.push(next);
        k += 1;
        let ratio = lambda_t / (k + 1) as f64;
        if ratio < 0.5 && next < 1e-40 {
            break;
        }
    }
    let right = raw.len() - 1;
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|u| u / total).collect();
    let rel_error = (2 * right.max(mode) + 16) as f64 * f64::EPSILON + 1e-30;

    // suffix sums over the computed range, plus a geometric bound beyond it
    let r_end = lambda_t / (right + 1) as f64;
    let beyond = weights[right] * (1.0 + rel_error) * r_end / (1.0 - r_end);
    let mut suffix = vec![0.0; right + 2];
    for j in (0..=right).rev() {
        suffix[j] = suffix[j + 1] + weights[j];
    }
    let tail_after = |n: usize| suffix[n + 1] * (1.0 + rel_error) + beyond + f64::MIN_POSITIVE;

    let n_max = (0..=right).find(|&n| tail_after(n) < epsilon).unwrap_or(right);
    let tail_bound = tail_after(n_max);
    let weights: Vec<f64> = weights[..=n_max].to_vec();
    let mut suffix = vec![0.0; n_max + 2];
    for j in (0..=n_max).rev() {
        suffix[j] = suffix[j + 1] + weights[j];
    }
    Ok(PoissonWeights { lambda_t, n_max, weights, tail_bound, rel_error, suffix })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_takes_no_steps() {
        let w = poisson_weights(0.0, 1e-3).unwrap();
        assert_eq!(w.weights, [1.0]);
        assert_eq!(w.tail_bound, 0.0);
        assert_eq!(w.tail_hi(1), 0.0);
    }

    #[test]
    fn closed_form_at_one() {
        let w = poisson_weights(1.0, 1e-10).unwrap();
        let expected = (-1.0_f64).exp();
        assert!((w.weights[0] - expected).abs() / expected < 1e-12);
        assert!(w.tail_bound < 1e-10);
    }

    #[test]
    fn mass_and_tail() {
        for lt in [0.3, 6.0, 42.5, 1000.0, 10_000.0] {
            let w = poisson_weights(lt, 1e-9).unwrap();
            let s: f64 = w.weights.iter().sum();
            assert!(s >= 1.0 - 1e-9 - 1e-12, "λt={lt}: {s}");
            assert!(s <= 1.0 + 1e-12);
            assert!(s + w.tail_bound >= 1.0 - 1e-12);
            assert!(w.tail_bound < 1e-9);
        }
    }

    #[test]
    fn recursion_holds() {
        for lt in [0.7, 6.0, 250.0] {
            let w = poisson_weights(lt, 1e-12).unwrap();
            for n in 0..w.n_max {
                let lhs = w.weights[n + 1] * (n + 1) as f64;
                let rhs = w.weights[n] * lt;
                if rhs > 1e-290 {
                    assert!((lhs - rhs).abs() <= 1e-12 * rhs, "λt={lt} n={n}");
                }
            }
        }
    }

    #[test]
    fn matches_direct_formula_at_moderate_rate() {
        let w = poisson_weights(6.0, 1e-12).unwrap();
        let mut p = (-6.0_f64).exp();
        for n in 0..=w.n_max {
            assert!((w.weights[n] - p).abs() <= 1e-12 * p, "n={n}");
            p *= 6.0 / (n + 1) as f64;
        }
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(poisson_weights(1.0, 0.0).is_err());
        assert!(poisson_weights(1.0, -1.0).is_err());
        assert!(poisson_weights(-1.0, 1e-3).is_err());
    }
}
