//! Seeded, order-preserving Monte Carlo trial runner and summary statistics.

use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::compensated_sum;

/// Seed of trial `index` under `base`, derived with a SplitMix64 step so
/// that neighbouring trials get unrelated streams.
pub fn trial_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `trials` independent trials in parallel. Results come back in trial
/// order regardless of scheduling, so reductions over them are
/// deterministic.
pub fn run_trials<T, F>(trials: usize, base_seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..trials as u64)
        .into_par_iter()
        .map(|i| f(trial_seed(base_seed, i)))
        .collect()
}

/// Accuracy summary of repeated scalar estimates of a known value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub trials: usize,
    pub mean_estimate: f64,
    /// Standard error of `mean_estimate`.
    pub std_error: f64,
    pub mean_rel_err: f64,
    pub rmse: f64,
    /// Mean of the reported error estimates, if any were reported.
    pub mean_err_est: Option<f64>,
}

/// Summarizes `estimates` of `truth`. `err_ests` may be empty.
pub fn summarize(estimates: &[f64], err_ests: &[f64], truth: f64) -> ErrorSummary {
    let n = estimates.len();
    let nf = n as f64;
    let mean_estimate = compensated_sum(estimates.iter().copied()) / nf;
    let var = if n > 1 {
        compensated_sum(estimates.iter().map(|x| (x - mean_estimate).powi(2))) / (nf - 1.0)
    } else {
        0.0
    };
    let mse = compensated_sum(estimates.iter().map(|x| (x - truth).powi(2))) / nf;
    let mean_rel_err =
        compensated_sum(estimates.iter().map(|x| (x - truth).abs())) / nf / truth.abs();
    let mean_err_est = (!err_ests.is_empty())
        .then(|| compensated_sum(err_ests.iter().copied()) / err_ests.len() as f64);
    ErrorSummary {
        trials: n,
        mean_estimate,
        std_error: (var / nf).sqrt(),
        mean_rel_err,
        rmse: mse.sqrt(),
        mean_err_est,
    }
}

/// Mean and standard error of a sample.
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / n;
    let var = compensated_sum(xs.iter().map(|x| (x - mean).powi(2))) / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Slope of the least-squares line through (x, y).
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..1000).map(|i| trial_seed(42, i)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), 1000);
        assert_eq!(trial_seed(42, 7), a[7]);
        assert_ne!(trial_seed(43, 7), a[7]);
    }

    #[test]
    fn trials_come_back_in_order() {
        let out = run_trials(100, 3, |s| s);
        let expected: Vec<u64> = (0..100).map(|i| trial_seed(3, i)).collect();
        assert_eq!(out, expected);
    }

    #[test]
    fn summary_by_hand() {
        let s = summarize(&[1.0, 3.0], &[0.5, 1.5], 2.0);
        assert_eq!(s.mean_estimate, 2.0);
        assert_eq!(s.rmse, 1.0);
        assert_eq!(s.mean_rel_err, 0.5);
        assert_eq!(s.mean_err_est, Some(1.0));
        assert!((s.std_error - 1.0).abs() < 1e-15);
    }

    #[test]
    fn slope_of_a_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| -1.5 * v + 2.0).collect();
        assert!((least_squares_slope(&x, &y) + 1.5).abs() < 1e-14);
    }
}
