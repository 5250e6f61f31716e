//! Trace and diagonal estimators.
//!
//! | estimator   | test vectors | matvecs          | err_est |
//! |-------------|--------------|------------------|---------|
//! | `hutch`     | m            | m                | yes     |
//! | `lra`       | m/2          | m                | no      |
//! | `hutchpp`   | 2m/3         | m                | no      |
//! | `nystrompp` | m            | m                | no      |
//! | `xtrace`    | m/2          | m                | yes     |
//! | `xnystrace` | m            | m                | yes     |
//! | `bks_diag`  | m            | m                | n/a     |
//! | `xdiag`     | m/2          | m/2 + m/2 adjoint| n/a     |
//!
//! Every estimator has a seeded entry point that draws its own test matrix
//! and a `*_with` variant that takes Ω explicitly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_budget, Error, Result};
use crate::linalg::{compensated_sum, CompensatedSum};

mod baselines;
mod nystrom;
mod sketch;
mod xdiag;
mod xtrace;

pub use baselines::{bks_diag, bks_diag_with, hutch, hutch_with, hutchpp, hutchpp_with, lra_trace, lra_trace_with};
pub use nystrom::{nystrompp, nystrompp_with, xnystrace, xnystrace_from_sketch, xnystrace_with};
pub use sketch::{nullspace_unit_vectors, SketchState};
pub use xdiag::{xdiag, xdiag_with};
pub use xtrace::{xtrace, xtrace_from_sketch, xtrace_with};

/// Output of a trace estimator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceReport {
    pub estimate: f64,
    /// Posterior error estimate; only for estimators built from
    /// exchangeable basic estimates.
    pub err_est: Option<f64>,
    /// The basic estimates whose mean is `estimate`.
    pub per_sample: Option<Vec<f64>>,
    pub matvecs_used: usize,
}

impl TraceReport {
    fn from_samples(per_sample: Vec<f64>, matvecs_used: usize) -> Result<Self> {
        let estimate = mean(&per_sample);
        let err_est = if per_sample.len() >= 2 {
            Some(error_estimate(&per_sample)?)
        } else {
            None
        };
        Ok(Self {
            estimate,
            err_est,
            per_sample: Some(per_sample),
            matvecs_used,
        })
    }

    fn plain(estimate: f64, matvecs_used: usize) -> Self {
        Self {
            estimate,
            err_est: None,
            per_sample: None,
            matvecs_used,
        }
    }
}

/// Output of a diagonal estimator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagReport {
    pub estimate: Vec<f64>,
    pub matvecs_used: usize,
    pub adjoint_matvecs_used: usize,
}

/// Posterior error estimate from ℓ ≥ 2 basic estimates:
/// êrr² = Σ (tr̂ᵢ − tr̂)² / (ℓ(ℓ−1)).
pub fn error_estimate(per_sample: &[f64]) -> Result<f64> {
    let l = per_sample.len();
    if l < 2 {
        return Err(Error::InvalidArgument(format!(
            "error estimate needs at least two basic estimates, got {l}"
        )));
    }
    let m = mean(per_sample);
    let mut acc = CompensatedSum::new();
    for &x in per_sample {
        acc.add((x - m) * (x - m));
    }
    Ok((acc.value() / (l * (l - 1)) as f64).sqrt())
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    compensated_sum(xs.iter().copied()) / xs.len() as f64
}

/// Validates `m` against a divisibility requirement and a lower bound.
pub(crate) fn check_budget(m: usize, divisor: usize, min: usize, name: &str) -> Result<()> {
    if m < min {
        return Err(invalid_budget(m, format!("{name} needs m >= {min}")));
    }
    if m % divisor != 0 {
        return Err(invalid_budget(m, format!("{name} needs m divisible by {divisor}")));
    }
    Ok(())
}

pub(crate) fn check_width(m: usize, k: usize, n: usize, name: &str) -> Result<()> {
    if k > n {
        return Err(invalid_budget(
            m,
            format!("{name} would use {k} test vectors but the dimension is {n}"),
        ));
    }
    Ok(())
}

/// Every estimator exposed by the benchmark harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Hutch,
    Lra,
    HutchPP,
    NystromPP,
    XTrace,
    XNysTrace,
    Bks,
    XDiag,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Hutch => "hutch",
            Self::Lra => "lra",
            Self::HutchPP => "hutchpp",
            Self::NystromPP => "nystrompp",
            Self::XTrace => "xtrace",
            Self::XNysTrace => "xnystrace",
            Self::Bks => "bks",
            Self::XDiag => "xdiag",
        }
    }

    pub fn is_diagonal(self) -> bool {
        matches!(self, Self::Bks | Self::XDiag)
    }

    pub fn requires_psd(self) -> bool {
        matches!(self, Self::NystromPP | Self::XNysTrace)
    }

    /// Largest admissible budget not exceeding `m`, or `None` if there is none.
    pub fn round_budget(self, m: usize) -> Option<usize> {
        let (divisor, min) = match self {
            Self::Hutch | Self::Bks => (1, 1),
            Self::Lra | Self::NystromPP => (2, 2),
            Self::HutchPP => (3, 3),
            Self::XTrace | Self::XDiag => (2, 4),
            Self::XNysTrace => (1, 2),
        };
        let r = m - m % divisor;
        (r >= min).then_some(r)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "hutch" | "gh" => Self::Hutch,
            "lra" => Self::Lra,
            "hutchpp" | "hutch++" => Self::HutchPP,
            "nystrompp" | "nystrom++" => Self::NystromPP,
            "xtrace" => Self::XTrace,
            "xnystrace" => Self::XNysTrace,
            "bks" => Self::Bks,
            "xdiag" => Self::XDiag,
            other => return Err(Error::InvalidArgument(format!("unknown estimator `{other}`"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_estimate_hand_values() {
        assert_eq!(error_estimate(&[3.0, 3.0, 3.0]).unwrap(), 0.0);
        assert!((error_estimate(&[0.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(error_estimate(&[1.0]).is_err());
    }

    #[test]
    fn error_estimate_shift_invariant() {
        let xs = [0.3, -1.2, 4.0, 2.5];
        let shifted: Vec<f64> = xs.iter().map(|x| x + 100.0).collect();
        let a = error_estimate(&xs).unwrap();
        let b = error_estimate(&shifted).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn budget_rounding() {
        assert_eq!(EstimatorKind::HutchPP.round_budget(31), Some(30));
        assert_eq!(EstimatorKind::XTrace.round_budget(13), Some(12));
        assert_eq!(EstimatorKind::XTrace.round_budget(3), None);
        assert_eq!(EstimatorKind::XNysTrace.round_budget(13), Some(13));
        assert_eq!(EstimatorKind::Hutch.round_budget(0), None);
    }

    #[test]
    fn names_round_trip() {
        for k in [
            EstimatorKind::Hutch,
            EstimatorKind::Lra,
            EstimatorKind::HutchPP,
            EstimatorKind::NystromPP,
            EstimatorKind::XTrace,
            EstimatorKind::XNysTrace,
            EstimatorKind::Bks,
            EstimatorKind::XDiag,
        ] {
            assert_eq!(k.name().parse::<EstimatorKind>().unwrap(), k);
        }
    }
}
