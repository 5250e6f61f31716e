//! Doubling driver: grow the budget m₀, 2m₀, 4m₀, … until the posterior
//! error estimate drops below ε·|tr̂|.
//!
//! Every round reuses all earlier matvecs. The test matrix is extended along
//! the same seeded stream, only the new columns are multiplied by A, and the
//! sketch factorization is rebuilt. For XTrace the orthonormal basis is
//! extended by block Gram–Schmidt, which keeps the earlier basis columns
//! fixed so that previously computed products A·Q stay valid. The total
//! number of matvecs after the last round is therefore exactly its budget.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{xnystrace_from_sketch, xtrace_from_sketch, SketchState, TraceReport};
use crate::linop::LinearOperator;
use crate::sampling::{sample_test_matrix, Distribution, TestMatrix};

/// Estimators the driver can grow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdaptiveEstimator {
    XTrace,
    XNysTrace,
}

impl AdaptiveEstimator {
    pub fn name(self) -> &'static str {
        match self {
            Self::XTrace => "xtrace",
            Self::XNysTrace => "xnystrace",
        }
    }

    /// Test vectors used at budget `m`.
    fn width(self, m: usize) -> usize {
        match self {
            Self::XTrace => m / 2,
            Self::XNysTrace => m,
        }
    }
}

impl fmt::Display for AdaptiveEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdaptiveEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xtrace" => Ok(Self::XTrace),
            "xnystrace" => Ok(Self::XNysTrace),
            other => Err(Error::InvalidArgument(format!(
                "`{other}` cannot be run adaptively (use xtrace or xnystrace)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub initial_budget: usize,
    pub tolerance: f64,
    pub max_budget: usize,
    pub estimator: AdaptiveEstimator,
    pub distribution: Distribution,
    pub normalize: bool,
    pub seed: u64,
}

impl AdaptiveConfig {
    /// Defaults: m₀ = 8, Gaussian vectors with normalization.
    pub fn new(estimator: AdaptiveEstimator, tolerance: f64, max_budget: usize, seed: u64) -> Self {
        Self {
            initial_budget: 8,
            tolerance,
            max_budget,
            estimator,
            distribution: Distribution::Gaussian,
            normalize: true,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m0 = self.initial_budget;
        if m0 < 4 {
            return Err(Error::InvalidArgument(format!("initial budget must be >= 4, got {m0}")));
        }
        if self.estimator == AdaptiveEstimator::XTrace && m0 % 2 != 0 {
            return Err(Error::InvalidArgument(format!("xtrace needs an even initial budget, got {m0}")));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must lie in (0, 1), got {}",
                self.tolerance
            )));
        }
        if self.max_budget < m0 {
            return Err(Error::InvalidArgument(format!(
                "budget cap {} is below the initial budget {m0}",
                self.max_budget
            )));
        }
        Ok(())
    }
}

/// One round of the doubling loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdaptiveStep {
    pub budget: usize,
    pub estimate: f64,
    pub err_est: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdaptiveReport {
    /// Report of the final round; `matvecs_used` is the total over all rounds.
    pub report: TraceReport,
    /// False when the budget cap stopped the loop first.
    pub converged: bool,
    pub history: Vec<AdaptiveStep>,
}

/// Matvec-reusing state for one estimator family.
enum Growth {
    XTrace { sketch: Box<SketchState>, z: DMatrix<f64> },
    XNysTrace { omega: DMatrix<f64>, y: DMatrix<f64> },
}

impl Growth {
    fn start<O: LinearOperator + ?Sized>(op: &O, kind: AdaptiveEstimator, tm: &TestMatrix) -> Result<Self> {
        let omega = tm.omega().clone();
        let y = op.apply(&omega)?;
        Ok(match kind {
            AdaptiveEstimator::XTrace => {
                let sketch = SketchState::new(omega, y)?;
                let z = op.apply(&sketch.q)?;
                Self::XTrace { sketch: Box::new(sketch), z }
            }
            AdaptiveEstimator::XNysTrace => Self::XNysTrace { omega, y },
        })
    }

    /// Absorbs the columns of `tm` beyond the current width.
    fn grow<O: LinearOperator + ?Sized>(&mut self, op: &O, tm: &TestMatrix) -> Result<()> {
        match self {
            Self::XTrace { sketch, z } => {
                let old = sketch.width();
                let extra = tm.ncols() - old;
                let omega_new = tm.omega().columns(old, extra).into_owned();
                let y_new = op.apply(&omega_new)?;
                let next = sketch.extended(&omega_new, &y_new)?;
                let z_new = op.apply(&next.q.columns(old, extra).into_owned())?;
                *z = hcat(z, &z_new);
                **sketch = next;
            }
            Self::XNysTrace { omega, y } => {
                let old = omega.ncols();
                let extra = tm.ncols() - old;
                let omega_new = tm.omega().columns(old, extra).into_owned();
                let y_new = op.apply(&omega_new)?;
                *y = hcat(y, &y_new);
                *omega = tm.omega().clone();
            }
        }
        Ok(())
    }

    fn report(&self, normalize: bool) -> Result<TraceReport> {
        match self {
            Self::XTrace { sketch, z } => xtrace_from_sketch(sketch, z, normalize),
            Self::XNysTrace { omega, y } => xnystrace_from_sketch(omega, y, normalize),
        }
    }
}

fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Runs the doubling loop. Stops as soon as êrr ≤ ε·|tr̂|; if the next budget
/// would exceed the cap (or need more test vectors than the dimension), the
/// last report is returned with `converged = false`.
pub fn run_adaptive<O: LinearOperator + ?Sized>(op: &O, cfg: &AdaptiveConfig) -> Result<AdaptiveReport> {
    cfg.validate()?;
    if cfg.estimator == AdaptiveEstimator::XNysTrace && !op.is_psd() {
        return Err(Error::NotPsd);
    }
    let n = op.dim();
    let kind = cfg.estimator;
    let fits = |m: usize| m <= cfg.max_budget && kind.width(m) <= n;
    let mut budget = cfg.initial_budget;
    if !fits(budget) {
        return Err(Error::InvalidArgument(format!(
            "initial budget {budget} needs more test vectors than the dimension {n}"
        )));
    }

    let mut tm = sample_test_matrix(cfg.distribution, n, kind.width(budget), cfg.seed)?;
    let mut state = Growth::start(op, kind, &tm)?;
    let mut history = Vec::new();
    loop {
        let report = state.report(cfg.normalize)?;
        let err_est = report.err_est.unwrap_or(f64::INFINITY);
        history.push(AdaptiveStep {
            budget,
            estimate: report.estimate,
            err_est,
        });
        let converged = err_est <= cfg.tolerance * report.estimate.abs();
        if converged || !fits(2 * budget) {
            return Ok(AdaptiveReport {
                report,
                converged,
                history,
            });
        }
        budget *= 2;
        tm = tm.extend(kind.width(budget) - tm.ncols());
        state.grow(op, &tm)?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{make_synthetic_operator, SpectrumKind, SpectrumSpec};

    #[test]
    fn config_validation() {
        let ok = AdaptiveConfig::new(AdaptiveEstimator::XTrace, 1e-3, 64, 0);
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.initial_budget = 7;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.tolerance = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.max_budget = 4;
        assert!(bad.validate().is_err());
        let mut odd = ok;
        odd.estimator = AdaptiveEstimator::XNysTrace;
        odd.initial_budget = 5;
        assert!(odd.validate().is_ok());
    }

    #[test]
    fn budgets_double_and_matvecs_are_reused() {
        let op = make_synthetic_operator(&SpectrumSpec::new(SpectrumKind::Poly, 120), 3).unwrap();
        for kind in [AdaptiveEstimator::XTrace, AdaptiveEstimator::XNysTrace] {
            op.counter().reset();
            let cfg = AdaptiveConfig::new(kind, 1e-9, 64, 11);
            let out = run_adaptive(&op, &cfg).unwrap();
            let budgets: Vec<usize> = out.history.iter().map(|s| s.budget).collect();
            assert_eq!(budgets, vec![8, 16, 32, 64]);
            assert!(!out.converged);
            assert_eq!(op.counter().total(), 64, "{kind}");
        }
    }

    #[test]
    fn final_round_matches_fresh_run() {
        let op = make_synthetic_operator(&SpectrumSpec::new(SpectrumKind::Exp, 150), 5).unwrap();
        let cfg = AdaptiveConfig::new(AdaptiveEstimator::XTrace, 1e-12, 32, 9);
        let out = run_adaptive(&op, &cfg).unwrap();
        let fresh = crate::estimators::xtrace(&op, 32, cfg.distribution, true, 9).unwrap();
        let rel = (out.report.estimate - fresh.estimate).abs() / fresh.estimate.abs();
        assert!(rel < 1e-10, "{rel}");
    }
}
