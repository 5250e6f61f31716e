//! XTrace: exchangeable trace estimator built on a randomized SVD sketch.
//!
//! Each basic estimate uses all test vectors but ωᵢ for the low-rank part and
//! ωᵢ alone for the residual:
//!
//!   tr̂ᵢ = tr(Q₍ᵢ₎*AQ₍ᵢ₎) + ωᵢ*(I − Q₍ᵢ₎Q₍ᵢ₎*)A(I − Q₍ᵢ₎Q₍ᵢ₎*)ωᵢ.
//!
//! With Q₍ᵢ₎Q₍ᵢ₎* = Q(I − sᵢsᵢ*)Q*, H = Q*AQ, W = Q*Ω, T = (AQ)*Ω and
//! cᵢ = wᵢ − sᵢ(sᵢ*wᵢ), the two terms become
//!
//!   tr(Q₍ᵢ₎*AQ₍ᵢ₎) = tr H − sᵢ*Hsᵢ
//!   residual      = ωᵢ*Aωᵢ − tᵢ*cᵢ − cᵢ*rᵢ + cᵢ*Hcᵢ
//!
//! which costs O(k²) per i once the O(k²N) shared products are formed.

use nalgebra::DMatrix;

use super::sketch::SketchState;
use super::{check_budget, check_width, TraceReport};
use crate::error::Result;
use crate::linalg::{at_b, compensated_dot, compensated_sum, CompensatedSum};
use crate::linop::LinearOperator;
use crate::sampling::{sample_test_matrix, Distribution};

pub fn xtrace<O: LinearOperator + ?Sized>(
    op: &O,
    m: usize,
    distribution: Distribution,
    normalize: bool,
    seed: u64,
) -> Result<TraceReport> {
    check_budget(m, 2, 4, "xtrace")?;
    let k = m / 2;
    check_width(m, k, op.dim(), "xtrace")?;
    let tm = sample_test_matrix(distribution, op.dim(), k, seed)?;
    xtrace_with(op, tm.omega(), normalize)
}

/// XTrace on an explicit test matrix; the budget is twice its width.
pub fn xtrace_with<O: LinearOperator + ?Sized>(
    op: &O,
    omega: &DMatrix<f64>,
    normalize: bool,
) -> Result<TraceReport> {
    let k = omega.ncols();
    check_budget(2 * k, 2, 4, "xtrace")?;
    check_width(2 * k, k, op.dim(), "xtrace")?;
    let y = op.apply(omega)?;
    let sketch = SketchState::new(omega.clone(), y)?;
    let z = op.apply(&sketch.q)?;
    xtrace_from_sketch(&sketch, &z, normalize)
}

/// Post-processing step given the sketch and Z = AQ.
pub fn xtrace_from_sketch(
    sketch: &SketchState,
    z: &DMatrix<f64>,
    normalize: bool,
) -> Result<TraceReport> {
    let (n, k) = sketch.omega.shape();
    check_budget(2 * k, 2, 4, "xtrace")?;
    let h = at_b(&sketch.q, z);
    let t = at_b(z, &sketch.omega);
    let trace_h = compensated_sum(h.diagonal().iter().copied());
    let rank_deficit = (n - (k - 1)) as f64;

    let per_sample = (0..k)
        .map(|i| {
            let omega_i = sketch.omega.column(i);
            let s = sketch.s.column(i);
            let w = sketch.w.column(i);
            let r = sketch.r.column(i);

            let sw = compensated_dot(s.as_slice(), w.as_slice());
            let c = w - s * sw;
            let hs = &h * s;
            let hc = &h * &c;

            let low_rank = trace_h - compensated_dot(s.as_slice(), hs.as_slice());

            let mut quad = CompensatedSum::new();
            quad.add(compensated_dot(omega_i.as_slice(), sketch.y.column(i).as_slice()));
            quad.add(-compensated_dot(t.column(i).as_slice(), c.as_slice()));
            quad.add(-compensated_dot(c.as_slice(), r.as_slice()));
            quad.add(compensated_dot(c.as_slice(), hc.as_slice()));
            let mut residual = quad.value();

            if normalize {
                let omega_sq = compensated_dot(omega_i.as_slice(), omega_i.as_slice());
                let w_sq = compensated_dot(w.as_slice(), w.as_slice());
                let mu_sq = omega_sq - w_sq + sw * sw;
                residual *= rank_deficit / mu_sq;
            }
            low_rank + residual
        })
        .collect();

    TraceReport::from_samples(per_sample, 2 * k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::linop::{DenseOperator, IdentityOperator};

    #[test]
    fn rejects_bad_budgets() {
        let op = IdentityOperator::new(10);
        assert!(matches!(
            xtrace(&op, 7, Distribution::Gaussian, false, 0),
            Err(Error::InvalidBudget { .. })
        ));
        assert!(matches!(
            xtrace(&op, 2, Distribution::Gaussian, false, 0),
            Err(Error::InvalidBudget { .. })
        ));
        assert!(matches!(
            xtrace(&op, 22, Distribution::Gaussian, false, 0),
            Err(Error::InvalidBudget { .. })
        ));
    }

    #[test]
    fn full_width_normalized_is_exact() {
        // k = N: each Q₍ᵢ₎ misses one direction, and the normalized residual
        // vector is exactly that direction scaled to unit length.
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, -1.0, 3.0, 0.5, 0.0, 0.2, 1.0]);
        let op = DenseOperator::new(a).unwrap();
        let rep = xtrace(&op, 6, Distribution::Gaussian, true, 5).unwrap();
        assert!((rep.estimate - 6.0).abs() < 1e-12);
        assert_eq!(rep.matvecs_used, 6);
        assert_eq!(op.counter().forward(), 6);
    }

    #[test]
    fn estimate_is_mean_of_samples() {
        let a = DMatrix::from_fn(20, 20, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let op = DenseOperator::new(a).unwrap();
        let rep = xtrace(&op, 8, Distribution::Signs, true, 1).unwrap();
        let samples = rep.per_sample.as_ref().unwrap();
        assert_eq!(samples.len(), 4);
        let mean = samples.iter().sum::<f64>() / 4.0;
        assert!((mean - rep.estimate).abs() < 1e-14);
        let err = super::super::error_estimate(samples).unwrap();
        assert_eq!(rep.err_est, Some(err));
    }
}
