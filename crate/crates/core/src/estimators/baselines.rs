//! Classical estimators: Girard–Hutchinson, low-rank surrogate, Hutch++ and
//! the BKS diagonal estimator.

use nalgebra::DMatrix;

use super::{check_budget, check_width, DiagReport, TraceReport};
use crate::error::{Error, Result};
use crate::linalg::{compensated_dot, compensated_sum, orth, CompensatedSum};
use crate::linop::LinearOperator;
use crate::sampling::{sample_test_matrix, Distribution};

/// Girard–Hutchinson: the mean of m quadratic forms ωᵢ*Aωᵢ.
pub fn hutch<O: LinearOperator + ?Sized>(
    op: &O,
    m: usize,
    distribution: Distribution,
    seed: u64,
) -> Result<TraceReport> {
    check_budget(m, 1, 1, "hutch")?;
    let tm = sample_test_matrix(distribution, op.dim(), m, seed)?;
    hutch_with(op, tm.omega())
}

pub fn hutch_with<O: LinearOperator + ?Sized>(op: &O, omega: &DMatrix<f64>) -> Result<TraceReport> {
    let m = omega.ncols();
    check_budget(m, 1, 1, "hutch")?;
    let y = op.apply(omega)?;
    let per_sample = omega
        .column_iter()
        .zip(y.column_iter())
        .map(|(w, aw)| compensated_dot(w.as_slice(), aw.as_slice()))
        .collect();
    TraceReport::from_samples(per_sample, m)
}

/// Trace of the randomized SVD QQ*A with Q = orth(AΩ), Ω of width m/2.
/// Biased; no error estimate.
pub fn lra_trace<O: LinearOperator + ?Sized>(
    op: &O,
    m: usize,
    distribution: Distribution,
    seed: u64,
) -> Result<TraceReport> {
    check_budget(m, 2, 2, "lra")?;
    check_width(m, m / 2, op.dim(), "lra")?;
    let tm = sample_test_matrix(distribution, op.dim(), m / 2, seed)?;
    lra_trace_with(op, tm.omega())
}

pub fn lra_trace_with<O: LinearOperator + ?Sized>(
    op: &O,
    omega: &DMatrix<f64>,
) -> Result<TraceReport> {
    let k = omega.ncols();
    check_budget(2 * k, 2, 2, "lra")?;
    check_width(2 * k, k, op.dim(), "lra")?;
    let q = orth(&op.apply(omega)?);
    let z = op.apply(&q)?;
    let estimate = compensated_sum(
        q.column_iter()
            .zip(z.column_iter())
            .map(|(a, b)| compensated_dot(a.as_slice(), b.as_slice())),
    );
    Ok(TraceReport::plain(estimate, 2 * k))
}

/// Hutch++ with 2m/3 test vectors: columns m/3.. sketch the range,
/// columns ..m/3 estimate the trace of the deflated residual.
pub fn hutchpp<O: LinearOperator + ?Sized>(
    op: &O,
    m: usize,
    distribution: Distribution,
    seed: u64,
) -> Result<TraceReport> {
    check_budget(m, 3, 3, "hutchpp")?;
    check_width(m, m / 3, op.dim(), "hutchpp")?;
    let tm = sample_test_matrix(distribution, op.dim(), 2 * m / 3, seed)?;
    hutchpp_with(op, tm.omega())
}

pub fn hutchpp_with<O: LinearOperator + ?Sized>(
    op: &O,
    omega: &DMatrix<f64>,
) -> Result<TraceReport> {
    let cols = omega.ncols();
    if cols % 2 != 0 {
        return Err(Error::InvalidArgument(
            "hutchpp test matrix must have an even number of columns".into(),
        ));
    }
    let k = cols / 2;
    let m = 3 * k;
    check_budget(m, 3, 3, "hutchpp")?;
    check_width(m, k, op.dim(), "hutchpp")?;
    let probe = omega.columns(0, k).into_owned();
    let sketch = omega.columns(k, k).into_owned();

    let q = orth(&op.apply(&sketch)?);
    let z = op.apply(&q)?;
    let g = &probe - &q * crate::linalg::at_b(&q, &probe);
    let ag = op.apply(&g)?;

    let low_rank = compensated_sum(
        q.column_iter()
            .zip(z.column_iter())
            .map(|(a, b)| compensated_dot(a.as_slice(), b.as_slice())),
    );
    let residual = compensated_sum(
        g.column_iter()
            .zip(ag.column_iter())
            .map(|(a, b)| compensated_dot(a.as_slice(), b.as_slice())),
    ) / k as f64;
    Ok(TraceReport::plain(low_rank + residual, m))
}

/// Bekas–Kokiopoulou–Saad: Σ ωᵢ⊙(Aωᵢ) / Σ ωᵢ⊙ωᵢ, entrywise.
pub fn bks_diag<O: LinearOperator + ?Sized>(
    op: &O,
    m: usize,
    distribution: Distribution,
    seed: u64,
) -> Result<DiagReport> {
    check_budget(m, 1, 1, "bks")?;
    let tm = sample_test_matrix(distribution, op.dim(), m, seed)?;
    bks_diag_with(op, tm.omega())
}

pub fn bks_diag_with<O: LinearOperator + ?Sized>(
    op: &O,
    omega: &DMatrix<f64>,
) -> Result<DiagReport> {
    let m = omega.ncols();
    check_budget(m, 1, 1, "bks")?;
    let y = op.apply(omega)?;
    let n = op.dim();
    let mut estimate = Vec::with_capacity(n);
    for row in 0..n {
        let mut num = CompensatedSum::new();
        let mut den = CompensatedSum::new();
        for j in 0..m {
            let w = omega[(row, j)];
            num.add(w * y[(row, j)]);
            den.add(w * w);
        }
        let den = den.value();
        if den == 0.0 {
            return Err(Error::DegenerateInput(format!(
                "zero denominator in diagonal entry {row}"
            )));
        }
        estimate.push(num.value() / den);
    }
    Ok(DiagReport {
        estimate,
        matvecs_used: m,
        adjoint_matvecs_used: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{DenseOperator, IdentityOperator};
    use nalgebra::DVector;

    #[test]
    fn hutch_identity_with_signs_is_exact() {
        let op = IdentityOperator::new(7);
        for m in [1, 2, 5] {
            let rep = hutch(&op, m, Distribution::Signs, m as u64).unwrap();
            assert_eq!(rep.estimate, 7.0);
            assert_eq!(rep.matvecs_used, m);
        }
    }

    #[test]
    fn hutch_hand_evaluation() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let op = DenseOperator::new(a).unwrap();
        let omega = DMatrix::from_element(3, 1, 1.0);
        let rep = hutch_with(&op, &omega).unwrap();
        assert_eq!(rep.estimate, 6.0);
        assert_eq!(rep.err_est, None);
    }

    #[test]
    fn lra_of_identity_is_sketch_width() {
        let op = IdentityOperator::new(40);
        let rep = lra_trace(&op, 10, Distribution::Gaussian, 3).unwrap();
        assert!((rep.estimate - 5.0).abs() < 1e-12);
        assert!(rep.err_est.is_none());
        assert!(lra_trace(&op, 9, Distribution::Gaussian, 3).is_err());
    }

    #[test]
    fn hutchpp_budget_and_divisibility() {
        let op = IdentityOperator::new(40);
        let rep = hutchpp(&op, 12, Distribution::Signs, 0).unwrap();
        assert_eq!(rep.matvecs_used, 12);
        assert_eq!(op.counter().forward(), 12);
        assert!(matches!(
            hutchpp(&op, 10, Distribution::Signs, 0),
            Err(Error::InvalidBudget { .. })
        ));
    }

    #[test]
    fn bks_exact_on_diagonal_matrix() {
        let d = DVector::from_vec(vec![1.5, -2.0, 0.25, 7.0]);
        let op = DenseOperator::new(DMatrix::from_diagonal(&d)).unwrap();
        for dist in [Distribution::Signs, Distribution::Gaussian, Distribution::Sphere] {
            let rep = bks_diag(&op, 3, dist, 4).unwrap();
            for (a, b) in rep.estimate.iter().zip(d.iter()) {
                assert!((a - b).abs() < 1e-14);
            }
            assert_eq!(rep.adjoint_matvecs_used, 0);
        }
    }

    #[test]
    fn bks_zero_denominator() {
        let op = IdentityOperator::new(2);
        let omega = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        assert!(matches!(bks_diag_with(&op, &omega), Err(Error::DegenerateInput(_))));
    }
}
