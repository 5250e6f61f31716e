//! Literal reference implementations, used only to cross-check the
//! efficient estimators. Each oracle densifies the operator (N ≤ 512) and
//! recomputes every leave-one-out quantity from scratch, so it costs
//! O(k·N³)-ish and shares no code path with `estimators` beyond a thin QR.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid_budget, Error, Result};
use crate::estimators::{DiagReport, TraceReport};
use crate::linalg::{compensated_sum, drop_column, orth};
use crate::linop::{densify, LinearOperator};
use crate::sampling::TestMatrix;

pub const ORACLE_MAX_DIM: usize = 512;

fn dense_for_oracle<O: LinearOperator + ?Sized>(op: &O) -> Result<DMatrix<f64>> {
    if op.dim() > ORACLE_MAX_DIM {
        return Err(Error::TooLarge {
            dim: op.dim(),
            limit: ORACLE_MAX_DIM,
        });
    }
    densify(op)
}

fn report(per_sample: Vec<f64>, m: usize) -> Result<TraceReport> {
    let l = per_sample.len() as f64;
    let estimate = compensated_sum(per_sample.iter().copied()) / l;
    let err_sq = compensated_sum(per_sample.iter().map(|x| (x - estimate).powi(2))) / (l * (l - 1.0));
    Ok(TraceReport {
        estimate,
        err_est: Some(err_sq.sqrt()),
        per_sample: Some(per_sample),
        matvecs_used: m,
    })
}

/// μ scaled to length √(N − rank).
fn normalized(mu: DVector<f64>, rank: usize) -> DVector<f64> {
    let n = mu.len();
    let norm = mu.norm();
    mu * (((n - rank) as f64).sqrt() / norm)
}

/// XTrace with an explicit basis Q₍ᵢ₎ = orth(Y₋ᵢ) per i.
pub fn xtrace_naive<O: LinearOperator + ?Sized>(
    op: &O,
    m: usize,
    tm: &TestMatrix,
    normalize: bool,
) -> Result<TraceReport> {
    let k = tm.ncols();
    if m != 2 * k || k < 2 {
        return Err(invalid_budget(m, "xtrace oracle needs m = 2·(test matrix width) >= 4"));
    }
    let a = dense_for_oracle(op)?;
    let omega = tm.omega();
    let y = &a * omega;
    let per_sample = (0..k)
        .map(|i| {
            let qi = orth(&drop_column(&y, i));
            let low_rank = (qi.transpose() * &a * &qi).trace();
            let w = omega.column(i).into_owned();
            let mu = &w - &qi * (qi.transpose() * &w);
            let v = if normalize { normalized(mu, k - 1) } else { mu };
            low_rank + v.dot(&(&a * &v))
        })
        .collect();
    report(per_sample, m)
}

/// Moore–Penrose pseudoinverse dropping singular values below
/// k·ε·σ_max.
fn pinv(h: &DMatrix<f64>) -> DMatrix<f64> {
    let k = h.nrows().max(h.ncols());
    let svd = h.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = k as f64 * f64::EPSILON * smax;
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let inv = svd
        .singular_values
        .map(|s| if s > cutoff { 1.0 / s } else { 0.0 });
    vt.transpose() * DMatrix::from_diagonal(&inv) * u.transpose()
}

/// XNysTrace with Âᵢ = Y₋ᵢ (Ω₋ᵢ*Y₋ᵢ)† Y₋ᵢ* formed explicitly.
pub fn xnystrace_naive<O: LinearOperator + ?Sized>(
    op: &O,
    m: usize,
    tm: &TestMatrix,
    normalize: bool,
) -> Result<TraceReport> {
    if m != tm.ncols() || m < 2 {
        return Err(invalid_budget(m, "xnystrace oracle needs m = test matrix width >= 2"));
    }
    let a = dense_for_oracle(op)?;
    let omega = tm.omega();
    let y = &a * omega;
    let per_sample = (0..m)
        .map(|i| {
            let y_i = drop_column(&y, i);
            let om_i = drop_column(omega, i);
            let a_hat = &y_i * pinv(&(om_i.transpose() * &y_i)) * y_i.transpose();
            let resid = &a - &a_hat;
            let w = omega.column(i).into_owned();
            let v = if normalize {
                let p = orth(&om_i);
                normalized(&w - &p * (p.transpose() * &w), m - 1)
            } else {
                w
            };
            a_hat.trace() + v.dot(&(&resid * &v))
        })
        .collect();
    report(per_sample, m)
}

/// XDiag transcribed entry by entry with explicit Q₍ᵢ₎.
pub fn xdiag_naive<O: LinearOperator + ?Sized>(
    op: &O,
    m: usize,
    tm: &TestMatrix,
) -> Result<DiagReport> {
    let k = tm.ncols();
    if m != 2 * k || k < 2 {
        return Err(invalid_budget(m, "xdiag oracle needs m = 2·(test matrix width) >= 4"));
    }
    let a = dense_for_oracle(op)?;
    let n = a.nrows();
    let omega = tm.omega();
    let y = &a * omega;
    let mut sum = DVector::zeros(n);
    for i in 0..k {
        let qi = orth(&drop_column(&y, i));
        let proj = &qi * qi.transpose();
        let low_rank = (&proj * &a).diagonal();
        let w = omega.column(i);
        let resid = y.column(i) - &proj * y.column(i);
        for j in 0..n {
            sum[j] += low_rank[j] + w[j] * resid[j] / (w[j] * w[j]);
        }
    }
    Ok(DiagReport {
        estimate: (sum / k as f64).iter().copied().collect(),
        matvecs_used: k,
        adjoint_matvecs_used: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::DenseOperator;
    use crate::sampling::{sample_test_matrix, Distribution};

    /// diag(1,2,3,4), Ω = [e₁+e₂, e₃+e₄]: Y₋₁ = (0,0,3,4)/…, so Q₍₁₎ spans
    /// (0,0,3,4)/5 and ω₁ is orthogonal to it. The residual is then
    /// ω₁*Aω₁ = 1 + 2, and the low-rank part is (9·3 + 16·4)/25 = 91/25.
    #[test]
    fn pencil_instance() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]));
        let op = DenseOperator::new(a).unwrap();
        let omega = DMatrix::from_column_slice(4, 2, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        let tm = crate::sampling::TestMatrix::from_omega(omega, Distribution::Signs, 0);
        let rep = xtrace_naive(&op, 4, &tm, false).unwrap();
        let s = rep.per_sample.unwrap();
        let t1 = 91.0 / 25.0 + 3.0;
        // Symmetric counterpart: Q₍₂₎ spans (1,2,0,0)/√5; low rank (1 + 8)/5.
        let t2 = 9.0 / 5.0 + 7.0;
        assert!((s[0] - t1).abs() < 1e-12, "{}", s[0]);
        assert!((s[1] - t2).abs() < 1e-12, "{}", s[1]);
        assert!((rep.estimate - 0.5 * (t1 + t2)).abs() < 1e-12);
    }

    #[test]
    fn oracles_reject_large_operators() {
        let op = crate::linop::IdentityOperator::new(600);
        let tm = sample_test_matrix(Distribution::Signs, 600, 2, 0).unwrap();
        assert!(matches!(xtrace_naive(&op, 4, &tm, false), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn budget_must_match_width() {
        let op = crate::linop::IdentityOperator::new(6);
        let tm = sample_test_matrix(Distribution::Signs, 6, 3, 0).unwrap();
        assert!(xtrace_naive(&op, 4, &tm, false).is_err());
        assert!(xnystrace_naive(&op, 4, &tm, false).is_err());
        assert!(xdiag_naive(&op, 3, &tm).is_err());
    }
}
