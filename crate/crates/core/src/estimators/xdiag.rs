//! XDiag: exchangeable diagonal estimator.
//!
//!   d̂ = (1/k) Σᵢ [ diag(Q₍ᵢ₎Q₍ᵢ₎*A) + ωᵢ ⊙ (I − Q₍ᵢ₎Q₍ᵢ₎*)Aωᵢ ⊘ (ωᵢ ⊙ ωᵢ) ]
//!
//! With V = A*Q the first term is rowsum(Q ⊙ V) − (Qsᵢ) ⊙ (Vsᵢ), and the
//! residual vector is yᵢ − Q(rᵢ − sᵢ(sᵢ*rᵢ)). Uses k forward and k adjoint
//! matvecs.

use nalgebra::DMatrix;

use super::sketch::SketchState;
use super::{check_budget, check_width, DiagReport};
use crate::error::{Error, Result};
use crate::linalg::{compensated_dot, compensated_sum, CompensatedSum};
use crate::linop::LinearOperator;
use crate::sampling::{sample_test_matrix, Distribution};

/// XDiag with random sign test vectors (k = m/2 of them).
pub fn xdiag<O: LinearOperator + ?Sized>(op: &O, m: usize, seed: u64) -> Result<DiagReport> {
    check_budget(m, 2, 4, "xdiag")?;
    check_width(m, m / 2, op.dim(), "xdiag")?;
    let tm = sample_test_matrix(Distribution::Signs, op.dim(), m / 2, seed)?;
    xdiag_with(op, tm.omega())
}

pub fn xdiag_with<O: LinearOperator + ?Sized>(op: &O, omega: &DMatrix<f64>) -> Result<DiagReport> {
    let (n, k) = omega.shape();
    check_budget(2 * k, 2, 4, "xdiag")?;
    check_width(2 * k, k, op.dim(), "xdiag")?;
    let denominators: Vec<f64> = omega.iter().map(|w| w * w).collect();
    if let Some(pos) = denominators.iter().position(|&d| d == 0.0) {
        return Err(Error::DegenerateInput(format!(
            "zero test-vector entry at row {}, column {}",
            pos % n,
            pos / n
        )));
    }

    let y = op.apply(omega)?;
    let sketch = SketchState::new(omega.clone(), y)?;
    let v = op.apply_adjoint(&sketch.q)?;
    let qs = &sketch.q * &sketch.s;
    let vs = &v * &sketch.s;
    let base: Vec<f64> = (0..n)
        .map(|j| compensated_sum((0..k).map(|l| sketch.q[(j, l)] * v[(j, l)])))
        .collect();

    let mut acc = vec![CompensatedSum::new(); n];
    for i in 0..k {
        let s = sketch.s.column(i);
        let r = sketch.r.column(i);
        let coef = r - s * compensated_dot(s.as_slice(), r.as_slice());
        let resid = sketch.y.column(i) - &sketch.q * coef;
        for j in 0..n {
            let w = omega[(j, i)];
            acc[j].add(base[j] - qs[(j, i)] * vs[(j, i)] + w * resid[j] / denominators[i * n + j]);
        }
    }
    let estimate = acc.iter().map(|a| a.value() / k as f64).collect();
    Ok(DiagReport {
        estimate,
        matvecs_used: k,
        adjoint_matvecs_used: k,
    })
}
