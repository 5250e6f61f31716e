//! Nyström-based estimators for psd operators: XNysTrace and Nyström++.
//!
//! For a test matrix X the Nyström approximation is
//! A⟨X⟩ = AX (X*AX)† (AX)*. Writing H = Ω*AΩ and G = H⁻¹, dropping column i
//! of Ω is a rank-one downdate of G, which gives
//!
//!   tr A⟨Ω₋ᵢ⟩ = tr(Y G Y*) − ‖Y gᵢ‖² / Gᵢᵢ
//!   ωᵢ*(A − A⟨Ω₋ᵢ⟩)ωᵢ = 1 / Gᵢᵢ.
//!
//! For stability the operator is shifted by a tiny ν (Y ← Y + νΩ), H is
//! symmetrized and Cholesky-factored, and νN is subtracted from the result;
//! the estimator stays unbiased for the shifted matrix and the shift is
//! removed exactly.

use nalgebra::{DMatrix, DVector};

use super::{check_budget, check_width, mean, TraceReport};
use crate::error::{Error, Result};
use crate::linalg::{at_b, compensated_dot, compensated_sum, lower_triangular_inverse, qr_r, solve_lower};
use crate::linop::LinearOperator;
use crate::sampling::{sample_test_matrix, Distribution};

pub fn xnystrace<O: LinearOperator + ?Sized>(
    op: &O,
    m: usize,
    distribution: Distribution,
    normalize: bool,
    seed: u64,
) -> Result<TraceReport> {
    if !op.is_psd() {
        return Err(Error::NotPsd);
    }
    check_budget(m, 1, 2, "xnystrace")?;
    check_width(m, m, op.dim(), "xnystrace")?;
    let tm = sample_test_matrix(distribution, op.dim(), m, seed)?;
    xnystrace_with(op, tm.omega(), normalize)
}

/// XNysTrace on an explicit test matrix; the budget equals its width.
pub fn xnystrace_with<O: LinearOperator + ?Sized>(
    op: &O,
    omega: &DMatrix<f64>,
    normalize: bool,
) -> Result<TraceReport> {
    if !op.is_psd() {
        return Err(Error::NotPsd);
    }
    let m = omega.ncols();
    check_budget(m, 1, 2, "xnystrace")?;
    check_width(m, m, op.dim(), "xnystrace")?;
    let y = op.apply(omega)?;
    xnystrace_from_sketch(omega, &y, normalize)
}

/// Post-processing step given Ω and Y = AΩ. Uses no matvecs.
pub fn xnystrace_from_sketch(
    omega: &DMatrix<f64>,
    y: &DMatrix<f64>,
    normalize: bool,
) -> Result<TraceReport> {
    let (n, m) = omega.shape();
    check_budget(m, 1, 2, "xnystrace")?;
    check_width(m, m, n, "xnystrace")?;
    if y.shape() != (n, m) {
        return Err(Error::InvalidArgument("Ω and AΩ must have the same shape".into()));
    }

    let core = ShiftedCore::new(omega, y)?;
    let r = qr_r(&core.y);
    // M = R L⁻*, so Y L⁻* = Q M and tr(Y G Y*) = ‖M‖²_F.
    let mt = solve_lower(&core.l, &r.transpose())
        .ok_or_else(|| Error::DegenerateInput("singular Cholesky factor".into()))?;
    let frob = compensated_sum(mt.iter().map(|x| x * x));
    let linv = lower_triangular_inverse(&core.l)
        .ok_or_else(|| Error::DegenerateInput("singular Cholesky factor".into()))?;
    // Column i of L⁻¹ is xᵢ with Gᵢᵢ = ‖xᵢ‖² and Y gᵢ = Q M xᵢ.
    let mx = at_b(&mt, &linv);

    let scale = if normalize {
        residual_scales(omega)?
    } else {
        DVector::from_element(m, 1.0)
    };
    let offset = core.shift * n as f64;

    let per_sample = (0..m)
        .map(|i| {
            let x = linv.column(i);
            let g = compensated_dot(x.as_slice(), x.as_slice());
            let mxi = mx.column(i);
            let dropped = compensated_dot(mxi.as_slice(), mxi.as_slice()) / g;
            let residual = scale[i] / g;
            compensated_sum([frob, -dropped, residual, -offset])
        })
        .collect();
    TraceReport::from_samples(per_sample, m)
}

/// Nyström++: half of the budget builds A⟨Ω₁⟩, the other half runs
/// Girard–Hutchinson on the residual A − A⟨Ω₁⟩. Not exchangeable; no error
/// estimate.
pub fn nystrompp<O: LinearOperator + ?Sized>(
    op: &O,
    m: usize,
    distribution: Distribution,
    seed: u64,
) -> Result<TraceReport> {
    if !op.is_psd() {
        return Err(Error::NotPsd);
    }
    check_budget(m, 2, 2, "nystrompp")?;
    check_width(m, m / 2, op.dim(), "nystrompp")?;
    let tm = sample_test_matrix(distribution, op.dim(), m, seed)?;
    nystrompp_with(op, tm.omega())
}

/// Nyström++ on an explicit test matrix: the first half of the columns
/// builds the approximation, the second half estimates the residual.
pub fn nystrompp_with<O: LinearOperator + ?Sized>(
    op: &O,
    omega: &DMatrix<f64>,
) -> Result<TraceReport> {
    if !op.is_psd() {
        return Err(Error::NotPsd);
    }
    let m = omega.ncols();
    check_budget(m, 2, 2, "nystrompp")?;
    let k = m / 2;
    check_width(m, k, op.dim(), "nystrompp")?;
    let sketch_omega = omega.columns(0, k).into_owned();
    let probe = omega.columns(k, k).into_owned();
    let y = op.apply(&sketch_omega)?;
    let y_probe = op.apply(&probe)?;

    let core = ShiftedCore::new(&sketch_omega, &y)?;
    let bt = solve_lower(&core.l, &core.y.transpose())
        .ok_or_else(|| Error::DegenerateInput("singular Cholesky factor".into()))?;
    let low_rank = compensated_sum(bt.iter().map(|x| x * x));

    let c = at_b(&core.y, &probe);
    let x = solve_lower(&core.l, &c)
        .ok_or_else(|| Error::DegenerateInput("singular Cholesky factor".into()))?;
    let residuals: Vec<f64> = (0..k)
        .map(|j| {
            let w = probe.column(j);
            let shifted_quad = compensated_dot(w.as_slice(), y_probe.column(j).as_slice())
                + core.shift * compensated_dot(w.as_slice(), w.as_slice());
            let xj = x.column(j);
            shifted_quad - compensated_dot(xj.as_slice(), xj.as_slice())
        })
        .collect();

    let estimate = compensated_sum([low_rank, mean(&residuals), -core.shift * op.dim() as f64]);
    Ok(TraceReport::plain(estimate, m))
}

/// Shifted sketch Y + νΩ and the Cholesky factor of its symmetrized core
/// matrix Ω*(Y + νΩ).
struct ShiftedCore {
    shift: f64,
    y: DMatrix<f64>,
    l: DMatrix<f64>,
}

impl ShiftedCore {
    fn new(omega: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<Self> {
        let n = omega.nrows() as f64;
        let norm = y.norm();
        let shift = if norm > 0.0 {
            n.sqrt() * f64::EPSILON * norm
        } else {
            f64::EPSILON
        };
        let y_shifted = y + omega * shift;
        let mut h = at_b(omega, &y_shifted);
        let k = h.nrows();
        for j in 0..k {
            for i in (j + 1)..k {
                let v = 0.5 * (h[(i, j)] + h[(j, i)]);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let chol = h.cholesky().ok_or_else(|| {
            Error::DegenerateInput("Nyström core matrix is numerically indefinite".into())
        })?;
        Ok(Self {
            shift,
            y: y_shifted,
            l: chol.unpack(),
        })
    }
}

/// (N − (m − 1)) / ‖μᵢ‖² with μᵢ the component of ωᵢ orthogonal to Ω₋ᵢ.
/// Scaling the residual quadratic form by this factor evaluates it at the
/// normalized vector νᵢ = √(N − m + 1)·μᵢ/‖μᵢ‖, because A − A⟨Ω₋ᵢ⟩
/// annihilates the span of Ω₋ᵢ.
///
/// ‖μᵢ‖² = 1 / [(Ω*Ω)⁻¹]ᵢᵢ, read off the inverse Cholesky factor of the
/// Gram matrix. Test matrices are well conditioned, so squaring the
/// condition number here is harmless.
fn residual_scales(omega: &DMatrix<f64>) -> Result<DVector<f64>> {
    let (n, m) = omega.shape();
    let degenerate = || Error::DegenerateSketch("test vectors are linearly dependent".into());
    let c = at_b(omega, omega).cholesky().ok_or_else(degenerate)?.unpack();
    let cinv = lower_triangular_inverse(&c).ok_or_else(degenerate)?;
    let deficit = (n - (m - 1)) as f64;
    Ok(DVector::from_fn(m, |i, _| {
        let col = cinv.column(i);
        deficit * compensated_dot(col.as_slice(), col.as_slice())
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{DenseOperator, IdentityOperator};

    #[test]
    fn requires_psd_hint() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let op = DenseOperator::new(a).unwrap();
        assert!(matches!(
            xnystrace(&op, 2, Distribution::Gaussian, false, 0),
            Err(Error::NotPsd)
        ));
        assert!(matches!(
            nystrompp(&op, 2, Distribution::Gaussian, 0),
            Err(Error::NotPsd)
        ));
    }

    #[test]
    fn identity_with_normalization_is_exact() {
        // The residual of a multiple of the identity is flat, so normalized
        // residual vectors recover it exactly.
        let op = IdentityOperator::new(30);
        let rep = xnystrace(&op, 6, Distribution::Gaussian, true, 3).unwrap();
        assert!((rep.estimate - 30.0).abs() < 1e-9, "{}", rep.estimate);
        assert!(rep.err_est.unwrap() < 1e-9);
    }

    #[test]
    fn budgets_are_exact() {
        let op = IdentityOperator::new(30);
        xnystrace(&op, 7, Distribution::Signs, false, 1).unwrap();
        assert_eq!(op.counter().forward(), 7);
        op.counter().reset();
        let rep = nystrompp(&op, 8, Distribution::Signs, 1).unwrap();
        assert_eq!(rep.matvecs_used, 8);
        assert_eq!(op.counter().forward(), 8);
        assert!(nystrompp(&op, 7, Distribution::Signs, 1).is_err());
    }
}
