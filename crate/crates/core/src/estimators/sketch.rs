//! Range sketch shared by XTrace and XDiag, and the leave-one-out downdate.
//!
//! With AΩ = QR, removing column i of AΩ changes the projector onto the
//! sketch range by a rank-one term:
//!
//!   Q₍ᵢ₎Q₍ᵢ₎* = Q (I − sᵢsᵢ*) Q*,   R₋ᵢ* sᵢ = 0,  ‖sᵢ‖ = 1.
//!
//! All sᵢ come at once from S = (R*)⁻¹ D, where D normalizes the columns.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, at_b, solve_lower, thin_qr};

/// Columns sᵢ of S = (R*)⁻¹D with Dᵢᵢ = 1/‖column i of (R*)⁻¹‖ > 0.
///
/// Fails with a degenerate-sketch error when R has an exactly zero diagonal
/// entry or non-finite entries.
pub fn nullspace_unit_vectors(r: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if !r.is_square() {
        return Err(Error::InvalidArgument(format!(
            "triangular factor must be square, got {}x{}",
            r.nrows(),
            r.ncols()
        )));
    }
    if !r.iter().all(|x| x.is_finite()) {
        return Err(Error::DegenerateSketch("triangular factor is not finite".into()));
    }
    if let Some(j) = (0..r.nrows()).find(|&j| r[(j, j)] == 0.0) {
        return Err(Error::DegenerateSketch(format!(
            "triangular factor is singular (zero pivot at {j})"
        )));
    }
    let k = r.nrows();
    let rt = r.transpose();
    let mut s = solve_lower(&rt, &DMatrix::identity(k, k))
        .ok_or_else(|| Error::DegenerateSketch("triangular solve failed".into()))?;
    let mut d = DVector::zeros(k);
    for (i, mut col) in s.column_iter_mut().enumerate() {
        let norm = col.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::DegenerateSketch(format!(
                "leave-one-out vector {i} could not be normalized"
            )));
        }
        col /= norm;
        d[i] = 1.0 / norm;
    }
    Ok((s, d))
}

/// Like [`nullspace_unit_vectors`], but exactly zero pivots (an exactly
/// rank-deficient sketch, e.g. A = 0) are replaced by a floor of
/// ε·max|Rⱼⱼ|. Any unit vector in the null space of R* then yields a
/// projector that still contains the range of AΩ, so the estimators stay
/// exact in the low-rank regime.
pub(crate) fn guarded_nullspace_vectors(r: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let k = r.nrows();
    let max_pivot = (0..k).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if (0..k).all(|j| r[(j, j)] != 0.0) {
        return nullspace_unit_vectors(r);
    }
    let floor = if max_pivot > 0.0 {
        f64::EPSILON * max_pivot
    } else {
        1.0
    };
    let mut guarded = r.clone();
    for j in 0..k {
        if guarded[(j, j)] == 0.0 {
            guarded[(j, j)] = floor;
        }
    }
    nullspace_unit_vectors(&guarded)
}

/// Shared factorization data for the range-sketch estimators.
#[derive(Clone, Debug)]
pub struct SketchState {
    /// Test matrix Ω (N×k).
    pub omega: DMatrix<f64>,
    /// Y = AΩ.
    pub y: DMatrix<f64>,
    /// Orthonormal factor of Y.
    pub q: DMatrix<f64>,
    /// Triangular factor of Y.
    pub r: DMatrix<f64>,
    /// W = Q*Ω.
    pub w: DMatrix<f64>,
    /// Leave-one-out unit vectors.
    pub s: DMatrix<f64>,
    /// Normalizer of S = (R*)⁻¹D.
    pub d: DVector<f64>,
}

impl SketchState {
    /// Factors a precomputed Y = AΩ. Needs k ≤ N.
    pub fn new(omega: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if omega.shape() != y.shape() {
            return Err(Error::InvalidArgument("Ω and AΩ must have the same shape".into()));
        }
        if omega.ncols() > omega.nrows() {
            return Err(Error::InvalidArgument(format!(
                "sketch width {} exceeds dimension {}",
                omega.ncols(),
                omega.nrows()
            )));
        }
        let (q, r) = thin_qr(&y);
        Self::from_factors(omega, y, q, r)
    }

    fn from_factors(
        omega: DMatrix<f64>,
        y: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
    ) -> Result<Self> {
        let w = at_b(&q, &omega);
        let (s, d) = guarded_nullspace_vectors(&r)?;
        Ok(Self {
            omega,
            y,
            q,
            r,
            w,
            s,
            d,
        })
    }

    pub fn width(&self) -> usize {
        self.omega.ncols()
    }

    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    /// Appends new columns (Ω₊, AΩ₊) without disturbing the existing
    /// orthonormal columns: block Gram–Schmidt with one reorthogonalization
    /// pass, then a QR of the projected block. The first k columns of the
    /// new Q are bit-identical to the old Q, so products A·Q computed earlier
    /// stay valid.
    pub fn extended(&self, omega_new: &DMatrix<f64>, y_new: &DMatrix<f64>) -> Result<Self> {
        let (n, k) = self.omega.shape();
        let extra = omega_new.ncols();
        if omega_new.shape() != y_new.shape() || omega_new.nrows() != n {
            return Err(Error::InvalidArgument("extension blocks have the wrong shape".into()));
        }
        if k + extra > n {
            return Err(Error::InvalidArgument(format!(
                "sketch width {} exceeds dimension {n}",
                k + extra
            )));
        }
        if extra == 0 {
            return Ok(self.clone());
        }
        let mut coeffs = at_b(&self.q, y_new);
        let mut resid = y_new - &self.q * &coeffs;
        let second = at_b(&self.q, &resid);
        resid -= &self.q * &second;
        coeffs += second;
        let (q_ext, r_ext) = thin_qr(&resid);

        let total = k + extra;
        let mut q = DMatrix::zeros(n, total);
        q.columns_mut(0, k).copy_from(&self.q);
        q.columns_mut(k, extra).copy_from(&q_ext);
        let mut r = DMatrix::zeros(total, total);
        r.view_mut((0, 0), (k, k)).copy_from(&self.r);
        r.view_mut((0, k), (k, extra)).copy_from(&coeffs);
        r.view_mut((k, k), (extra, extra)).copy_from(&r_ext);

        let mut omega = DMatrix::zeros(n, total);
        omega.columns_mut(0, k).copy_from(&self.omega);
        omega.columns_mut(k, extra).copy_from(omega_new);
        let mut y = DMatrix::zeros(n, total);
        y.columns_mut(0, k).copy_from(&self.y);
        y.columns_mut(k, extra).copy_from(y_new);

        Self::from_factors(omega, y, q, r)
    }

    /// Check of the factorization invariants, for tests and diagnostics:
    /// returns (max |Q*Q − I|, max |QR − Y| / max |Y|).
    pub fn factorization_residuals(&self) -> (f64, f64) {
        let k = self.width();
        let orth = linalg::max_abs_diff(&self.q.tr_mul(&self.q), &DMatrix::identity(k, k));
        let scale = self.y.amax().max(f64::MIN_POSITIVE);
        let recon = linalg::max_abs_diff(&(&self.q * &self.r), &self.y) / scale;
        (orth, recon)
    }
}
