//! Small dense kernels shared by the estimators and oracles.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

pub fn compensated_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Thin orthogonal-triangular factorization `Y = QR` with `Q` of size N×k.
/// Requires `k <= N`.
pub fn thin_qr(y: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    debug_assert!(y.ncols() <= y.nrows());
    let qr = y.clone().qr();
    let (q, r) = qr.unpack();
    (q, r)
}

/// Triangular factor of a QR factorization of `y`, without forming `Q`.
pub fn qr_r(y: &DMatrix<f64>) -> DMatrix<f64> {
    debug_assert!(y.ncols() <= y.nrows());
    y.clone().qr().r()
}

/// `a* b`. Routed through an explicit transpose so that the product runs on
/// the blocked matrix-multiply kernel.
pub fn at_b(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.transpose() * b
}

const TRIANGULAR_BLOCK: usize = 64;

/// Solves `L X = B` for lower-triangular `L` by recursive 2×2 blocking, so
/// most of the work is matrix multiplication. `None` if a pivot is zero.
pub fn solve_lower(l: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let k = l.nrows();
    debug_assert_eq!(b.nrows(), k);
    if k <= TRIANGULAR_BLOCK {
        return l.solve_lower_triangular(b);
    }
    let h = k / 2;
    let x1 = solve_lower(&l.view((0, 0), (h, h)).into_owned(), &b.rows(0, h).into_owned())?;
    let rhs2 = b.rows(h, k - h) - l.view((h, 0), (k - h, h)) * &x1;
    let x2 = solve_lower(&l.view((h, h), (k - h, k - h)).into_owned(), &rhs2)?;
    let mut x = DMatrix::zeros(k, b.ncols());
    x.rows_mut(0, h).copy_from(&x1);
    x.rows_mut(h, k - h).copy_from(&x2);
    Some(x)
}

/// Orthonormal basis for the range of `y` (the `Q` factor of a thin QR).
pub fn orth(y: &DMatrix<f64>) -> DMatrix<f64> {
    thin_qr(y).0
}

/// Copy of `m` with column `i` removed.
pub fn drop_column(m: &DMatrix<f64>, i: usize) -> DMatrix<f64> {
    m.clone().remove_column(i)
}

/// Euclidean norms of all columns.
pub fn column_norms_sq(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(
        m.ncols(),
        m.column_iter()
            .map(|c| compensated_dot(c.as_slice(), c.as_slice())),
    )
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Symmetry test with tolerance relative to the largest entry.
pub fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > rel_tol * scale {
                return false;
            }
        }
    }
    true
}

pub(crate) fn ensure_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Inverse of a lower-triangular matrix by forward substitution.
pub(crate) fn lower_triangular_inverse(l: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    solve_lower(l, &DMatrix::identity(l.nrows(), l.ncols()))
}
