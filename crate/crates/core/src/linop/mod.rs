//! Matrix-free operators.
//!
//! Every estimator in this crate touches the input matrix only through
//! [`LinearOperator::apply`] and [`LinearOperator::apply_adjoint`], which act
//! on N×k blocks and bump an atomic matvec counter by `k`. Concrete operators
//! provide the raw products ([`LinearOperator::multiply`] and
//! [`LinearOperator::multiply_adjoint`]); the checked, counted entry points are
//! provided methods.
//!
//! [`exact_trace`] and [`exact_diag`] are ground-truth oracles for measuring
//! estimator error. They use cached values when an operator has them and fall
//! back to densification (applying the operator to every basis vector) for
//! small dimensions.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, compensated_sum};

mod mtx;
mod spectrum;
mod tfim;

pub use mtx::{parse_matrix_market, read_matrix_market};
pub use spectrum::{
    haar_orthogonal, make_function_operator, make_synthetic_operator, DenseSpectralOperator,
    SpectrumKind, SpectrumSpec,
};
pub use tfim::{make_tfim, TfimHamiltonian, TFIM_MAX_SITES, TFIM_MIN_SITES};

/// Largest dimension for which operators are densified on demand.
pub const DENSIFY_LIMIT: usize = 4096;

/// Instrumentation shared by all operators. Updated atomically so an
/// operator can be applied from several worker threads at once.
#[derive(Debug, Default)]
pub struct MatvecCounter {
    forward: AtomicUsize,
    adjoint: AtomicUsize,
}

impl MatvecCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward(&self) -> usize {
        self.forward.load(Ordering::Relaxed)
    }

    pub fn adjoint(&self) -> usize {
        self.adjoint.load(Ordering::Relaxed)
    }

    pub fn total(&self) -> usize {
        self.forward() + self.adjoint()
    }

    pub fn reset(&self) {
        self.forward.store(0, Ordering::Relaxed);
        self.adjoint.store(0, Ordering::Relaxed);
    }

    fn add_forward(&self, k: usize) {
        self.forward.fetch_add(k, Ordering::Relaxed);
    }

    fn add_adjoint(&self, k: usize) {
        self.adjoint.fetch_add(k, Ordering::Relaxed);
    }
}

impl Clone for MatvecCounter {
    /// Clones start with fresh counts.
    fn clone(&self) -> Self {
        Self::default()
    }
}

/// An implicit square matrix A ∈ ℝ^{N×N}.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// A = A*. Estimators that need adjoint products may use `multiply`
    /// instead when this is set.
    fn is_symmetric(&self) -> bool;

    /// Positive semidefinite. Trusted, never verified.
    fn is_psd(&self) -> bool {
        false
    }

    fn counter(&self) -> &MatvecCounter;

    /// Raw product A·X. `x` always has `dim()` rows.
    fn multiply(&self, x: &DMatrix<f64>) -> DMatrix<f64>;

    /// Raw product A*·X.
    fn multiply_adjoint(&self, x: &DMatrix<f64>) -> DMatrix<f64>;

    fn cached_trace(&self) -> Option<f64> {
        None
    }

    fn cached_diag(&self) -> Option<DVector<f64>> {
        None
    }

    /// Checked, counted A·X.
    fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_block(self.dim(), x)?;
        self.counter().add_forward(x.ncols());
        Ok(self.multiply(x))
    }

    /// Checked, counted A*·X.
    fn apply_adjoint(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_block(self.dim(), x)?;
        self.counter().add_adjoint(x.ncols());
        Ok(self.multiply_adjoint(x))
    }
}

fn check_block(dim: usize, x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: x.nrows(),
        });
    }
    linalg::ensure_finite(x)
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
    fn is_psd(&self) -> bool {
        (**self).is_psd()
    }
    fn counter(&self) -> &MatvecCounter {
        (**self).counter()
    }
    fn multiply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        (**self).multiply(x)
    }
    fn multiply_adjoint(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        (**self).multiply_adjoint(x)
    }
    fn cached_trace(&self) -> Option<f64> {
        (**self).cached_trace()
    }
    fn cached_diag(&self) -> Option<DVector<f64>> {
        (**self).cached_diag()
    }
}

/// The N×N identity.
#[derive(Clone, Debug)]
pub struct IdentityOperator {
    dim: usize,
    counter: MatvecCounter,
}

impl IdentityOperator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            counter: MatvecCounter::new(),
        }
    }
}

impl LinearOperator for IdentityOperator {
    fn dim(&self) -> usize {
        self.dim
    }
    fn is_symmetric(&self) -> bool {
        true
    }
    fn is_psd(&self) -> bool {
        true
    }
    fn counter(&self) -> &MatvecCounter {
        &self.counter
    }
    fn multiply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x.clone()
    }
    fn multiply_adjoint(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x.clone()
    }
    fn cached_trace(&self) -> Option<f64> {
        Some(self.dim as f64)
    }
    fn cached_diag(&self) -> Option<DVector<f64>> {
        Some(DVector::from_element(self.dim, 1.0))
    }
}

/// An explicitly stored square matrix.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    matrix: DMatrix<f64>,
    symmetric: bool,
    psd: bool,
    counter: MatvecCounter,
}

impl DenseOperator {
    /// Wraps a square matrix. The symmetry hint is set when the matrix is
    /// exactly symmetric; the psd hint is off until [`Self::with_psd_hint`].
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidArgument(format!(
                "operator matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.nrows() == 0 {
            return Err(Error::InvalidArgument("operator dimension must be positive".into()));
        }
        linalg::ensure_finite(&matrix)?;
        let symmetric = linalg::is_symmetric(&matrix, 0.0);
        Ok(Self {
            matrix,
            symmetric,
            psd: false,
            counter: MatvecCounter::new(),
        })
    }

    /// Declares the matrix psd. Ignored unless the matrix is symmetric.
    pub fn with_psd_hint(mut self, psd: bool) -> Self {
        self.psd = psd && self.symmetric;
        self
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
    fn is_psd(&self) -> bool {
        self.psd
    }
    fn counter(&self) -> &MatvecCounter {
        &self.counter
    }
    fn multiply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.matrix * x
    }
    fn multiply_adjoint(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        if self.symmetric {
            &self.matrix * x
        } else {
            crate::linalg::at_b(&self.matrix, x)
        }
    }
    fn cached_trace(&self) -> Option<f64> {
        Some(compensated_sum(self.matrix.diagonal().iter().copied()))
    }
    fn cached_diag(&self) -> Option<DVector<f64>> {
        Some(self.matrix.diagonal())
    }
}

/// Dense copy of an operator, built by applying it to the identity. Does not
/// touch the matvec counters.
pub fn densify<O: LinearOperator + ?Sized>(op: &O) -> Result<DMatrix<f64>> {
    let n = op.dim();
    if n > DENSIFY_LIMIT {
        return Err(Error::TooLarge {
            dim: n,
            limit: DENSIFY_LIMIT,
        });
    }
    Ok(op.multiply(&DMatrix::identity(n, n)))
}

/// Ground-truth trace.
pub fn exact_trace<O: LinearOperator + ?Sized>(op: &O) -> Result<f64> {
    if let Some(t) = op.cached_trace() {
        return Ok(t);
    }
    let dense = densify(op)?;
    Ok(compensated_sum(dense.diagonal().iter().copied()))
}

/// Ground-truth diagonal.
pub fn exact_diag<O: LinearOperator + ?Sized>(op: &O) -> Result<DVector<f64>> {
    if let Some(d) = op.cached_diag() {
        return Ok(d);
    }
    Ok(densify(op)?.diagonal())
}
