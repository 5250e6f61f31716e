//! Synthetic test matrices A(λ) = U diag(λ) U* with a Haar-random eigenbasis,
//! and functions of symmetric matrices through a dense eigendecomposition.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{LinearOperator, MatvecCounter};
use crate::error::{Error, Result};
use crate::linalg::{self, compensated_sum};

/// The four eigenvalue profiles of the synthetic benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    /// Linear ramp from 3 down to 1.
    Flat,
    /// λᵢ = i⁻².
    Poly,
    /// λᵢ = αⁱ for i = 0, …, N−1.
    Exp,
    /// A block of ones followed by a small constant tail.
    Step,
}

impl SpectrumKind {
    pub const ALL: [SpectrumKind; 4] = [Self::Flat, Self::Poly, Self::Exp, Self::Step];

    pub fn name(self) -> &'static str {
        match self {
            Self::Flat => "flat",
            Self::Poly => "poly",
            Self::Exp => "exp",
            Self::Step => "step",
        }
    }
}

impl fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpectrumKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "flat" => Ok(Self::Flat),
            "poly" => Ok(Self::Poly),
            "exp" => Ok(Self::Exp),
            "step" => Ok(Self::Step),
            other => Err(Error::InvalidArgument(format!("unknown spectrum `{other}`"))),
        }
    }
}

/// Eigenvalue profile plus its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub kind: SpectrumKind,
    pub dim: usize,
    /// Decay rate α of the `exp` profile.
    pub exp_rate: f64,
    /// Exponent p of the `poly` profile, λᵢ = i^(−p).
    pub poly_exponent: f64,
    /// Endpoints of the `flat` ramp.
    pub flat_range: (f64, f64),
    /// Number of leading eigenvalues of the `step` profile.
    pub step_count: usize,
    pub step_height: f64,
    pub step_tail: f64,
}

impl SpectrumSpec {
    /// The benchmark parameters: α = 0.7, p = 2, ramp 3 → 1, step of 50 ones
    /// with a 10⁻³ tail.
    pub fn new(kind: SpectrumKind, dim: usize) -> Self {
        Self {
            kind,
            dim,
            exp_rate: 0.7,
            poly_exponent: 2.0,
            flat_range: (3.0, 1.0),
            step_count: 50,
            step_height: 1.0,
            step_tail: 1e-3,
        }
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        let n = self.dim;
        match self.kind {
            SpectrumKind::Flat => {
                let (hi, lo) = self.flat_range;
                DVector::from_fn(n, |i, _| {
                    if n == 1 {
                        hi
                    } else {
                        hi - (hi - lo) * i as f64 / (n - 1) as f64
                    }
                })
            }
            SpectrumKind::Poly => {
                DVector::from_fn(n, |i, _| ((i + 1) as f64).powf(-self.poly_exponent))
            }
            SpectrumKind::Exp => DVector::from_fn(n, |i, _| self.exp_rate.powi(i as i32)),
            SpectrumKind::Step => DVector::from_fn(n, |i, _| {
                if i < self.step_count {
                    self.step_height
                } else {
                    self.step_tail
                }
            }),
        }
    }
}

/// A symmetric matrix stored as eigenbasis, eigenvalues and its dense
/// assembly U diag(λ) U*. Exact trace and diagonal are cached.
#[derive(Clone, Debug)]
pub struct DenseSpectralOperator {
    basis: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    matrix: DMatrix<f64>,
    trace: f64,
    diag: DVector<f64>,
    psd: bool,
    counter: MatvecCounter,
}

impl DenseSpectralOperator {
    /// Assembles U diag(λ) U*. `basis` must be square with one column per
    /// eigenvalue; orthogonality is the caller's responsibility.
    pub fn from_parts(basis: DMatrix<f64>, eigenvalues: DVector<f64>) -> Result<Self> {
        let n = eigenvalues.len();
        if n == 0 || basis.shape() != (n, n) {
            return Err(Error::InvalidArgument(format!(
                "basis must be {n}x{n}, got {}x{}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        if !eigenvalues.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut scaled = basis.clone();
        for (mut col, &lambda) in scaled.column_iter_mut().zip(eigenvalues.iter()) {
            col *= lambda;
        }
        let mut matrix = &scaled * basis.transpose();
        // Exact symmetry: apply and apply_adjoint then agree bitwise.
        for j in 0..n {
            for i in (j + 1)..n {
                let v = 0.5 * (matrix[(i, j)] + matrix[(j, i)]);
                matrix[(i, j)] = v;
                matrix[(j, i)] = v;
            }
        }
        let trace = compensated_sum(eigenvalues.iter().copied());
        let diag = DVector::from_fn(n, |i, _| {
            compensated_sum((0..n).map(|j| basis[(i, j)] * basis[(i, j)] * eigenvalues[j]))
        });
        let psd = eigenvalues.iter().all(|&x| x >= 0.0);
        Ok(Self {
            basis,
            eigenvalues,
            matrix,
            trace,
            diag,
            psd,
            counter: MatvecCounter::new(),
        })
    }

    /// Eigendecomposition of a dense symmetric matrix.
    pub fn from_symmetric(matrix: &DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || !linalg::is_symmetric(matrix, 1e-12) {
            return Err(Error::NotSymmetric);
        }
        linalg::ensure_finite(matrix)?;
        let eig = matrix.clone().symmetric_eigen();
        Self::from_parts(eig.eigenvectors, eig.eigenvalues)
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.eigenvalues.iter().map(|x| x.abs()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

impl LinearOperator for DenseSpectralOperator {
    fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
    fn is_symmetric(&self) -> bool {
        true
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
        &self.matrix * x
    }
    fn cached_trace(&self) -> Option<f64> {
        Some(self.trace)
    }
    fn cached_diag(&self) -> Option<DVector<f64>> {
        Some(self.diag.clone())
    }
}

/// Haar-distributed N×N orthogonal matrix: QR of a standard normal matrix
/// with each column of Q multiplied by the sign of the matching diagonal
/// entry of R.
pub fn haar_orthogonal<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let (mut q, r) = g.qr().unpack();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        if r[(j, j)] < 0.0 {
            col.neg_mut();
        }
    }
    q
}

/// A(λ) = U diag(λ) U* with Haar U drawn from a ChaCha8 stream keyed by `seed`.
pub fn make_synthetic_operator(spec: &SpectrumSpec, seed: u64) -> Result<DenseSpectralOperator> {
    if spec.dim == 0 {
        return Err(Error::InvalidArgument("spectrum dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = haar_orthogonal(spec.dim, &mut rng);
    DenseSpectralOperator::from_parts(u, spec.eigenvalues())
}

/// f(A) = U f(Λ) U* for a spectrally represented symmetric A.
pub fn make_function_operator<F: Fn(f64) -> f64>(
    base: &DenseSpectralOperator,
    f: F,
) -> Result<DenseSpectralOperator> {
    let values = base.eigenvalues.map(f);
    DenseSpectralOperator::from_parts(base.basis.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    #[test]
    fn exp_profile() {
        let l = SpectrumSpec::new(SpectrumKind::Exp, 4).eigenvalues();
        let expected = [1.0, 0.7, 0.49, 0.343];
        for (a, b) in l.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((l.sum() - 2.533).abs() < 1e-12);
    }

    #[test]
    fn step_profile() {
        let l = SpectrumSpec::new(SpectrumKind::Step, 60).eigenvalues();
        assert!(l.iter().take(50).all(|&x| x == 1.0));
        assert!(l.iter().skip(50).all(|&x| x == 1e-3));
        assert!((compensated_sum(l.iter().copied()) - 50.01).abs() < 1e-12);
    }

    #[test]
    fn flat_and_poly_profiles() {
        let l = SpectrumSpec::new(SpectrumKind::Flat, 2).eigenvalues();
        assert_eq!(l.as_slice(), &[3.0, 1.0]);
        let l = SpectrumSpec::new(SpectrumKind::Flat, 1).eigenvalues();
        assert_eq!(l.as_slice(), &[3.0]);
        let l = SpectrumSpec::new(SpectrumKind::Poly, 3).eigenvalues();
        assert_eq!(l.as_slice(), &[1.0, 0.25, 1.0 / 9.0]);
    }

    #[test]
    fn all_profiles_strictly_positive() {
        for kind in SpectrumKind::ALL {
            let l = SpectrumSpec::new(kind, 200).eigenvalues();
            assert_eq!(l.len(), 200);
            assert!(l.iter().all(|&x| x > 0.0), "{kind}");
        }
    }

    #[test]
    fn exp_trace_is_geometric_series() {
        let l = SpectrumSpec::new(SpectrumKind::Exp, 1000).eigenvalues();
        let t = compensated_sum(l.iter().copied());
        let closed = (1.0 - 0.7f64.powi(1000)) / 0.3;
        assert!((t - closed).abs() < 1e-14 * closed);
        assert!((t - 10.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn haar_basis_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = haar_orthogonal(40, &mut rng);
        let err = max_abs_diff(&(u.transpose() * &u), &DMatrix::identity(40, 40));
        assert!(err <= 1e-12, "{err}");
    }

    #[test]
    fn unit_spectrum_gives_identity() {
        let mut spec = SpectrumSpec::new(SpectrumKind::Step, 12);
        spec.step_tail = 1.0;
        let op = make_synthetic_operator(&spec, 9).unwrap();
        let x = DMatrix::from_fn(12, 2, |i, j| (i as f64) - 2.0 * j as f64);
        assert!(max_abs_diff(&op.apply(&x).unwrap(), &x) < 1e-12);
    }

    #[test]
    fn synthetic_operator_is_deterministic() {
        let spec = SpectrumSpec::new(SpectrumKind::Poly, 30);
        let a = make_synthetic_operator(&spec, 17).unwrap();
        let b = make_synthetic_operator(&spec, 17).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert!((a.cached_trace().unwrap() - spec.eigenvalues().sum()).abs() < 1e-14);
    }

    #[test]
    fn function_of_diagonal_matrix() {
        let base = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 2f64.ln()]));
        let spectral = DenseSpectralOperator::from_symmetric(&base).unwrap();
        let f = make_function_operator(&spectral, f64::exp).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        assert!(max_abs_diff(f.matrix(), &expected) < 1e-14);
        assert!(f.is_psd());
    }

    #[test]
    fn identity_function_reproduces_base() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.5, -1.0, 3.0, 0.0, 0.5, 0.0, 1.0]);
        let spectral = DenseSpectralOperator::from_symmetric(&a).unwrap();
        let f = make_function_operator(&spectral, |x| x).unwrap();
        assert!(max_abs_diff(f.matrix(), &a) < 1e-13);
    }

    #[test]
    fn nonsymmetric_base_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(
            DenseSpectralOperator::from_symmetric(&a),
            Err(Error::NotSymmetric)
        ));
    }
}
