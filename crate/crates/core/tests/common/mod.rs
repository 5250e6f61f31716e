#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use xtrace_core::linop::{haar_orthogonal, DenseOperator, DenseSpectralOperator};

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

/// Psd matrix U diag(λ) U* with λ = (r, r−1, …, 1, 0, …, 0).
pub fn low_rank_psd(n: usize, rank: usize, seed: u64) -> DenseSpectralOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = haar_orthogonal(n, &mut rng);
    let eig = DVector::from_fn(n, |i, _| if i < rank { (rank - i) as f64 } else { 0.0 });
    DenseSpectralOperator::from_parts(basis, eig).unwrap()
}

/// Nonsymmetric matrix with decaying singular values and an O(1) trace.
pub fn decaying_nonsymmetric(n: usize, seed: u64) -> DenseOperator {
    let g = gaussian_matrix(n, n, seed);
    let scale = DVector::from_fn(n, |i, _| 0.8f64.powi(i as i32));
    let a = DMatrix::from_fn(n, n, |i, j| scale[i] * scale[j] * g[(i, j)]) + DMatrix::identity(n, n) * 0.01;
    DenseOperator::new(a).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn max_rel_vec(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}
