//! Seeded random test matrices.
//!
//! Column j of a test matrix with seed `s` is drawn from the ChaCha8 stream
//! keyed by `ChaCha8Rng::seed_from_u64(s)` with stream id `j`. Columns are
//! therefore independent of how many columns are requested, which gives the
//! prefix property used by the adaptive driver: extending a test matrix is a
//! pure continuation and never changes existing columns.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Isotropic test-vector distributions, E[ωω*] = I.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    /// Uniform random signs.
    Signs,
    /// Standard normal entries.
    Gaussian,
    /// Uniform on the sphere of radius √N.
    Sphere,
}

impl Distribution {
    pub fn name(self) -> &'static str {
        match self {
            Self::Signs => "signs",
            Self::Gaussian => "gaussian",
            Self::Sphere => "sphere",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "signs" | "rademacher" => Ok(Self::Signs),
            "gaussian" | "normal" => Ok(Self::Gaussian),
            "sphere" => Ok(Self::Sphere),
            other => Err(Error::InvalidArgument(format!("unknown distribution `{other}`"))),
        }
    }
}

/// N×k test matrix Ω together with the distribution and seed that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct TestMatrix {
    omega: DMatrix<f64>,
    distribution: Distribution,
    seed: u64,
}

impl TestMatrix {
    /// Wraps an explicit matrix, for callers that construct Ω by hand.
    pub fn from_omega(omega: DMatrix<f64>, distribution: Distribution, seed: u64) -> Self {
        Self {
            omega,
            distribution,
            seed,
        }
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn into_omega(self) -> DMatrix<f64> {
        self.omega
    }

    pub fn distribution(&self) -> Distribution {
        self.distribution
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.omega.ncols()
    }

    /// Appends `extra` columns continuing the same stream.
    pub fn extend(&self, extra: usize) -> TestMatrix {
        let n = self.dim();
        let k = self.ncols();
        let mut omega = self.omega.clone().resize_horizontally(k + extra, 0.0);
        for j in k..k + extra {
            fill_column(self.distribution, self.seed, j, omega.column_mut(j).as_mut_slice());
        }
        debug_assert_eq!(omega.nrows(), n);
        TestMatrix {
            omega,
            distribution: self.distribution,
            seed: self.seed,
        }
    }
}

/// Draws an N×k test matrix. Deterministic in `(distribution, n, k, seed)`.
pub fn sample_test_matrix(
    distribution: Distribution,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<TestMatrix> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidArgument(format!(
            "test matrix needs N >= 1 and k >= 1, got N = {n}, k = {k}"
        )));
    }
    let mut omega = DMatrix::zeros(n, k);
    for (j, mut col) in omega.column_iter_mut().enumerate() {
        fill_column(distribution, seed, j, col.as_mut_slice());
    }
    Ok(TestMatrix {
        omega,
        distribution,
        seed,
    })
}

pub fn extend_test_matrix(tm: &TestMatrix, extra_k: usize) -> TestMatrix {
    tm.extend(extra_k)
}

fn column_rng(seed: u64, column: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(column as u64);
    rng
}

fn fill_column(distribution: Distribution, seed: u64, column: usize, out: &mut [f64]) {
    let mut rng = column_rng(seed, column);
    match distribution {
        Distribution::Signs => {
            for x in out.iter_mut() {
                *x = if rng.random::<bool>() { 1.0 } else { -1.0 };
            }
        }
        Distribution::Gaussian => {
            for x in out.iter_mut() {
                *x = StandardNormal.sample(&mut rng);
            }
        }
        Distribution::Sphere => {
            for x in out.iter_mut() {
                *x = StandardNormal.sample(&mut rng);
            }
            let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
            let scale = (out.len() as f64).sqrt() / norm;
            for x in out.iter_mut() {
                *x *= scale;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signs_are_plus_minus_one() {
        let tm = sample_test_matrix(Distribution::Signs, 3, 2, 1).unwrap();
        assert_eq!(tm.omega().shape(), (3, 2));
        assert!(tm.omega().iter().all(|&x| x == 1.0 || x == -1.0));
    }

    #[test]
    fn sphere_columns_have_norm_sqrt_n() {
        let tm = sample_test_matrix(Distribution::Sphere, 4, 5, 2).unwrap();
        for c in tm.omega().column_iter() {
            assert!((c.norm() - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        for d in [Distribution::Signs, Distribution::Gaussian, Distribution::Sphere] {
            let a = sample_test_matrix(d, 10, 3, 42).unwrap();
            let b = sample_test_matrix(d, 10, 3, 42).unwrap();
            let c = sample_test_matrix(d, 10, 3, 43).unwrap();
            assert_eq!(a, b);
            assert_ne!(a.omega(), c.omega());
        }
    }

    #[test]
    fn extension_is_a_prefix_continuation() {
        let tm = sample_test_matrix(Distribution::Signs, 3, 2, 5).unwrap();
        assert_eq!(tm.extend(0), tm);
        let ext = extend_test_matrix(&tm, 2);
        assert_eq!(ext.ncols(), 4);
        assert_eq!(ext.omega().columns(0, 2), tm.omega().columns(0, 2));

        let g = sample_test_matrix(Distribution::Gaussian, 7, 3, 11).unwrap();
        let two_step = g.extend(3).extend(6);
        let one_step = g.extend(9);
        let fresh = sample_test_matrix(Distribution::Gaussian, 7, 12, 11).unwrap();
        assert_eq!(two_step, one_step);
        assert_eq!(one_step, fresh);
    }

    #[test]
    fn rejects_empty_shapes_and_unknown_names() {
        assert!(sample_test_matrix(Distribution::Gaussian, 0, 1, 0).is_err());
        assert!(sample_test_matrix(Distribution::Gaussian, 1, 0, 0).is_err());
        assert!("uniform".parse::<Distribution>().is_err());
        assert_eq!("Gaussian".parse::<Distribution>().unwrap(), Distribution::Gaussian);
    }

    #[test]
    fn gaussian_second_moment() {
        // Mean of ω₁² over 10⁴ seeds; Var[ω₁²] = 2.
        let draws = 10_000;
        let mean = (0..draws)
            .map(|s| {
                let tm = sample_test_matrix(Distribution::Gaussian, 100, 1, s).unwrap();
                tm.omega()[(0, 0)].powi(2)
            })
            .sum::<f64>()
            / draws as f64;
        let sigma = (2.0 / draws as f64).sqrt();
        assert!((mean - 1.0).abs() < 5.0 * sigma, "{mean}");
    }
}
