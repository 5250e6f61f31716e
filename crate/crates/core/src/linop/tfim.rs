//! Transverse-field Ising chain with periodic boundary conditions,
//!
//!   H = −Σᵢ ZᵢZᵢ₊₁ − h Σᵢ Xᵢ,  Z_{n+1} = Z₁,
//!
//! acting on (ℂ²)^{⊗n} restricted to ℝ^{2ⁿ}. Site i (1-based) is bit n−i of
//! the basis-state index, so site 1 is the most significant bit and the
//! ordering matches the usual Kronecker product convention.

use nalgebra::{DMatrix, DVector};

use super::{LinearOperator, MatvecCounter};
use crate::error::{Error, Result};

pub const TFIM_MIN_SITES: usize = 2;
pub const TFIM_MAX_SITES: usize = 14;

#[derive(Clone, Debug)]
pub struct TfimHamiltonian {
    sites: usize,
    field: f64,
    shift: f64,
    /// Diagonal (ZZ) part per basis state, without the shift.
    coupling: Vec<f64>,
    counter: MatvecCounter,
}

/// Builds H for `n` sites and transverse field `h`, with no shift.
pub fn make_tfim(n: usize, h: f64) -> Result<TfimHamiltonian> {
    TfimHamiltonian::new(n, h)
}

impl TfimHamiltonian {
    pub fn new(sites: usize, field: f64) -> Result<Self> {
        if !(TFIM_MIN_SITES..=TFIM_MAX_SITES).contains(&sites) {
            return Err(Error::InvalidArgument(format!(
                "TFIM site count must be in {TFIM_MIN_SITES}..={TFIM_MAX_SITES}, got {sites}"
            )));
        }
        if !field.is_finite() {
            return Err(Error::NonFinite);
        }
        let dim = 1usize << sites;
        let coupling = (0..dim)
            .map(|state| {
                let mut e = 0.0;
                for i in 0..sites {
                    let j = (i + 1) % sites;
                    let zi = 1 - 2 * ((state >> i) & 1) as i32;
                    let zj = 1 - 2 * ((state >> j) & 1) as i32;
                    e -= (zi * zj) as f64;
                }
                e
            })
            .collect();
        Ok(Self {
            sites,
            field,
            shift: 0.0,
            coupling,
            counter: MatvecCounter::new(),
        })
    }

    /// H + b·I.
    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    /// b = (1 + |h|)·n, the smallest shift of this form making H + bI psd.
    pub fn psd_shift(&self) -> f64 {
        (1.0 + self.field.abs()) * self.sites as f64
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn field(&self) -> f64 {
        self.field
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    fn apply_column(&self, x: &[f64], y: &mut [f64]) {
        for (state, out) in y.iter_mut().enumerate() {
            let mut flips = 0.0;
            for i in 0..self.sites {
                flips += x[state ^ (1 << i)];
            }
            *out = (self.coupling[state] + self.shift) * x[state] - self.field * flips;
        }
    }
}

impl LinearOperator for TfimHamiltonian {
    fn dim(&self) -> usize {
        1 << self.sites
    }
    fn is_symmetric(&self) -> bool {
        true
    }
    fn is_psd(&self) -> bool {
        self.shift >= self.psd_shift()
    }
    fn counter(&self) -> &MatvecCounter {
        &self.counter
    }
    fn multiply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = DMatrix::zeros(x.nrows(), x.ncols());
        for (xc, mut yc) in x.column_iter().zip(y.column_iter_mut()) {
            self.apply_column(xc.as_slice(), yc.as_mut_slice());
        }
        y
    }
    fn multiply_adjoint(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.multiply(x)
    }
    fn cached_trace(&self) -> Option<f64> {
        // Pauli strings are traceless.
        Some(self.shift * self.dim() as f64)
    }
    fn cached_diag(&self) -> Option<DVector<f64>> {
        Some(DVector::from_iterator(
            self.dim(),
            self.coupling.iter().map(|c| c + self.shift),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{densify, DenseSpectralOperator};

    #[test]
    fn two_site_zero_field_spectrum() {
        let h = make_tfim(2, 0.0).unwrap();
        let dense = densify(&h).unwrap();
        let mut eig: Vec<f64> = DenseSpectralOperator::from_symmetric(&dense)
            .unwrap()
            .eigenvalues()
            .iter()
            .copied()
            .collect();
        eig.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip([-2.0, -2.0, 2.0, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn traceless_for_any_field() {
        for (n, h) in [(3, 0.3), (5, 2.0), (8, 10.0)] {
            let op = make_tfim(n, h).unwrap();
            let d = densify(&op).unwrap();
            assert!(d.trace().abs() < 1e-12);
            assert_eq!(op.cached_trace(), Some(0.0));
        }
    }

    #[test]
    fn site_range_enforced() {
        assert!(make_tfim(1, 1.0).is_err());
        assert!(make_tfim(15, 1.0).is_err());
        assert!(make_tfim(14, 1.0).is_ok());
    }

    #[test]
    fn psd_flag_follows_shift() {
        let h = make_tfim(4, 0.5).unwrap();
        assert!(!h.is_psd());
        let b = h.psd_shift();
        assert_eq!(b, 6.0);
        assert!(h.with_shift(b).is_psd());
    }
}
