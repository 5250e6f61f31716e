//! A-priori root-mean-square error bounds for Hutch++, XTrace and XNysTrace
//! with standard normal test vectors, as functions of the singular values.
//!
//! Each bound is a minimum over a truncation rank r of an expression in the
//! tail norms of A − ⟦A⟧ᵣ (spectral, Frobenius and trace norm).

use serde::Serialize;

use crate::estimators::EstimatorKind;
use crate::linalg::compensated_sum;

/// The minimizing rank and the bound value for one (estimator, m) cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VarianceBound {
    pub estimator: EstimatorKind,
    pub m: usize,
    pub rank: usize,
    pub value: f64,
}

/// Spectral, Frobenius and trace norm of the rank-r tail.
#[derive(Clone, Copy, Debug)]
struct Tail {
    spectral: f64,
    frobenius: f64,
    nuclear: f64,
}

fn tails(sorted: &[f64], max_rank: usize) -> Vec<Tail> {
    (0..=max_rank)
        .map(|r| {
            let rest = sorted.get(r..).unwrap_or(&[]);
            Tail {
                spectral: rest.first().copied().unwrap_or(0.0),
                frobenius: compensated_sum(rest.iter().map(|s| s * s)).sqrt(),
                nuclear: compensated_sum(rest.iter().copied()),
            }
        })
        .collect()
}

/// Evaluates the bound for `estimator` at budget `m` (which must be ≥ 8).
/// Returns `None` for estimators without a bound or for budgets that admit
/// no truncation rank.
pub fn variance_bound(estimator: EstimatorKind, singular_values: &[f64], m: usize) -> Option<VarianceBound> {
    if m < 8 {
        return None;
    }
    let mf = m as f64;
    let max_rank = match estimator {
        EstimatorKind::HutchPP => (mf / 3.0 - 2.0).floor(),
        EstimatorKind::XTrace => (mf / 2.0 - 4.0).floor(),
        EstimatorKind::XNysTrace => mf - 6.0,
        _ => return None,
    };
    if max_rank < 0.0 {
        return None;
    }
    let mut sorted: Vec<f64> = singular_values.iter().map(|s| s.abs()).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));

    let e = std::f64::consts::E;
    let evaluate = |r: usize, t: &Tail| -> f64 {
        let r = r as f64;
        match estimator {
            EstimatorKind::HutchPP => 2f64.sqrt() * t.frobenius / (mf / 3.0 - r - 1.0).sqrt(),
            EstimatorKind::XTrace => {
                let d = mf / 2.0 - r - 3.0;
                mf.sqrt() * (2.0 * t.spectral / d.sqrt() + 2.0 * e * t.frobenius / d)
            }
            EstimatorKind::XNysTrace => {
                let d = mf - r - 5.0;
                mf * (8f64.sqrt() * t.spectral / d
                    + 2f64.sqrt() * t.frobenius / d.powf(1.5)
                    + 5.0 * e * e * t.nuclear / (d * d))
            }
            _ => unreachable!(),
        }
    };

    tails(&sorted, max_rank as usize)
        .iter()
        .enumerate()
        .map(|(r, t)| (r, evaluate(r, t)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(rank, value)| VarianceBound {
            estimator,
            m,
            rank,
            value,
        })
}
