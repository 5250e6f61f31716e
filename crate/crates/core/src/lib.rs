//! Randomized trace and diagonal estimation for implicit matrices.
//!
//! The crate implements the exchangeable estimators XTrace, XNysTrace and
//! XDiag next to the classical Girard–Hutchinson, Hutch++, Nyström++,
//! low-rank and BKS baselines. All of them see the input only through
//! [`LinearOperator`] block products and report the number of matvecs they
//! used.
//!
//! ```
//! use xtrace_core::{linop::{make_synthetic_operator, SpectrumKind, SpectrumSpec}, xtrace, Distribution};
//!
//! let op = make_synthetic_operator(&SpectrumSpec::new(SpectrumKind::Exp, 200), 1).unwrap();
//! let report = xtrace(&op, 40, Distribution::Gaussian, true, 7).unwrap();
//! assert!((report.estimate - 10.0 / 3.0).abs() < 1e-3);
//! assert_eq!(report.matvecs_used, 40);
//! ```

pub mod adaptive;
pub mod bounds;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod linop;
pub mod montecarlo;
pub mod oracle;
pub mod sampling;

pub use adaptive::{run_adaptive, AdaptiveConfig, AdaptiveEstimator, AdaptiveReport};
pub use bounds::{variance_bound, VarianceBound};
pub use error::{Error, Result};
pub use estimators::{
    bks_diag, error_estimate, hutch, hutchpp, lra_trace, nystrompp, xdiag, xnystrace, xtrace,
    DiagReport, EstimatorKind, TraceReport,
};
pub use linop::{exact_diag, exact_trace, LinearOperator};
pub use sampling::{sample_test_matrix, Distribution, TestMatrix};
