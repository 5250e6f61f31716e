mod common;

use nalgebra::{DMatrix, DVector};
use xtrace_core::linop::{
    densify, make_function_operator, make_synthetic_operator, make_tfim, parse_matrix_market,
    DenseOperator, DenseSpectralOperator, IdentityOperator, SpectrumKind, SpectrumSpec,
};
use xtrace_core::{exact_diag, exact_trace, LinearOperator};

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Dense TFIM Hamiltonian from explicit Kronecker products of Pauli matrices.
fn tfim_kronecker(n: usize, h: f64) -> DMatrix<f64> {
    let id = DMatrix::<f64>::identity(2, 2);
    let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let site_op = |ops: &[(usize, &DMatrix<f64>)]| {
        (0..n).fold(DMatrix::<f64>::identity(1, 1), |acc, s| {
            let factor = ops.iter().find(|(i, _)| *i == s).map_or(&id, |(_, m)| *m);
            kron(&acc, factor)
        })
    };
    let dim = 1 << n;
    let mut hmat = DMatrix::zeros(dim, dim);
    for i in 0..n {
        hmat -= site_op(&[(i, &z), ((i + 1) % n, &z)]);
        hmat -= site_op(&[(i, &x)]) * h;
    }
    hmat
}

#[test]
fn tfim_matches_kronecker_construction() {
    for (n, h) in [(2, 0.0), (3, 0.5), (4, 1.0), (6, 10.0)] {
        let ham = make_tfim(n, h).unwrap();
        let dense = densify(&ham).unwrap();
        let reference = tfim_kronecker(n, h);
        assert!((dense - reference).amax() < 1e-12, "n={n} h={h}");
    }
}

#[test]
fn tfim_two_sites_without_field() {
    let ham = make_tfim(2, 0.0).unwrap();
    let spec = DenseSpectralOperator::from_symmetric(&densify(&ham).unwrap()).unwrap();
    let mut ev: Vec<f64> = spec.eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    for (a, b) in ev.iter().zip([-2.0, -2.0, 2.0, 2.0]) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn tfim_shift_makes_psd() {
    for h in [0.0, 0.5, 3.0] {
        let ham = make_tfim(5, h).unwrap();
        let b = ham.psd_shift();
        let spec = DenseSpectralOperator::from_symmetric(&densify(&ham).unwrap()).unwrap();
        assert!(spec.eigenvalues().min() + b >= -1e-10);
        let shifted = make_tfim(5, h).unwrap().with_shift(b);
        assert!((exact_trace(&shifted).unwrap() - b * 32.0).abs() < 1e-9);
    }
}

#[test]
fn tfim_rejects_out_of_range_sites() {
    assert!(make_tfim(1, 1.0).is_err());
    assert!(make_tfim(40, 1.0).is_err());
    assert!(make_tfim(4, f64::NAN).is_err());
}

#[test]
fn densify_and_exact_queries_agree_with_matrix() {
    let a = common::gaussian_matrix(30, 30, 4);
    let op = DenseOperator::new(a.clone()).unwrap();
    assert_eq!(densify(&op).unwrap(), a);
    assert!((exact_trace(&op).unwrap() - a.trace()).abs() < 1e-12);
    assert_eq!(exact_diag(&op).unwrap(), a.diagonal());
    let adj = op.apply_adjoint(&DMatrix::identity(30, 30)).unwrap();
    assert_eq!(adj, a.transpose());
}

#[test]
fn dimension_mismatch_and_nonfinite_inputs_are_rejected() {
    let op = IdentityOperator::new(5);
    assert!(op.apply(&DMatrix::zeros(4, 2)).is_err());
    let mut x = DMatrix::zeros(5, 1);
    x[(2, 0)] = f64::INFINITY;
    assert!(op.apply(&x).is_err());
    assert_eq!(op.counter().total(), 0);
}

#[test]
fn counters_track_columns() {
    let op = IdentityOperator::new(8);
    op.apply(&DMatrix::zeros(8, 3)).unwrap();
    op.apply_adjoint(&DMatrix::zeros(8, 2)).unwrap();
    assert_eq!(op.counter().forward(), 3);
    assert_eq!(op.counter().adjoint(), 2);
    assert_eq!(op.counter().total(), 5);
    op.counter().reset();
    assert_eq!(op.counter().total(), 0);
}

#[test]
fn synthetic_spectra() {
    let n = 200;
    for kind in [SpectrumKind::Flat, SpectrumKind::Poly, SpectrumKind::Exp, SpectrumKind::Step] {
        let spec = SpectrumSpec::new(kind, n);
        let op = make_synthetic_operator(&spec, 3).unwrap();
        assert!(op.is_psd() && op.is_symmetric());
        let ev = spec.eigenvalues();
        assert!(ev.iter().all(|&l| l >= 0.0));
        let dense = densify(&op).unwrap();
        assert!((&dense - dense.transpose()).amax() < 1e-12);
        assert!((dense.trace() - ev.sum()).abs() < 1e-9 * ev.sum());
        let mut sv = op.singular_values();
        let mut sorted = sv.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(sv, sorted);
        sv.sort_by(f64::total_cmp);
        let mut evs: Vec<f64> = ev.iter().copied().collect();
        evs.sort_by(f64::total_cmp);
        for (a, b) in sv.iter().zip(&evs) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn synthetic_instances_are_seed_deterministic() {
    let spec = SpectrumSpec::new(SpectrumKind::Exp, 50);
    let a = densify(&make_synthetic_operator(&spec, 11).unwrap()).unwrap();
    let b = densify(&make_synthetic_operator(&spec, 11).unwrap()).unwrap();
    let c = densify(&make_synthetic_operator(&spec, 12).unwrap()).unwrap();
    assert_eq!(a, b);
    assert!((a - c).amax() > 1e-3);
}

#[test]
fn function_operator_applies_to_eigenvalues() {
    let a = common::gaussian_matrix(20, 20, 1);
    let sym = (&a + a.transpose()) * 0.5;
    let base = DenseSpectralOperator::from_symmetric(&sym).unwrap();
    let sq = make_function_operator(&base, |l| l * l).unwrap();
    let direct = &sym * &sym;
    assert!((densify(&sq).unwrap() - &direct).amax() < 1e-10);
    assert!((exact_trace(&sq).unwrap() - direct.trace()).abs() < 1e-9);
    let d = exact_diag(&sq).unwrap();
    assert!((d - direct.diagonal()).amax() < 1e-10);
}

#[test]
fn matrix_market_symmetric_pattern() {
    let text = "%%MatrixMarket matrix coordinate pattern symmetric\n% triangle\n3 3 3\n2 1\n3 1\n3 2\n";
    let m = parse_matrix_market(text.as_bytes()).unwrap();
    let expected = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
    assert_eq!(m, expected);
    let cube = &m * &m * &m / 2.0;
    assert_eq!(cube.diagonal(), DVector::from_element(3, 1.0));
}

#[test]
fn matrix_market_general_real() {
    let text = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1.5\n2 2 -3e0\n";
    let m = parse_matrix_market(text.as_bytes()).unwrap();
    assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.0, 1.5, 0.0, -3.0]));
}

#[test]
fn matrix_market_malformed() {
    for text in [
        "",
        "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n",
        "%%MatrixMarket matrix coordinate pattern symmetric\n3 3 2\n1 2\n",
        "%%MatrixMarket matrix coordinate pattern symmetric\n3 3 1\n4 1\n",
        "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 abc\n",
    ] {
        assert!(parse_matrix_market(text.as_bytes()).is_err(), "{text:?}");
    }
}
