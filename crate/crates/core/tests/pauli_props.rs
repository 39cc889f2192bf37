mod common;

use common::{dense, dense_string, max_abs_diff};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use vqe_core::pauli::{Pauli, PauliString, Phase, QubitOperator};

fn string(max_q: usize) -> impl Strategy<Value = PauliString> {
    (1..=max_q).prop_flat_map(|n| {
        let m = (1u64 << n) - 1;
        (Just(n), 0..=m, 0..=m).prop_map(|(n, x, z)| PauliString::from_masks(n, x, z).unwrap())
    })
}

fn string_pair(max_q: usize) -> impl Strategy<Value = (PauliString, PauliString)> {
    (1..=max_q).prop_flat_map(|n| {
        let m = (1u64 << n) - 1;
        (0..=m, 0..=m, 0..=m, 0..=m).prop_map(move |(a, b, c, d)| {
            (PauliString::from_masks(n, a, b).unwrap(), PauliString::from_masks(n, c, d).unwrap())
        })
    })
}

fn operator_on(n: usize, max_terms: usize) -> impl Strategy<Value = QubitOperator> {
    let m = (1u64 << n) - 1;
    prop::collection::vec((0..=m, 0..=m, -2.0..2.0f64, -2.0..2.0f64), 0..=max_terms).prop_map(move |terms| {
        QubitOperator::from_terms(
            n,
            terms
                .into_iter()
                .map(|(x, z, re, im)| (PauliString::from_masks(n, x, z).unwrap(), Complex64::new(re, im))),
        )
        .unwrap()
    })
}

fn hermitian_on(n: usize, max_terms: usize) -> impl Strategy<Value = QubitOperator> {
    let m = (1u64 << n) - 1;
    prop::collection::vec((0..=m, 0..=m, -2.0..2.0f64), 1..=max_terms).prop_map(move |terms| {
        QubitOperator::from_terms(
            n,
            terms
                .into_iter()
                .map(|(x, z, re)| (PauliString::from_masks(n, x, z).unwrap(), Complex64::new(re, 0.0))),
        )
        .unwrap()
    })
}

fn op_pair(max_q: usize) -> impl Strategy<Value = (QubitOperator, QubitOperator)> {
    (1..=max_q).prop_flat_map(|n| (operator_on(n, 6), operator_on(n, 6)))
}

const TOL: f64 = 1e-12;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn product_matches_dense((a, b) in string_pair(4)) {
        let (p, phase) = a.mul(&b).unwrap();
        let lhs = dense_string(&a) * dense_string(&b);
        let rhs = dense_string(&p) * phase.to_complex();
        prop_assert!(max_abs_diff(&lhs, &rhs) < TOL);
    }

    #[test]
    fn commutation_flag_matches_dense((a, b) in string_pair(4)) {
        let (da, db) = (dense_string(&a), dense_string(&b));
        let comm = &da * &db - &db * &da;
        let zero = comm.iter().all(|v| v.norm() < TOL);
        prop_assert_eq!(a.commutes_with(&b), zero);
    }

    #[test]
    fn basis_action_matches_dense_columns(p in string(4)) {
        let d = dense_string(&p);
        for j in 0..(1u64 << p.n_qubits()) {
            let (k, ph) = p.apply_to_basis(j);
            for row in 0..d.nrows() {
                let expect = if row as u64 == k { ph.to_complex() } else { Complex64::default() };
                prop_assert!((d[(row, j as usize)] - expect).norm() < TOL);
            }
        }
    }

    #[test]
    fn involution(p in string(4)) {
        let (q, ph) = p.mul(&p).unwrap();
        prop_assert!(q.is_identity());
        prop_assert_eq!(ph, Phase::ONE);
    }

    #[test]
    fn word_round_trip(p in string(4)) {
        prop_assert_eq!(PauliString::from_word(&p.to_word()).unwrap(), p);
    }

    #[test]
    fn operator_algebra_matches_dense((a, b) in op_pair(4), s in -3.0..3.0f64) {
        let (da, db) = (dense(&a), dense(&b));
        prop_assert!(max_abs_diff(&dense(&a.add(&b).unwrap()), &(&da + &db)) < 1e-10);
        prop_assert!(max_abs_diff(&dense(&a.sub(&b).unwrap()), &(&da - &db)) < 1e-10);
        let k = Complex64::new(s, -0.5 * s);
        prop_assert!(max_abs_diff(&dense(&a.scale(k)), &da.map(|v| v * k)) < 1e-10);
        prop_assert!(max_abs_diff(&dense(&a.multiply(&b).unwrap()), &(&da * &db)) < 1e-10);
        let comm = &da * &db - &db * &da;
        prop_assert!(max_abs_diff(&dense(&a.commutator(&b).unwrap()), &comm) < 1e-10);
        prop_assert!(max_abs_diff(&dense(&a.adjoint()), &da.adjoint()) < 1e-10);
    }

    #[test]
    fn hermitian_commutator_is_anti_hermitian(
        (a, b) in (1..=3usize).prop_flat_map(|n| (hermitian_on(n, 5), hermitian_on(n, 5)))
    ) {
        let c = a.commutator(&b).unwrap();
        prop_assert!(c.is_anti_hermitian(1e-12));
        let dc = dense(&c);
        prop_assert!(max_abs_diff(&dc, &(-dc.adjoint())) < 1e-10);
    }

    #[test]
    fn simplify_at_zero_tolerance_keeps_the_matrix(a in (1..=4usize).prop_flat_map(|n| operator_on(n, 8))) {
        let before = dense(&a);
        let after = dense(&a.clone().simplify(0.0));
        prop_assert!(max_abs_diff(&before, &after) < 1e-12);
    }

    #[test]
    fn simplify_prunes_small_coefficients(a in (1..=4usize).prop_flat_map(|n| operator_on(n, 8)), tol in 0.0..1.0f64) {
        let s = a.simplify(tol);
        for (_, c) in s.iter() {
            prop_assert!(c.norm() > tol);
        }
    }
}

#[test]
fn single_qubit_examples() {
    let x = PauliString::single(1, 0, Pauli::X).unwrap();
    let y = PauliString::single(1, 0, Pauli::Y).unwrap();
    let (z, ph) = x.mul(&y).unwrap();
    assert_eq!(z, PauliString::single(1, 0, Pauli::Z).unwrap());
    assert_eq!(ph, Phase::I);

    let op = |p: Pauli, q: usize| QubitOperator::from_string(PauliString::single(2, q, p).unwrap(), Complex64::new(1.0, 0.0));
    assert!(op(Pauli::Z, 0).commutator(&op(Pauli::Z, 1)).unwrap().is_empty());
    let c = op(Pauli::X, 0).commutator(&op(Pauli::Z, 0)).unwrap();
    assert_eq!(c.n_terms(), 1);
    assert_eq!(c.coefficient(&PauliString::single(2, 0, Pauli::Y).unwrap()), Complex64::new(0.0, -2.0));
}

#[test]
fn ingestion_cancels_and_prunes() {
    let x0 = PauliString::single(1, 0, Pauli::X).unwrap();
    let op = QubitOperator::from_terms(1, [(x0.clone(), Complex64::new(1.0, 0.0)), (x0, Complex64::new(-1.0, 0.0))]).unwrap();
    assert!(op.simplify(0.0).is_empty());
    let z0 = PauliString::single(1, 0, Pauli::Z).unwrap();
    let tiny = QubitOperator::from_string(z0, Complex64::new(1e-15, 0.0));
    assert!(tiny.simplify(1e-12).is_empty());
}

#[test]
fn identity_has_zero_masks() {
    let id = PauliString::identity(3);
    assert_eq!((id.x_mask(), id.z_mask()), (0, 0));
    let d = dense_string(&id);
    assert!(max_abs_diff(&d, &DMatrix::identity(8, 8)) < TOL);
}
