#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DMatrix;
use num_complex::Complex64;
use vqe_core::fermion::{FixtureManifest, MolecularIntegrals};
use vqe_core::pauli::{Pauli, PauliString, QubitOperator};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn manifest() -> FixtureManifest {
    FixtureManifest::load(&fixture_dir().join("manifest.json")).expect("manifest loads")
}

pub fn integrals(label: &str) -> MolecularIntegrals {
    let m = manifest();
    let e = m.get(label).unwrap_or_else(|| panic!("no fixture {label}"));
    m.load_integrals(e).expect("fixture parses")
}

fn single_qubit(p: Pauli) -> DMatrix<Complex64> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    match p {
        Pauli::I => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]),
        Pauli::X => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        Pauli::Y => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        Pauli::Z => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
    }
}

/// Kronecker-product matrix of a Pauli string; qubit 0 is the least
/// significant bit of the basis index.
pub fn dense_string(p: &PauliString) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for q in (0..p.n_qubits()).rev() {
        m = m.kronecker(&single_qubit(p.get(q)));
    }
    m
}

pub fn dense(op: &QubitOperator) -> DMatrix<Complex64> {
    let d = 1usize << op.n_qubits();
    let mut m = DMatrix::zeros(d, d);
    for (p, c) in op.iter() {
        m += dense_string(p) * *c;
    }
    m
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `exp(theta A)` for anti-Hermitian `A`, through the eigenvectors of the
/// Hermitian `iA`.
pub fn expm_anti_hermitian(a: &DMatrix<Complex64>, theta: f64) -> DMatrix<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    let h = a.map(|v| v * i);
    let eig = nalgebra::SymmetricEigen::new(h);
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (-i * theta * l).exp()));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Dense `a_p` (or `a_p^+`) on `n` modes: `Z` on lower modes, then the
/// 2x2 lowering (raising) matrix.
pub fn dense_ladder(p: usize, n: usize, creation: bool) -> DMatrix<Complex64> {
    let c = |re: f64| Complex64::new(re, 0.0);
    let z = DMatrix::from_row_slice(2, 2, &[c(1.), c(0.), c(0.), c(-1.)]);
    let id = DMatrix::<Complex64>::identity(2, 2);
    // |1> is occupied; lowering maps |1> to |0>
    let lower = DMatrix::from_row_slice(2, 2, &[c(0.), c(1.), c(0.), c(0.)]);
    let local = if creation { lower.transpose() } else { lower };
    let mut m = DMatrix::from_element(1, 1, c(1.0));
    for q in (0..n).rev() {
        let f = if q < p {
            &z
        } else if q == p {
            &local
        } else {
            &id
        };
        m = m.kronecker(f);
    }
    m
}

pub fn random_state(rng: &mut impl rand::Rng, dim: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

pub fn vec_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
