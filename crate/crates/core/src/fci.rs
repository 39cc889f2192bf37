//! Exact diagonalization inside a fixed `(n_alpha, n_beta)` sector.
//!
//! Degenerate eigenvalues (within about 1e-10) come back in arbitrary order.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::QubitOperator;
use crate::statevector::{SparseOperator, Statevector, Subspace};

/// Default cap on the sector dimension handled by the dense solver.
pub const DEFAULT_SECTOR_CAP: usize = 20_000;

/// Determinants with fixed alpha and beta electron counts, sorted ascending.
/// Alpha spin orbitals sit on even qubits, beta on odd ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorBasis {
    n_qubits: usize,
    electrons: Option<(usize, usize)>,
    basis: Vec<u64>,
}

impl SectorBasis {
    pub fn new(n_spatial: usize, n_alpha: usize, n_beta: usize) -> Result<Self> {
        if n_alpha > n_spatial || n_beta > n_spatial {
            return Err(Error::InvalidArgument(format!(
                "sector ({n_alpha},{n_beta}) does not fit {n_spatial} orbitals"
            )));
        }
        let alpha = combinations(n_spatial, n_alpha);
        let beta = combinations(n_spatial, n_beta);
        let spread = |mask: u64, offset: usize| -> u64 {
            (0..n_spatial)
                .filter(|p| mask >> p & 1 == 1)
                .fold(0u64, |m, p| m | 1 << (2 * p + offset))
        };
        let mut basis: Vec<u64> = alpha
            .iter()
            .flat_map(|&a| beta.iter().map(move |&b| (a, b)))
            .map(|(a, b)| spread(a, 0) | spread(b, 1))
            .collect();
        basis.sort_unstable();
        Ok(Self {
            n_qubits: 2 * n_spatial,
            electrons: Some((n_alpha, n_beta)),
            basis,
        })
    }

    /// Every basis state of `n_qubits` qubits.
    pub fn all(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            electrons: None,
            basis: (0..1u64 << n_qubits).collect(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn electrons(&self) -> Option<(usize, usize)> {
        self.electrons
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    pub fn subspace(&self) -> Subspace {
        Subspace::from_basis(self.n_qubits, self.basis.clone()).expect("sector states fit the register")
    }
}

fn combinations(n: usize, k: usize) -> Vec<u64> {
    (0..1u64 << n).filter(|m| m.count_ones() as usize == k).collect()
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub energy: f64,
    /// Components in the sector basis order.
    pub vector: Vec<Complex64>,
}

impl Eigenpair {
    pub fn to_statevector(&self, sector: &SectorBasis) -> Result<Statevector> {
        sector.subspace().embed(&self.vector)
    }
}

/// Lowest `k` eigenpairs (all when `k` exceeds the dimension) of `h`
/// restricted to `sector`, ascending. `h` must conserve the sector.
pub fn fci_solve(h: &QubitOperator, sector: &SectorBasis, k: usize) -> Result<Vec<Eigenpair>> {
    fci_solve_capped(h, sector, k, DEFAULT_SECTOR_CAP)
}

pub fn fci_solve_capped(h: &QubitOperator, sector: &SectorBasis, k: usize, cap: usize) -> Result<Vec<Eigenpair>> {
    if sector.dim() > cap {
        return Err(Error::Capacity {
            dim: sector.dim(),
            cap,
        });
    }
    let space = sector.subspace();
    let sparse = SparseOperator::from_qubit_operator(h, &space)?;
    let dense = sector_matrix(&sparse);
    dense_eigenpairs(&dense, k)
}

/// Dense matrix of a compiled operator.
pub fn sector_matrix(sparse: &SparseOperator) -> DMatrix<Complex64> {
    let n = sparse.dim();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for (r, c, v) in sparse.entries() {
        m[(r, c)] += v;
    }
    m
}

/// Hermitian eigensolve, ascending; takes a real path when possible.
pub fn dense_eigenpairs(m: &DMatrix<Complex64>, k: usize) -> Result<Vec<Eigenpair>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(vec![]);
    }
    let max_imag = m.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    let mut pairs: Vec<Eigenpair> = if max_imag < 1e-13 {
        let real = m.map(|v| v.re);
        let sym = (&real + real.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        (0..n)
            .map(|i| Eigenpair {
                energy: eig.eigenvalues[i],
                vector: eig.eigenvectors.column(i).iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            })
            .collect()
    } else {
        let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(herm);
        (0..n)
            .map(|i| Eigenpair {
                energy: eig.eigenvalues[i],
                vector: eig.eigenvectors.column(i).iter().copied().collect(),
            })
            .collect()
    };
    pairs.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    pairs.truncate(k.min(n));
    for p in &pairs {
        let v = nalgebra::DVector::from_column_slice(&p.vector);
        let r = m * &v - v * Complex64::new(p.energy, 0.0);
        if r.norm() > 1e-8 {
            return Err(Error::LinearAlgebra(format!(
                "eigenpair residual {:e} at energy {}",
                r.norm(),
                p.energy
            )));
        }
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{Pauli, PauliString};

    #[test]
    fn sector_sizes_and_spins() {
        let s = SectorBasis::new(4, 2, 2).unwrap();
        assert_eq!(s.dim(), 36);
        for &b in s.basis() {
            assert_eq!((b & 0x55).count_ones(), 2);
            assert_eq!((b & 0xAA).count_ones(), 2);
        }
        assert!(s.basis().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(SectorBasis::new(7, 5, 5).unwrap().dim(), 441);
    }

    #[test]
    fn single_qubit_z() {
        let z = QubitOperator::from_string(PauliString::single(1, 0, Pauli::Z).unwrap(), Complex64::new(1.0, 0.0));
        let pairs = fci_solve(&z, &SectorBasis::all(1), 10).unwrap();
        assert_eq!(pairs.len(), 2);
        assert!((pairs[0].energy + 1.0).abs() < 1e-14);
        assert!((pairs[1].energy - 1.0).abs() < 1e-14);
    }

    #[test]
    fn capacity_and_leakage_errors() {
        let z = QubitOperator::from_string(PauliString::single(2, 0, Pauli::Z).unwrap(), Complex64::new(1.0, 0.0));
        let sector = SectorBasis::new(1, 1, 0).unwrap();
        assert!(matches!(
            fci_solve_capped(&z, &sector, 1, 0),
            Err(Error::Capacity { .. })
        ));
        let x = QubitOperator::from_string(PauliString::single(2, 0, Pauli::X).unwrap(), Complex64::new(1.0, 0.0));
        assert!(matches!(fci_solve(&x, &sector, 1), Err(Error::SectorLeakage(_))));
    }
}
