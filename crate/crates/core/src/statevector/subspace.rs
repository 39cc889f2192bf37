//! Compiled kernels over an invariant set of basis states.
//!
//! Drivers that only ever touch number-conserving operators never leave the
//! `(n_alpha, n_beta)` sector, so operators are compiled once into sparse
//! matrices over that sector and amplitudes are stored compactly. The full
//! register is the special case where every basis state is included.

use std::collections::HashMap;

use num_complex::Complex64;

use super::Statevector;
use crate::error::{check_dims, Error, Result};
use crate::pauli::QubitOperator;

/// Amplitude that may leak outside the subspace before compilation fails.
pub const LEAKAGE_TOL: f64 = 1e-10;
const CUBIC_TOL: f64 = 1e-12;

/// An ordered set of computational basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    n_qubits: usize,
    basis: Vec<u64>,
    position: HashMap<u64, usize>,
}

impl Subspace {
    pub fn full(n_qubits: usize) -> Self {
        Self::from_sorted(n_qubits, (0..1u64 << n_qubits).collect())
    }

    /// Builds a subspace from basis states; they are sorted and deduplicated.
    pub fn from_basis(n_qubits: usize, mut basis: Vec<u64>) -> Result<Self> {
        basis.sort_unstable();
        basis.dedup();
        if let Some(&b) = basis.iter().find(|&&b| b >> n_qubits != 0) {
            return Err(Error::IndexOutOfRange {
                index: 63 - b.leading_zeros() as usize,
                limit: n_qubits,
                what: "qubits",
            });
        }
        Ok(Self::from_sorted(n_qubits, basis))
    }

    fn from_sorted(n_qubits: usize, basis: Vec<u64>) -> Self {
        let position = basis.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        Self {
            n_qubits,
            basis,
            position,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    pub fn position(&self, state: u64) -> Option<usize> {
        self.position.get(&state).copied()
    }

    pub fn is_full(&self) -> bool {
        self.basis.len() == 1usize << self.n_qubits
    }

    /// Scatters compact amplitudes into a full statevector.
    pub fn embed(&self, compact: &[Complex64]) -> Result<Statevector> {
        if compact.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "{} amplitudes for a subspace of dimension {}",
                compact.len(),
                self.dim()
            )));
        }
        let mut amps = vec![Complex64::default(); 1usize << self.n_qubits];
        for (&b, a) in self.basis.iter().zip(compact) {
            amps[b as usize] = *a;
        }
        Statevector::from_amplitudes(self.n_qubits, amps)
    }

    /// Gathers the subspace amplitudes of a full statevector; fails when
    /// more than [`LEAKAGE_TOL`] of amplitude lies outside.
    pub fn restrict(&self, state: &Statevector) -> Result<Vec<Complex64>> {
        check_dims(self.n_qubits, state.n_qubits())?;
        let compact: Vec<Complex64> = self
            .basis
            .iter()
            .map(|&b| state.amplitudes()[b as usize])
            .collect();
        let inside: f64 = compact.iter().map(|a| a.norm_sqr()).sum();
        let outside = (state.norm_sqr() - inside).max(0.0).sqrt();
        if outside > LEAKAGE_TOL {
            return Err(Error::SectorLeakage(outside));
        }
        Ok(compact)
    }
}

/// Column-compressed sparse matrix over subspace coordinates.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    dim: usize,
    col_ptr: Vec<usize>,
    rows: Vec<u32>,
    vals: Vec<Complex64>,
}

impl SparseOperator {
    /// Compiles `op` restricted to `space`. Columns are formed by applying
    /// the Pauli terms to each basis state; any net amplitude landing
    /// outside the subspace is a leakage error.
    pub fn from_qubit_operator(op: &QubitOperator, space: &Subspace) -> Result<Self> {
        check_dims(space.n_qubits(), op.n_qubits())?;
        // group terms by flip pattern: P|b> = i^y (-1)^{|z&b|} |b ^ x>
        let mut groups: Vec<(u64, Vec<(u64, Complex64)>)> = Vec::new();
        let mut by_x: HashMap<u64, usize> = HashMap::new();
        for (p, c) in op.iter() {
            let (_, ph) = p.apply_to_basis(0);
            let g = *by_x.entry(p.x_mask()).or_insert_with(|| {
                groups.push((p.x_mask(), Vec::new()));
                groups.len() - 1
            });
            groups[g].1.push((p.z_mask(), c * ph.to_complex()));
        }
        let dim = space.dim();
        let mut col_ptr = Vec::with_capacity(dim + 1);
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        col_ptr.push(0);
        let mut column: Vec<(u32, Complex64)> = Vec::new();
        for &b in space.basis() {
            column.clear();
            for (x, terms) in &groups {
                let mut v = Complex64::default();
                for (z, c) in terms {
                    if (z & b).count_ones() % 2 == 0 {
                        v += c;
                    } else {
                        v -= c;
                    }
                }
                if v.norm() <= crate::pauli::PRUNE_TOL {
                    continue;
                }
                match space.position(b ^ x) {
                    Some(r) => column.push((r as u32, v)),
                    None => {
                        if v.norm() > LEAKAGE_TOL {
                            return Err(Error::SectorLeakage(v.norm()));
                        }
                    }
                }
            }
            column.sort_unstable_by_key(|(r, _)| *r);
            for (r, v) in &column {
                rows.push(*r);
                vals.push(*v);
            }
            col_ptr.push(rows.len());
        }
        Ok(Self {
            dim,
            col_ptr,
            rows,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out = A x`.
    pub fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::default());
        self.apply_add(x, Complex64::new(1.0, 0.0), out);
    }

    /// `out += alpha A x`.
    pub fn apply_add(&self, x: &[Complex64], alpha: Complex64, out: &mut [Complex64]) {
        for (col, xc) in x.iter().enumerate() {
            if xc.re == 0.0 && xc.im == 0.0 {
                continue;
            }
            let s = alpha * xc;
            for k in self.col_ptr[col]..self.col_ptr[col + 1] {
                out[self.rows[k] as usize] += self.vals[k] * s;
            }
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.dim];
        self.apply_into(x, &mut out);
        out
    }

    /// `(row, col, value)` triples.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |col| {
            (self.col_ptr[col]..self.col_ptr[col + 1]).map(move |k| (self.rows[k] as usize, col, self.vals[k]))
        })
    }

    /// Largest absolute column sum (induced 1-norm).
    pub fn one_norm(&self) -> f64 {
        (0..self.dim)
            .map(|col| {
                (self.col_ptr[col]..self.col_ptr[col + 1])
                    .map(|k| self.vals[k].norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    fn column(&self, col: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.col_ptr[col]..self.col_ptr[col + 1]).map(move |k| (self.rows[k] as usize, self.vals[k]))
    }

    /// Checks `A^3 = -A` column by column.
    fn is_cubic_rotation(&self) -> bool {
        let mut v2: HashMap<usize, Complex64> = HashMap::new();
        let mut v3: HashMap<usize, Complex64> = HashMap::new();
        for col in 0..self.dim {
            v2.clear();
            v3.clear();
            for (r, a) in self.column(col) {
                for (r2, b) in self.column(r) {
                    *v2.entry(r2).or_default() += b * a;
                }
            }
            for (&r, &a) in &v2 {
                for (r3, b) in self.column(r) {
                    *v3.entry(r3).or_default() += b * a;
                }
            }
            for (r, a) in self.column(col) {
                *v3.entry(r).or_default() += a;
            }
            if v3.values().any(|v| v.norm() > CUBIC_TOL) {
                return false;
            }
        }
        true
    }
}

/// An anti-Hermitian generator compiled for repeated `exp(theta A)` actions.
#[derive(Debug, Clone)]
pub struct CompiledGenerator {
    matrix: SparseOperator,
    cubic: bool,
    norm: f64,
}

impl CompiledGenerator {
    pub fn new(op: &QubitOperator, space: &Subspace) -> Result<Self> {
        if !op.is_anti_hermitian(1e-12) {
            return Err(Error::NotAntiHermitian(op.max_real_part()));
        }
        let matrix = SparseOperator::from_qubit_operator(op, space)?;
        let cubic = matrix.is_cubic_rotation();
        let norm = matrix.one_norm();
        Ok(Self { matrix, cubic, norm })
    }

    pub fn matrix(&self) -> &SparseOperator {
        &self.matrix
    }

    /// True when `exp(theta A) = 1 + sin(theta) A + (1 - cos(theta)) A^2`.
    pub fn is_cubic(&self) -> bool {
        self.cubic
    }

    /// `out = A x`.
    pub fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        self.matrix.apply_into(x, out);
    }

    /// In place: `x <- exp(theta A) x`. `s1`, `s2` are scratch buffers of the
    /// subspace dimension.
    pub fn exp_apply(&self, theta: f64, x: &mut [Complex64], s1: &mut [Complex64], s2: &mut [Complex64]) {
        if theta == 0.0 {
            return;
        }
        if self.cubic {
            let (s, c) = theta.sin_cos();
            self.matrix.apply_into(x, s1);
            self.matrix.apply_into(s1, s2);
            let w = 1.0 - c;
            for ((xi, a1), a2) in x.iter_mut().zip(s1.iter()).zip(s2.iter()) {
                *xi += s * a1 + w * a2;
            }
            return;
        }
        let steps = (theta.abs() * self.norm).ceil().max(1.0) as usize;
        let h = theta / steps as f64;
        for _ in 0..steps {
            let scale = x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
            s1.copy_from_slice(x);
            for k in 1..64 {
                self.matrix.apply_into(s1, s2);
                let f = h / k as f64;
                let mut tn = 0.0;
                for ((xi, t), a) in x.iter_mut().zip(s1.iter_mut()).zip(s2.iter()) {
                    *t = a * f;
                    *xi += *t;
                    tn += t.norm_sqr();
                }
                if tn.sqrt() < 1e-16 * scale {
                    break;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::{realize_generator, ExcitationGenerator, Provenance};
    use crate::pauli::{Pauli, PauliString};

    #[test]
    fn full_space_matches_term_wise_application() {
        let x0 = PauliString::single(2, 0, Pauli::X).unwrap();
        let z1 = PauliString::single(2, 1, Pauli::Z).unwrap();
        let op = QubitOperator::from_terms(2, [(x0, Complex64::new(0.3, 0.0)), (z1, Complex64::new(0.0, 0.7))]).unwrap();
        let space = Subspace::full(2);
        let m = SparseOperator::from_qubit_operator(&op, &space).unwrap();
        let psi = Statevector::from_amplitudes(
            2,
            vec![
                Complex64::new(0.5, 0.1),
                Complex64::new(-0.2, 0.3),
                Complex64::new(0.4, 0.0),
                Complex64::new(0.0, -0.6),
            ],
        )
        .unwrap();
        let reference = psi.apply_operator(&op).unwrap();
        let got = m.apply(psi.amplitudes());
        for (a, b) in got.iter().zip(reference.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn leakage_is_detected() {
        let space = Subspace::from_basis(2, vec![0b01, 0b10]).unwrap();
        let x0 = QubitOperator::from_string(PauliString::single(2, 0, Pauli::X).unwrap(), Complex64::new(1.0, 0.0));
        assert!(matches!(
            SparseOperator::from_qubit_operator(&x0, &space),
            Err(Error::SectorLeakage(_))
        ));
    }

    #[test]
    fn excitations_are_cubic_rotations() {
        let space = Subspace::full(4);
        for (ann, cre) in [(vec![0], vec![2]), (vec![0, 1], vec![2, 3]), (vec![0, 3], vec![1, 2])] {
            let g = ExcitationGenerator::fermionic(ann, cre, Provenance::Generalized);
            let a = realize_generator(&g, 4).unwrap();
            assert!(CompiledGenerator::new(&a, &space).unwrap().is_cubic());
        }
    }

    #[test]
    fn taylor_path_matches_closed_form() {
        // the closed form and the series must agree on a cubic generator
        let space = Subspace::full(4);
        let g = ExcitationGenerator::fermionic(vec![0, 1], vec![2, 3], Provenance::Uccsd);
        let a = realize_generator(&g, 4).unwrap();
        let cubic = CompiledGenerator::new(&a, &space).unwrap();
        let mut series = cubic.clone();
        series.cubic = false;
        let mut x1 = vec![Complex64::default(); 16];
        x1[3] = Complex64::new(1.0, 0.0);
        let mut x2 = x1.clone();
        let (mut s1, mut s2) = (x1.clone(), x1.clone());
        cubic.exp_apply(0.8, &mut x1, &mut s1, &mut s2);
        series.exp_apply(0.8, &mut x2, &mut s1, &mut s2);
        for (a, b) in x1.iter().zip(&x2) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
