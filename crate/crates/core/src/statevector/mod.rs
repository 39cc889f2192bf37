//! Exact statevector simulation over `2^n` amplitudes.
//!
//! Basis index bit `i` is the occupation of qubit `i` (little-endian).

mod subspace;

pub use subspace::{CompiledGenerator, SparseOperator, Subspace};

use num_complex::Complex64;

use crate::error::{check_dims, Error, Result};
use crate::pauli::{PauliString, QubitOperator};

pub const NORM_TOL: f64 = 1e-10;
const ANTI_HERMITIAN_TOL: f64 = 1e-12;
const TAYLOR_TOL: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
    normalized: bool,
}

impl Statevector {
    /// `|0...0>`.
    pub fn zero_state(n_qubits: usize) -> Self {
        Self::basis_state(n_qubits, 0).expect("zero index is in range")
    }

    pub fn basis_state(n_qubits: usize, index: u64) -> Result<Self> {
        if n_qubits >= 40 {
            return Err(Error::InvalidArgument(format!("{n_qubits} qubits is beyond desk scale")));
        }
        if index >> n_qubits != 0 {
            return Err(Error::IndexOutOfRange {
                index: 63 - index.leading_zeros() as usize,
                limit: n_qubits,
                what: "qubits",
            });
        }
        let mut amplitudes = vec![Complex64::default(); 1usize << n_qubits];
        amplitudes[index as usize] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
            normalized: true,
        })
    }

    /// The determinant with the given occupation bitstring.
    pub fn hf_state(n_qubits: usize, occupation: u64) -> Result<Self> {
        Self::basis_state(n_qubits, occupation)
    }

    /// Wraps raw amplitudes; the normalized flag is set when the norm is 1.
    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1usize << n_qubits {
            return Err(Error::InvalidArgument(format!(
                "{} amplitudes do not describe {n_qubits} qubits",
                amplitudes.len()
            )));
        }
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        Ok(Self {
            n_qubits,
            amplitudes,
            normalized: (norm2 - 1.0).abs() < NORM_TOL,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr().sqrt();
        if n < 1e-300 {
            return Err(Error::InvalidArgument("cannot normalize a zero vector".into()));
        }
        self.amplitudes.iter_mut().for_each(|a| *a /= n);
        self.normalized = true;
        Ok(())
    }

    /// In place: `psi <- cos(theta) psi + i sin(theta) P psi`.
    pub fn rotate_pauli(&mut self, p: &PauliString, theta: f64) -> Result<()> {
        check_dims(self.n_qubits, p.n_qubits())?;
        let (s, c) = theta.sin_cos();
        let is = Complex64::new(0.0, s);
        let x = p.x_mask() as usize;
        if x == 0 {
            for (j, a) in self.amplitudes.iter_mut().enumerate() {
                let (_, ph) = p.apply_to_basis(j as u64);
                *a *= c + is * ph.to_complex();
            }
            return Ok(());
        }
        let high = 1usize << (63 - (x as u64).leading_zeros());
        for j in 0..self.amplitudes.len() {
            if j & high != 0 {
                continue;
            }
            let k = j ^ x;
            let (_, ph_j) = p.apply_to_basis(j as u64);
            let (_, ph_k) = p.apply_to_basis(k as u64);
            let aj = self.amplitudes[j];
            let ak = self.amplitudes[k];
            self.amplitudes[k] = c * ak + is * ph_j.to_complex() * aj;
            self.amplitudes[j] = c * aj + is * ph_k.to_complex() * ak;
        }
        Ok(())
    }

    /// `exp(i theta P) |psi>`.
    pub fn apply_pauli_exp(&self, p: &PauliString, theta: f64) -> Result<Statevector> {
        let mut out = self.clone();
        out.rotate_pauli(p, theta)?;
        Ok(out)
    }

    /// `sum_j alpha_j P_j |psi>`; the result is not normalized.
    pub fn apply_operator(&self, op: &QubitOperator) -> Result<Statevector> {
        check_dims(self.n_qubits, op.n_qubits())?;
        let mut out = vec![Complex64::default(); self.amplitudes.len()];
        for (p, coeff) in op.iter() {
            for (j, a) in self.amplitudes.iter().enumerate() {
                if *a == Complex64::default() {
                    continue;
                }
                let (k, ph) = p.apply_to_basis(j as u64);
                out[k as usize] += coeff * ph.to_complex() * a;
            }
        }
        Ok(Statevector {
            n_qubits: self.n_qubits,
            amplitudes: out,
            normalized: false,
        })
    }

    /// `<psi|O|psi>` for a normalized state, computed term by term.
    pub fn expectation(&self, op: &QubitOperator) -> Result<Complex64> {
        if !self.normalized {
            return Err(Error::InvalidArgument(
                "expectation needs a normalized state; use raw_expectation".into(),
            ));
        }
        self.raw_expectation(op)
    }

    /// `<psi|O|psi>` without the normalization requirement.
    pub fn raw_expectation(&self, op: &QubitOperator) -> Result<Complex64> {
        check_dims(self.n_qubits, op.n_qubits())?;
        let mut total = Complex64::default();
        for (p, coeff) in op.iter() {
            let mut acc = Complex64::default();
            for (j, a) in self.amplitudes.iter().enumerate() {
                let (k, ph) = p.apply_to_basis(j as u64);
                acc += self.amplitudes[k as usize].conj() * ph.to_complex() * a;
            }
            total += coeff * acc;
        }
        Ok(total)
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &Statevector) -> Result<Complex64> {
        check_dims(self.n_qubits, other.n_qubits)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// In place: `psi <- exp(theta A) psi` for anti-Hermitian `A`.
    pub fn apply_generator(&mut self, a: &QubitOperator, theta: f64, mode: ExpMode) -> Result<()> {
        check_dims(self.n_qubits, a.n_qubits())?;
        if !a.is_anti_hermitian(ANTI_HERMITIAN_TOL) {
            return Err(Error::NotAntiHermitian(a.max_real_part()));
        }
        if mode == ExpMode::Trotter || a.mutually_commuting() {
            // exp(theta * i c P) = rotation by theta * c
            for (p, c) in a.iter() {
                self.rotate_pauli(p, theta * c.im)?;
            }
            return Ok(());
        }
        let steps = (theta.abs() * a.one_norm()).ceil().max(1.0) as usize;
        let h = theta / steps as f64;
        let was_normalized = self.normalized;
        for _ in 0..steps {
            let mut term = self.clone();
            let mut sum = self.amplitudes.clone();
            let scale = self.norm_sqr().sqrt().max(1e-300);
            for k in 1..64 {
                term = term.apply_operator(a)?;
                let f = h / k as f64;
                term.amplitudes.iter_mut().for_each(|x| *x *= f);
                let tn = term.norm_sqr().sqrt();
                sum.iter_mut().zip(&term.amplitudes).for_each(|(s, t)| *s += t);
                if tn < TAYLOR_TOL * scale {
                    break;
                }
            }
            self.amplitudes = sum;
        }
        self.normalized = was_normalized;
        Ok(())
    }

    /// Little-endian `(re, im)` pairs of 64-bit floats.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.amplitudes.len() * 16);
        for a in &self.amplitudes {
            out.extend_from_slice(&a.re.to_le_bytes());
            out.extend_from_slice(&a.im.to_le_bytes());
        }
        out
    }

    pub fn from_le_bytes(n_qubits: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != 16 << n_qubits {
            return Err(Error::InvalidArgument(format!(
                "{} bytes is not a {n_qubits}-qubit dump",
                bytes.len()
            )));
        }
        let amps = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        Self::from_amplitudes(n_qubits, amps)
    }
}

/// How `exp(theta A)` is realized for multi-term generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExpMode {
    /// Exact exponential (term-wise when the terms commute, otherwise a
    /// scaled Taylor series).
    #[default]
    Exact,
    /// First-order product of the single-term exponentials in term order.
    Trotter,
}

/// Applies `prod_k exp(theta_k A_k)` to `reference` in list order.
pub fn prepare_ansatz(
    reference: &Statevector,
    ansatz: &[(QubitOperator, f64)],
    mode: ExpMode,
) -> Result<Statevector> {
    for (a, _) in ansatz {
        check_dims(reference.n_qubits, a.n_qubits())?;
        if !a.is_anti_hermitian(ANTI_HERMITIAN_TOL) {
            return Err(Error::NotAntiHermitian(a.max_real_part()));
        }
    }
    let mut psi = reference.clone();
    for (a, theta) in ansatz {
        psi.apply_generator(a, *theta, mode)?;
    }
    Ok(psi)
}
