//! Pauli strings in symplectic form and complex-weighted sums of them.
//!
//! Bit `i` of `(x_mask, z_mask)` encodes the factor on qubit `i`:
//! `(0,0) = I`, `(1,0) = X`, `(1,1) = Y`, `(0,1) = Z`. A string carries no
//! phase; every phase lives in [`QubitOperator`] coefficients. Up to 64
//! qubits are supported.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{check_dims, Error, Result};

/// Default magnitude below which coefficients are pruned.
pub const PRUNE_TOL: f64 = 1e-12;

pub const MAX_QUBITS: usize = 64;

/// A power of `i`: `i^k` for `k` in `0..4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    pub fn power(self) -> u32 {
        self.0 as u32
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A tensor product of single-qubit Pauli matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    x_mask: u64,
    z_mask: u64,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        Self {
            n_qubits,
            x_mask: 0,
            z_mask: 0,
        }
    }

    /// Builds a string from raw masks; bits at or above `n_qubits` are rejected.
    pub fn from_masks(n_qubits: usize, x_mask: u64, z_mask: u64) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "{n_qubits} qubits exceeds the supported {MAX_QUBITS}"
            )));
        }
        let valid = if n_qubits == 64 {
            u64::MAX
        } else {
            (1u64 << n_qubits) - 1
        };
        if (x_mask | z_mask) & !valid != 0 {
            let bit = 63 - ((x_mask | z_mask) & !valid).leading_zeros() as usize;
            return Err(Error::IndexOutOfRange {
                index: bit,
                limit: n_qubits,
                what: "qubits",
            });
        }
        Ok(Self {
            n_qubits,
            x_mask,
            z_mask,
        })
    }

    /// Builds a string from `(qubit, factor)` pairs; later factors on the
    /// same qubit replace earlier ones.
    pub fn from_factors(n_qubits: usize, factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut p = Self::identity(n_qubits);
        for &(q, f) in factors {
            p.set(q, f)?;
        }
        Ok(p)
    }

    pub fn single(n_qubits: usize, qubit: usize, pauli: Pauli) -> Result<Self> {
        Self::from_factors(n_qubits, &[(qubit, pauli)])
    }

    pub fn set(&mut self, qubit: usize, pauli: Pauli) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::IndexOutOfRange {
                index: qubit,
                limit: self.n_qubits,
                what: "qubits",
            });
        }
        let bit = 1u64 << qubit;
        let (x, z) = pauli.bits();
        self.x_mask = if x { self.x_mask | bit } else { self.x_mask & !bit };
        self.z_mask = if z { self.z_mask | bit } else { self.z_mask & !bit };
        Ok(())
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        let x = (self.x_mask >> qubit) & 1 == 1;
        let z = (self.z_mask >> qubit) & 1 == 1;
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    /// True when the string is a product of `I` and `Z` only.
    pub fn is_diagonal(&self) -> bool {
        self.x_mask == 0
    }

    pub fn weight(&self) -> u32 {
        (self.x_mask | self.z_mask).count_ones()
    }

    fn y_count(&self) -> u32 {
        (self.x_mask & self.z_mask).count_ones()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let s = (self.x_mask & other.z_mask).count_ones() + (self.z_mask & other.x_mask).count_ones();
        s % 2 == 0
    }

    /// Action on a computational basis state: `P|j> = phase * |j ^ x_mask>`.
    #[inline]
    pub fn apply_to_basis(&self, j: u64) -> (u64, Phase) {
        let sign = (self.z_mask & j).count_ones() * 2;
        (j ^ self.x_mask, Phase::from_power(self.y_count() + sign))
    }

    /// Product `self * other = phase * result`.
    pub fn mul(&self, other: &PauliString) -> Result<(PauliString, Phase)> {
        check_dims(self.n_qubits, other.n_qubits)?;
        Ok(self.mul_unchecked(other))
    }

    #[inline]
    pub(crate) fn mul_unchecked(&self, other: &PauliString) -> (PauliString, Phase) {
        // P = i^{|x&z|} X^x Z^z, and Z^z1 X^x2 = (-1)^{|z1&x2|} X^x2 Z^z1.
        let x = self.x_mask ^ other.x_mask;
        let z = self.z_mask ^ other.z_mask;
        let result = PauliString {
            n_qubits: self.n_qubits,
            x_mask: x,
            z_mask: z,
        };
        let k = self.y_count() + other.y_count() + 2 * (self.z_mask & other.x_mask).count_ones() + 4
            - result.y_count() % 4;
        (result, Phase::from_power(k))
    }

    /// Word with qubit 0 as the leftmost character.
    pub fn to_word(&self) -> String {
        (0..self.n_qubits).map(|q| self.get(q).as_char()).collect()
    }

    pub fn from_word(word: &str) -> Result<Self> {
        let n = word.chars().count();
        let mut p = Self::identity(n);
        for (q, c) in word.chars().enumerate() {
            let f = match c {
                'I' | 'i' => Pauli::I,
                'X' | 'x' => Pauli::X,
                'Y' | 'y' => Pauli::Y,
                'Z' | 'z' => Pauli::Z,
                other => {
                    return Err(Error::Parse {
                        line: 0,
                        message: format!("unknown Pauli factor '{other}'"),
                    })
                }
            };
            p.set(q, f)?;
        }
        Ok(p)
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.z_mask, self.x_mask, self.n_qubits).cmp(&(other.z_mask, other.x_mask, other.n_qubits))
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_word())
    }
}

/// A complex-weighted sum of Pauli strings on a fixed number of qubits.
///
/// Terms iterate in ascending `(z_mask, x_mask)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitOperator {
    n_qubits: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl QubitOperator {
    pub fn zero(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_qubits: usize, value: Complex64) -> Self {
        let mut op = Self::zero(n_qubits);
        op.add_term(PauliString::identity(n_qubits), value)
            .expect("identity matches");
        op
    }

    pub fn from_string(p: PauliString, coeff: Complex64) -> Self {
        let mut op = Self::zero(p.n_qubits());
        op.terms.insert(p, coeff);
        op
    }

    /// Collects terms, merging duplicates. No pruning happens here.
    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, Complex64)>,
    {
        let mut op = Self::zero(n_qubits);
        for (p, c) in terms {
            op.add_term(p, c)?;
        }
        Ok(op)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, p: &PauliString) -> Complex64 {
        self.terms.get(p).copied().unwrap_or_default()
    }

    pub fn add_term(&mut self, p: PauliString, coeff: Complex64) -> Result<()> {
        check_dims(self.n_qubits, p.n_qubits())?;
        *self.terms.entry(p).or_default() += coeff;
        Ok(())
    }

    pub fn add(&self, other: &QubitOperator) -> Result<QubitOperator> {
        check_dims(self.n_qubits, other.n_qubits)?;
        let mut out = self.clone();
        for (p, c) in &other.terms {
            *out.terms.entry(*p).or_default() += c;
        }
        Ok(out.simplify(PRUNE_TOL))
    }

    pub fn sub(&self, other: &QubitOperator) -> Result<QubitOperator> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> QubitOperator {
        QubitOperator {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(p, c)| (*p, c * factor)).collect(),
        }
    }

    pub fn multiply(&self, other: &QubitOperator) -> Result<QubitOperator> {
        check_dims(self.n_qubits, other.n_qubits)?;
        let mut out = QubitOperator::zero(self.n_qubits);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let (p, phase) = a.mul_unchecked(b);
                *out.terms.entry(p).or_default() += ca * cb * phase.to_complex();
            }
        }
        Ok(out.simplify(PRUNE_TOL))
    }

    /// `[A, B] = AB - BA`. Commuting string pairs cancel exactly, so only
    /// anticommuting pairs contribute `2 * a * b`.
    pub fn commutator(&self, other: &QubitOperator) -> Result<QubitOperator> {
        check_dims(self.n_qubits, other.n_qubits)?;
        let mut out = QubitOperator::zero(self.n_qubits);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if a.commutes_with(b) {
                    continue;
                }
                let (p, phase) = a.mul_unchecked(b);
                *out.terms.entry(p).or_default() += 2.0 * ca * cb * phase.to_complex();
            }
        }
        Ok(out.simplify(PRUNE_TOL))
    }

    /// Drops every term with `|coeff| <= tol`.
    pub fn simplify(mut self, tol: f64) -> QubitOperator {
        self.terms.retain(|_, c| c.norm() > tol);
        self
    }

    pub fn adjoint(&self) -> QubitOperator {
        QubitOperator {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(p, c)| (*p, c.conj())).collect(),
        }
    }

    /// Every Pauli string is Hermitian, so the operator is Hermitian iff all
    /// coefficients are real.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.re.abs() <= tol)
    }

    pub fn max_real_part(&self) -> f64 {
        self.terms.values().map(|c| c.re.abs()).fold(0.0, f64::max)
    }

    /// Sum of coefficient magnitudes, an upper bound on the spectral norm.
    pub fn one_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    pub fn mutually_commuting(&self) -> bool {
        let keys: Vec<&PauliString> = self.terms.keys().collect();
        keys.iter()
            .enumerate()
            .all(|(i, a)| keys[i + 1..].iter().all(|b| a.commutes_with(b)))
    }

    /// Serializes one term per line as `coeff_re coeff_im WORD`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (p, c) in &self.terms {
            s.push_str(&format!("{:?} {:?} {}\n", c.re, c.im, p.to_word()));
        }
        s
    }

    /// Parses the line format written by [`QubitOperator::to_text`]. Blank
    /// lines and `#` comments are skipped.
    pub fn from_text(text: &str, n_qubits: usize) -> Result<QubitOperator> {
        let mut op = QubitOperator::zero(n_qubits);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(parse_err(format!("expected 3 fields, found {}", fields.len())));
            }
            let re: f64 = fields[0]
                .parse()
                .map_err(|e| parse_err(format!("real part: {e}")))?;
            let im: f64 = fields[1]
                .parse()
                .map_err(|e| parse_err(format!("imaginary part: {e}")))?;
            let p = PauliString::from_word(fields[2]).map_err(|e| parse_err(e.to_string()))?;
            if p.n_qubits() != n_qubits {
                return Err(parse_err(format!(
                    "word has {} qubits, expected {n_qubits}",
                    p.n_qubits()
                )));
            }
            op.add_term(p, Complex64::new(re, im))?;
        }
        Ok(op)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_qubit_products() {
        let x = PauliString::single(1, 0, Pauli::X).unwrap();
        let y = PauliString::single(1, 0, Pauli::Y).unwrap();
        let z = PauliString::single(1, 0, Pauli::Z).unwrap();
        assert_eq!(x.mul(&y).unwrap(), (z, Phase::I));
        assert_eq!(y.mul(&x).unwrap(), (z, Phase::MINUS_I));
        assert_eq!(y.mul(&z).unwrap(), (x, Phase::I));
        assert_eq!(z.mul(&x).unwrap(), (y, Phase::I));
    }

    #[test]
    fn involution_on_all_two_qubit_strings() {
        for x in 0..4u64 {
            for z in 0..4u64 {
                let p = PauliString::from_masks(2, x, z).unwrap();
                let (r, ph) = p.mul(&p).unwrap();
                assert!(r.is_identity());
                assert_eq!(ph, Phase::ONE);
            }
        }
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let a = PauliString::identity(2);
        let b = PauliString::identity(3);
        assert!(matches!(a.mul(&b), Err(Error::DimensionMismatch { .. })));
        let op = QubitOperator::zero(2);
        assert!(op.add(&QubitOperator::zero(3)).is_err());
    }

    #[test]
    fn commutators_of_simple_strings() {
        let z0 = QubitOperator::from_string(PauliString::single(2, 0, Pauli::Z).unwrap(), c(1.0, 0.0));
        let z1 = QubitOperator::from_string(PauliString::single(2, 1, Pauli::Z).unwrap(), c(1.0, 0.0));
        assert!(z0.commutator(&z1).unwrap().is_empty());

        let x0 = QubitOperator::from_string(PauliString::single(1, 0, Pauli::X).unwrap(), c(1.0, 0.0));
        let z0 = QubitOperator::from_string(PauliString::single(1, 0, Pauli::Z).unwrap(), c(1.0, 0.0));
        let comm = x0.commutator(&z0).unwrap();
        let y0 = PauliString::single(1, 0, Pauli::Y).unwrap();
        assert_eq!(comm.n_terms(), 1);
        assert_eq!(comm.coefficient(&y0), c(0.0, -2.0));
    }

    #[test]
    fn cancellation_and_pruning() {
        let x0 = PauliString::single(1, 0, Pauli::X).unwrap();
        let op = QubitOperator::from_terms(1, [(x0, c(1.0, 0.0)), (x0, c(-1.0, 0.0))]).unwrap();
        assert!(op.simplify(PRUNE_TOL).is_empty());

        let z0 = PauliString::single(1, 0, Pauli::Z).unwrap();
        let tiny = QubitOperator::from_string(z0, c(1e-15, 0.0));
        assert!(tiny.simplify(1e-12).is_empty());
    }

    #[test]
    fn text_round_trip() {
        let p = PauliString::from_word("XIZY").unwrap();
        assert_eq!(p.get(0), Pauli::X);
        assert_eq!(p.get(3), Pauli::Y);
        let op = QubitOperator::from_terms(
            4,
            [(p, c(0.5, 0.0)), (PauliString::identity(4), c(-1.25, 0.125))],
        )
        .unwrap();
        let text = op.to_text();
        assert!(text.contains("0.5 0.0 XIZY"));
        assert_eq!(QubitOperator::from_text(&text, 4).unwrap(), op);
        assert!(QubitOperator::from_text("0.5 XIZY", 4).is_err());
        assert!(QubitOperator::from_text("0.5 0 XQZY", 4).is_err());
    }

    #[test]
    fn term_order_is_z_then_x() {
        let a = PauliString::from_masks(2, 0b11, 0b00).unwrap();
        let b = PauliString::from_masks(2, 0b00, 0b01).unwrap();
        let op = QubitOperator::from_terms(2, [(b, c(1.0, 0.0)), (a, c(1.0, 0.0))]).unwrap();
        let keys: Vec<_> = op.iter().map(|(p, _)| *p).collect();
        assert_eq!(keys, vec![a, b]);
    }

    #[test]
    fn masks_beyond_register_rejected() {
        assert!(PauliString::from_masks(2, 0b100, 0).is_err());
        assert!(PauliString::single(2, 2, Pauli::X).is_err());
    }
}
