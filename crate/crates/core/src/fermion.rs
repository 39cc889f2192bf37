//! Molecular integrals, the second-quantized Hamiltonian and the
//! Jordan-Wigner mapping onto qubit operators.
//!
//! Spin orbitals are interleaved: spatial orbital `p` owns spin orbitals
//! `2p` (alpha) and `2p + 1` (beta). Qubit `k` holds spin orbital `k`.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliString, QubitOperator, PRUNE_TOL};

/// Tolerance on integral permutational symmetry.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// One- and two-electron integrals in an orthonormal orbital basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MolecularIntegrals {
    pub label: String,
    pub n_spatial: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub e_core: f64,
    h1: Vec<f64>,
    h2: Vec<f64>,
}

impl MolecularIntegrals {
    /// Zero integrals for `n_spatial` orbitals.
    pub fn zeros(label: &str, n_spatial: usize, n_alpha: usize, n_beta: usize) -> Result<Self> {
        if n_alpha > n_spatial || n_beta > n_spatial {
            return Err(Error::InvalidArgument(format!(
                "{n_alpha} alpha / {n_beta} beta electrons do not fit in {n_spatial} orbitals"
            )));
        }
        Ok(Self {
            label: label.to_string(),
            n_spatial,
            n_alpha,
            n_beta,
            e_core: 0.0,
            h1: vec![0.0; n_spatial * n_spatial],
            h2: vec![0.0; n_spatial.pow(4)],
        })
    }

    pub fn n_spin_orbitals(&self) -> usize {
        2 * self.n_spatial
    }

    pub fn n_electrons(&self) -> usize {
        self.n_alpha + self.n_beta
    }

    #[inline]
    pub fn h1(&self, p: usize, q: usize) -> f64 {
        self.h1[p * self.n_spatial + q]
    }

    /// Chemists' notation `(pq|rs)`.
    #[inline]
    pub fn h2(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_spatial;
        self.h2[((p * n + q) * n + r) * n + s]
    }

    /// Sets `h1[p][q]` and `h1[q][p]`.
    pub fn set_h1(&mut self, p: usize, q: usize, v: f64) {
        let n = self.n_spatial;
        self.h1[p * n + q] = v;
        self.h1[q * n + p] = v;
    }

    /// Sets `(pq|rs)` and its seven permutational images.
    pub fn set_h2(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        for (a, b, c, d) in eightfold(p, q, r, s) {
            let n = self.n_spatial;
            self.h2[((a * n + b) * n + c) * n + d] = v;
        }
    }

    /// Physicists' notation `<pq|rs> = (pr|qs)` over spin orbitals.
    #[inline]
    pub fn spin_physicist(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        if p % 2 != r % 2 || q % 2 != s % 2 {
            return 0.0;
        }
        self.h2(p / 2, r / 2, q / 2, s / 2)
    }

    /// Antisymmetrized `<pq||rs>` over spin orbitals.
    pub fn spin_antisymmetrized(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.spin_physicist(p, q, r, s) - self.spin_physicist(p, q, s, r)
    }

    /// One-electron integral over spin orbitals.
    pub fn spin_h1(&self, p: usize, q: usize) -> f64 {
        if p % 2 != q % 2 {
            0.0
        } else {
            self.h1(p / 2, q / 2)
        }
    }

    /// Spin orbitals occupied in the Hartree-Fock determinant: the lowest
    /// `n_alpha` alpha and `n_beta` beta orbitals.
    pub fn hf_occupied(&self) -> Vec<usize> {
        let mut occ: Vec<usize> = (0..self.n_alpha).map(|p| 2 * p).collect();
        occ.extend((0..self.n_beta).map(|p| 2 * p + 1));
        occ.sort_unstable();
        occ
    }

    pub fn hf_virtual(&self) -> Vec<usize> {
        let occ = self.hf_occupied();
        (0..self.n_spin_orbitals())
            .filter(|p| !occ.contains(p))
            .collect()
    }

    /// Bitstring of the Hartree-Fock determinant.
    pub fn hf_occupation(&self) -> u64 {
        self.hf_occupied().iter().fold(0u64, |m, &p| m | (1 << p))
    }

    /// Verifies the symmetry invariants of `h1` and `h2`.
    pub fn check_symmetry(&self, tol: f64) -> Result<()> {
        let n = self.n_spatial;
        for p in 0..n {
            for q in 0..n {
                if (self.h1(p, q) - self.h1(q, p)).abs() > tol {
                    return Err(Error::InvalidArgument(format!(
                        "h1 not symmetric at ({p},{q})"
                    )));
                }
                for r in 0..n {
                    for s in 0..n {
                        let v = self.h2(p, q, r, s);
                        for (a, b, c, d) in eightfold(p, q, r, s) {
                            if (self.h2(a, b, c, d) - v).abs() > tol {
                                return Err(Error::InvalidArgument(format!(
                                    "h2 not symmetric at ({p}{q}|{r}{s})"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn eightfold(p: usize, q: usize, r: usize, s: usize) -> [(usize, usize, usize, usize); 8] {
    [
        (p, q, r, s),
        (q, p, r, s),
        (p, q, s, r),
        (q, p, s, r),
        (r, s, p, q),
        (s, r, p, q),
        (r, s, q, p),
        (s, r, q, p),
    ]
}

/// Parses an FCIDUMP file (1-based indices, chemists' order).
pub fn parse_fcidump(text: &str) -> Result<MolecularIntegrals> {
    let lines: Vec<&str> = text.lines().collect();
    let end = lines
        .iter()
        .position(|l| {
            let t = l.trim().to_ascii_uppercase();
            t.starts_with("&END") || t == "/" || t.ends_with("&END") || t.starts_with("$END")
        })
        .ok_or(Error::Parse {
            line: 1,
            message: "missing namelist terminator (&END or /)".into(),
        })?;
    let header = lines[..=end].join(" ");
    if !header.trim_start().to_ascii_uppercase().starts_with("&FCI") {
        return Err(Error::Parse {
            line: 1,
            message: "header must start with &FCI".into(),
        });
    }
    let fields = parse_namelist(&header);
    let get = |key: &str| -> Result<i64> {
        let v = fields.get(key).and_then(|v| v.first()).ok_or(Error::Parse {
            line: 1,
            message: format!("header is missing {key}"),
        })?;
        v.parse::<i64>().map_err(|e| Error::Parse {
            line: 1,
            message: format!("{key}: {e}"),
        })
    };
    let norb = get("NORB")?;
    let nelec = get("NELEC")?;
    let ms2 = fields
        .get("MS2")
        .and_then(|v| v.first())
        .map(|v| v.parse::<i64>())
        .transpose()
        .map_err(|e| Error::Parse {
            line: 1,
            message: format!("MS2: {e}"),
        })?
        .unwrap_or(0);
    if norb <= 0 || nelec < 0 || (nelec + ms2) % 2 != 0 || ms2.abs() > nelec {
        return Err(Error::Parse {
            line: 1,
            message: format!("inconsistent header NORB={norb} NELEC={nelec} MS2={ms2}"),
        });
    }
    let n = norb as usize;
    let n_alpha = ((nelec + ms2) / 2) as usize;
    let n_beta = ((nelec - ms2) / 2) as usize;
    if n_alpha > n || n_beta > n {
        return Err(Error::Parse {
            line: 1,
            message: format!("{nelec} electrons do not fit in {norb} orbitals"),
        });
    }
    let mut mi = MolecularIntegrals::zeros("", n, n_alpha, n_beta)?;
    let mut seen_h1 = vec![false; n * n];
    let mut seen_h2 = vec![false; n.pow(4)];

    for (offset, raw) in lines[end + 1..].iter().enumerate() {
        let lineno = end + 2 + offset;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", toks.len())));
        }
        let value: f64 = toks[0]
            .replace(['D', 'd'], "e")
            .parse()
            .map_err(|e| err(format!("value: {e}")))?;
        let mut idx = [0usize; 4];
        for (k, t) in toks[1..].iter().enumerate() {
            let i: i64 = t.parse().map_err(|e| err(format!("index: {e}")))?;
            if i < 0 || i > norb {
                return Err(err(format!("index {i} outside 0..={norb}")));
            }
            idx[k] = i as usize;
        }
        match idx {
            [0, 0, 0, 0] => mi.e_core = value,
            [i, j, 0, 0] if i > 0 && j > 0 => {
                let (p, q) = (i - 1, j - 1);
                for (a, b) in [(p, q), (q, p)] {
                    let slot = a * n + b;
                    if seen_h1[slot] && (mi.h1[slot] - value).abs() > SYMMETRY_TOL {
                        return Err(err(format!(
                            "h1[{i}][{j}] = {value} conflicts with earlier {}",
                            mi.h1[slot]
                        )));
                    }
                }
                seen_h1[p * n + q] = true;
                seen_h1[q * n + p] = true;
                mi.set_h1(p, q, value);
            }
            // orbital energies, which carry no information we use
            [i, 0, 0, 0] if i > 0 => {}
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                let (p, q, r, s) = (i - 1, j - 1, k - 1, l - 1);
                for (a, b, c, d) in eightfold(p, q, r, s) {
                    let slot = ((a * n + b) * n + c) * n + d;
                    if seen_h2[slot] && (mi.h2[slot] - value).abs() > SYMMETRY_TOL {
                        return Err(err(format!(
                            "({i}{j}|{k}{l}) = {value} breaks permutational symmetry (earlier {})",
                            mi.h2[slot]
                        )));
                    }
                }
                for (a, b, c, d) in eightfold(p, q, r, s) {
                    seen_h2[((a * n + b) * n + c) * n + d] = true;
                }
                mi.set_h2(p, q, r, s, value);
            }
            _ => return Err(err(format!("unsupported index pattern {idx:?}"))),
        }
    }
    Ok(mi)
}

fn parse_namelist(header: &str) -> HashMap<String, Vec<String>> {
    let cleaned = header
        .replace("&FCI", " ")
        .replace("&fci", " ")
        .replace("&END", " ")
        .replace("&end", " ")
        .replace('=', " = ")
        .replace(',', " ");
    let toks: Vec<&str> = cleaned
        .split_whitespace()
        .filter(|t| *t != "/")
        .collect();
    let mut out: HashMap<String, Vec<String>> = HashMap::new();
    let mut current: Option<String> = None;
    let mut i = 0;
    while i < toks.len() {
        if i + 1 < toks.len() && toks[i + 1] == "=" {
            let key = toks[i].to_ascii_uppercase();
            out.entry(key.clone()).or_default();
            current = Some(key);
            i += 2;
            continue;
        }
        if let Some(k) = &current {
            out.get_mut(k).expect("key inserted").push(toks[i].to_string());
        }
        i += 1;
    }
    out
}

/// Writes integrals in FCIDUMP form, one line per unique nonzero element.
pub fn write_fcidump(mi: &MolecularIntegrals) -> String {
    let n = mi.n_spatial;
    let mut s = format!(
        " &FCI NORB={},NELEC={},MS2={},\n  ORBSYM={}\n  ISYM=1,\n &END\n",
        n,
        mi.n_electrons(),
        mi.n_alpha as i64 - mi.n_beta as i64,
        "1,".repeat(n)
    );
    for p in 0..n {
        for q in 0..=p {
            for r in 0..n {
                for t in 0..=r {
                    if p * (p + 1) / 2 + q < r * (r + 1) / 2 + t {
                        continue;
                    }
                    let v = mi.h2(p, q, r, t);
                    if v != 0.0 {
                        s.push_str(&format!("{v:.17e} {} {} {} {}\n", p + 1, q + 1, r + 1, t + 1));
                    }
                }
            }
        }
    }
    for p in 0..n {
        for q in 0..=p {
            let v = mi.h1(p, q);
            if v != 0.0 {
                s.push_str(&format!("{v:.17e} {} {} 0 0\n", p + 1, q + 1));
            }
        }
    }
    s.push_str(&format!("{:.17e} 0 0 0 0\n", mi.e_core));
    s
}

/// One fixture entry of the JSON manifest.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FixtureEntry {
    pub label: String,
    #[serde(default)]
    pub molecule: String,
    pub geometry: String,
    #[serde(default)]
    pub r: f64,
    pub basis: String,
    pub path: String,
    pub n_qubits: usize,
    #[serde(default)]
    pub n_alpha: Option<usize>,
    #[serde(default)]
    pub n_beta: Option<usize>,
    #[serde(default)]
    pub hf_energy: Option<f64>,
    pub fci_ground_energy: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FixtureManifest {
    #[serde(default)]
    pub backend: String,
    pub fixtures: Vec<FixtureEntry>,
    #[serde(default)]
    pub errors: Vec<serde_json::Value>,
    #[serde(skip)]
    pub root: PathBuf,
}

impl FixtureManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut m: FixtureManifest = serde_json::from_str(&text)?;
        m.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }

    pub fn get(&self, label: &str) -> Option<&FixtureEntry> {
        self.fixtures.iter().find(|f| f.label == label)
    }

    pub fn path_of(&self, entry: &FixtureEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    pub fn load_integrals(&self, entry: &FixtureEntry) -> Result<MolecularIntegrals> {
        let text = std::fs::read_to_string(self.path_of(entry))?;
        let mut mi = parse_fcidump(&text)?;
        mi.label = entry.label.clone();
        Ok(mi)
    }

    /// Fixtures of one molecule and basis, ordered by geometry parameter.
    pub fn series(&self, molecule: &str, basis: &str) -> Vec<&FixtureEntry> {
        let mut v: Vec<&FixtureEntry> = self
            .fixtures
            .iter()
            .filter(|f| f.molecule.eq_ignore_ascii_case(molecule) && f.basis.eq_ignore_ascii_case(basis))
            .collect();
        v.sort_by(|a, b| a.r.total_cmp(&b.r));
        v
    }
}

/// A product of ladder operators: `(spin orbital, is_creation)`, leftmost first.
pub type LadderProduct = Vec<(usize, bool)>;

/// A sum of ladder-operator products plus a constant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FermionOperator {
    pub terms: Vec<(LadderProduct, Complex64)>,
    pub constant: Complex64,
}

impl FermionOperator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, ops: LadderProduct, coeff: Complex64) {
        if ops.is_empty() {
            self.constant += coeff;
        } else {
            self.terms.push((ops, coeff));
        }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms
            .iter()
            .flat_map(|(ops, _)| ops.iter().map(|(p, _)| *p))
            .max()
    }

    /// Hermitian conjugate.
    pub fn adjoint(&self) -> FermionOperator {
        FermionOperator {
            terms: self
                .terms
                .iter()
                .map(|(ops, c)| (ops.iter().rev().map(|&(p, d)| (p, !d)).collect(), c.conj()))
                .collect(),
            constant: self.constant.conj(),
        }
    }
}

/// `N = sum_p a+_p a_p`.
pub fn number_operator(n_spin_orbitals: usize) -> FermionOperator {
    let mut f = FermionOperator::new();
    for p in 0..n_spin_orbitals {
        f.push(vec![(p, true), (p, false)], Complex64::new(1.0, 0.0));
    }
    f
}

/// `S_z = (N_alpha - N_beta) / 2`.
pub fn sz_operator(n_spin_orbitals: usize) -> FermionOperator {
    let mut f = FermionOperator::new();
    for p in 0..n_spin_orbitals {
        let s = if p % 2 == 0 { 0.5 } else { -0.5 };
        f.push(vec![(p, true), (p, false)], Complex64::new(s, 0.0));
    }
    f
}

/// Second-quantized electronic Hamiltonian
/// `sum h_pq a+_p a_q + 1/2 sum <pq|rs> a+_p a+_q a_s a_r + e_core`.
pub fn build_hamiltonian(mi: &MolecularIntegrals) -> FermionOperator {
    let n = mi.n_spin_orbitals();
    let mut f = FermionOperator::new();
    f.constant = Complex64::new(mi.e_core, 0.0);
    for p in 0..n {
        for q in 0..n {
            let v = mi.spin_h1(p, q);
            if v != 0.0 {
                f.push(vec![(p, true), (q, false)], Complex64::new(v, 0.0));
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            for r in 0..n {
                for s in 0..n {
                    if r == s {
                        continue;
                    }
                    let v = mi.spin_physicist(p, q, r, s);
                    if v != 0.0 {
                        f.push(
                            vec![(p, true), (q, true), (s, false), (r, false)],
                            Complex64::new(0.5 * v, 0.0),
                        );
                    }
                }
            }
        }
    }
    f
}

/// Canonical normal-ordered form: creators left of annihilators, each
/// block in descending index order, like terms merged and terms below
/// [`PRUNE_TOL`] dropped. Terms come out sorted.
pub fn normal_order(f: &FermionOperator) -> FermionOperator {
    let mut acc: HashMap<LadderProduct, Complex64> = HashMap::new();
    let mut constant = f.constant;
    let mut stack: Vec<(LadderProduct, Complex64)> = f.terms.clone();
    while let Some((ops, c)) = stack.pop() {
        // first annihilator directly followed by a creator
        if let Some(i) = (0..ops.len().saturating_sub(1)).find(|&i| !ops[i].1 && ops[i + 1].1) {
            let mut swapped = ops.clone();
            swapped.swap(i, i + 1);
            stack.push((swapped, -c));
            if ops[i].0 == ops[i + 1].0 {
                let mut contracted = ops.clone();
                contracted.drain(i..i + 2);
                stack.push((contracted, c));
            }
            continue;
        }
        let split = ops.iter().position(|o| !o.1).unwrap_or(ops.len());
        let mut sign = 1.0;
        let mut sorted = ops.clone();
        let (creators, annihilators) = sorted.split_at_mut(split);
        for block in [creators, annihilators] {
            // bubble sort keeps track of the permutation parity
            for a in 0..block.len() {
                for b in 0..block.len() - 1 - a {
                    if block[b].0 < block[b + 1].0 {
                        block.swap(b, b + 1);
                        sign = -sign;
                    }
                }
            }
            if block.windows(2).any(|w| w[0].0 == w[1].0) {
                sign = 0.0;
            }
        }
        if sign == 0.0 {
            continue;
        }
        if sorted.is_empty() {
            constant += c * sign;
        } else {
            *acc.entry(sorted).or_default() += c * sign;
        }
    }
    let mut terms: Vec<(LadderProduct, Complex64)> = acc.into_iter().filter(|(_, c)| c.norm() > PRUNE_TOL).collect();
    terms.sort_by(|a, b| a.0.cmp(&b.0));
    FermionOperator {
        terms,
        constant: if constant.norm() > PRUNE_TOL { constant } else { Complex64::default() },
    }
}

/// Fermion-to-qubit encodings. Only Jordan-Wigner is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mapping {
    #[default]
    JordanWigner,
}

pub fn map_fermion(f: &FermionOperator, n_qubits: usize, mapping: Mapping) -> Result<QubitOperator> {
    match mapping {
        Mapping::JordanWigner => jordan_wigner(f, n_qubits),
    }
}

fn ladder_terms(p: usize, n_qubits: usize, creation: bool) -> [(PauliString, Complex64); 2] {
    let tail = (1u64 << p) - 1;
    let bit = 1u64 << p;
    let x = PauliString::from_masks(n_qubits, bit, tail).expect("index checked");
    let y = PauliString::from_masks(n_qubits, bit, tail | bit).expect("index checked");
    let yc = if creation { -0.5 } else { 0.5 };
    [(x, Complex64::new(0.5, 0.0)), (y, Complex64::new(0.0, yc))]
}

/// Jordan-Wigner: `a+_p -> Z_0..Z_{p-1} (X_p - iY_p)/2`.
pub fn jordan_wigner(f: &FermionOperator, n_qubits: usize) -> Result<QubitOperator> {
    if let Some(m) = f.max_index() {
        if m >= n_qubits {
            return Err(Error::IndexOutOfRange {
                index: m,
                limit: n_qubits,
                what: "qubits",
            });
        }
    }
    let mut acc: HashMap<PauliString, Complex64> = HashMap::new();
    if f.constant != Complex64::default() {
        acc.insert(PauliString::identity(n_qubits), f.constant);
    }
    for (ops, coeff) in &f.terms {
        let ladders: Vec<[(PauliString, Complex64); 2]> = ops
            .iter()
            .map(|&(p, dag)| ladder_terms(p, n_qubits, dag))
            .collect();
        let k = ladders.len();
        for choice in 0..(1u32 << k) {
            let mut p = PauliString::identity(n_qubits);
            let mut c = *coeff;
            for (m, lad) in ladders.iter().enumerate() {
                let (s, w) = lad[((choice >> m) & 1) as usize];
                let (prod, phase) = p.mul_unchecked(&s);
                p = prod;
                c *= w * phase.to_complex();
            }
            *acc.entry(p).or_default() += c;
        }
    }
    Ok(QubitOperator::from_terms(n_qubits, acc)?.simplify(PRUNE_TOL))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Uccsd,
    Generalized,
    UsccConnected,
    UsccDisconnected,
    QubitPool,
    SingletGeneralized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExcitationKind {
    Single,
    Double,
    Triple,
    Quadruple,
    Pauli,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorBody {
    /// `T = a+_{create...} a_{annihilate reversed...}`, both lists ascending.
    Fermionic {
        annihilate: Vec<usize>,
        create: Vec<usize>,
    },
    /// Generator `i P`.
    Pauli(PauliString),
    /// A fixed anti-Hermitian combination of ladder products, such as a
    /// spin-adapted excitation; `label` names it in reports.
    Combination {
        label: String,
        operator: FermionOperator,
    },
}

/// A cluster-type generator; its realized form is `T - T+`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationGenerator {
    pub body: GeneratorBody,
    pub provenance: Provenance,
}

impl ExcitationGenerator {
    /// Excitation moving electrons from `annihilate` to `create`. Index
    /// lists are sorted; spin conservation is checked on realization.
    pub fn fermionic(mut annihilate: Vec<usize>, mut create: Vec<usize>, provenance: Provenance) -> Self {
        annihilate.sort_unstable();
        create.sort_unstable();
        Self {
            body: GeneratorBody::Fermionic { annihilate, create },
            provenance,
        }
    }

    pub fn pauli(p: PauliString) -> Self {
        Self {
            body: GeneratorBody::Pauli(p),
            provenance: Provenance::QubitPool,
        }
    }

    /// Generator from an anti-Hermitian fermionic combination.
    pub fn combination(label: impl Into<String>, operator: FermionOperator, provenance: Provenance) -> Self {
        Self {
            body: GeneratorBody::Combination {
                label: label.into(),
                operator,
            },
            provenance,
        }
    }

    pub fn kind(&self) -> ExcitationKind {
        match &self.body {
            GeneratorBody::Pauli(_) => ExcitationKind::Pauli,
            GeneratorBody::Combination { operator, .. } => {
                let rank = operator
                    .terms
                    .iter()
                    .map(|(ops, _)| ops.iter().filter(|(_, dag)| *dag).count())
                    .max()
                    .unwrap_or(0);
                if rank <= 1 {
                    ExcitationKind::Single
                } else {
                    ExcitationKind::Double
                }
            }
            GeneratorBody::Fermionic { create, .. } => match create.len() {
                1 => ExcitationKind::Single,
                2 => ExcitationKind::Double,
                3 => ExcitationKind::Triple,
                _ => ExcitationKind::Quadruple,
            },
        }
    }

    /// Flat index list for reports: annihilated then created orbitals.
    pub fn indices(&self) -> Vec<usize> {
        match &self.body {
            GeneratorBody::Pauli(_) => vec![],
            GeneratorBody::Combination { operator, .. } => {
                let mut v: Vec<usize> = operator.terms.iter().flat_map(|(ops, _)| ops.iter().map(|o| o.0)).collect();
                v.sort_unstable();
                v.dedup();
                v
            }
            GeneratorBody::Fermionic { annihilate, create } => {
                annihilate.iter().chain(create.iter()).copied().collect()
            }
        }
    }

    pub fn is_spin_conserving(&self) -> bool {
        match &self.body {
            GeneratorBody::Pauli(_) => true,
            GeneratorBody::Combination { operator, .. } => operator.terms.iter().all(|(ops, _)| {
                let net = |dag: bool| ops.iter().filter(|o| o.1 == dag && o.0 % 2 == 0).count();
                net(true) == net(false)
            }),
            GeneratorBody::Fermionic { annihilate, create } => {
                let alpha = |v: &Vec<usize>| v.iter().filter(|p| *p % 2 == 0).count();
                annihilate.len() == create.len() && alpha(annihilate) == alpha(create)
            }
        }
    }

    /// The fermionic excitation operator `T` (without `- T+`).
    pub fn excitation_operator(&self) -> Option<FermionOperator> {
        match &self.body {
            GeneratorBody::Pauli(_) | GeneratorBody::Combination { .. } => None,
            GeneratorBody::Fermionic { annihilate, create } => {
                let mut ops: LadderProduct = create.iter().map(|&p| (p, true)).collect();
                ops.extend(annihilate.iter().rev().map(|&p| (p, false)));
                let mut f = FermionOperator::new();
                f.push(ops, Complex64::new(1.0, 0.0));
                Some(f)
            }
        }
    }
}

impl fmt::Display for ExcitationGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            GeneratorBody::Pauli(p) => write!(f, "i*{p}"),
            GeneratorBody::Combination { label, .. } => f.write_str(label),
            GeneratorBody::Fermionic { annihilate, create } => {
                let j = |v: &Vec<usize>| v.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
                write!(f, "{}->{}", j(annihilate), j(create))
            }
        }
    }
}

/// Qubit image of the anti-Hermitian generator `T - T+` (or `iP`).
///
/// The result may be empty when `T - T+` vanishes identically.
pub fn realize_generator(g: &ExcitationGenerator, n_qubits: usize) -> Result<QubitOperator> {
    match &g.body {
        GeneratorBody::Pauli(p) => {
            if p.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch {
                    expected: n_qubits,
                    found: p.n_qubits(),
                });
            }
            Ok(QubitOperator::from_string(*p, Complex64::new(0.0, 1.0)))
        }
        GeneratorBody::Combination { operator, .. } => {
            let q = jordan_wigner(operator, n_qubits)?;
            if !q.is_anti_hermitian(1e-12) {
                return Err(Error::InvalidGenerator(format!("{g}: combination is not anti-Hermitian")));
            }
            Ok(q)
        }
        GeneratorBody::Fermionic { annihilate, create } => {
            if annihilate.is_empty() || annihilate.len() != create.len() {
                return Err(Error::InvalidGenerator(format!(
                    "{g}: rank mismatch between annihilators and creators"
                )));
            }
            let distinct = |v: &Vec<usize>| v.windows(2).all(|w| w[0] != w[1]);
            if !distinct(annihilate) || !distinct(create) {
                return Err(Error::InvalidGenerator(format!("{g}: repeated index")));
            }
            if !g.is_spin_conserving() {
                return Err(Error::InvalidGenerator(format!("{g}: does not conserve spin")));
            }
            let t = g.excitation_operator().expect("fermionic body");
            let mut f = t.clone();
            for (ops, c) in t.adjoint().terms {
                f.push(ops, -c);
            }
            jordan_wigner(&f, n_qubits)
        }
    }
}
