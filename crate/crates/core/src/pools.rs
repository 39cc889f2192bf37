//! Operator pools: fixed UCCSD, generalized singles and doubles, Pauli-string
//! pools, and the classically screened selective pool with disconnected
//! triples and quadruples.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{
    normal_order, realize_generator, ExcitationGenerator, FermionOperator, GeneratorBody, LadderProduct,
    MolecularIntegrals, Provenance,
};
use crate::pauli::QubitOperator;

/// Energy-denominator magnitude below which an MP2 amplitude is zeroed.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolFlavor {
    Uccsd,
    GeneralizedSd,
    SingletGsd,
    Qubit,
    Uscc,
}

impl fmt::Display for PoolFlavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PoolFlavor::Uccsd => "uccsd",
            PoolFlavor::GeneralizedSd => "generalized-sd",
            PoolFlavor::SingletGsd => "singlet-gsd",
            PoolFlavor::Qubit => "qubit",
            PoolFlavor::Uscc => "uscc",
        })
    }
}

#[derive(Debug, Clone)]
pub struct PoolEntry {
    pub generator: ExcitationGenerator,
    /// Anti-Hermitian qubit image of the generator.
    pub operator: QubitOperator,
    pub screening: Option<f64>,
    /// Screening round that admitted the entry.
    pub round: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct OperatorPool {
    pub flavor: PoolFlavor,
    pub n_qubits: usize,
    pub entries: Vec<PoolEntry>,
}

impl OperatorPool {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn generators(&self) -> impl Iterator<Item = &ExcitationGenerator> {
        self.entries.iter().map(|e| &e.generator)
    }

    pub fn operators(&self) -> Vec<QubitOperator> {
        self.entries.iter().map(|e| e.operator.clone()).collect()
    }

    pub fn count_by_rank(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            let rank = match &e.generator.body {
                GeneratorBody::Fermionic { create, .. } => create.len(),
                GeneratorBody::Pauli(_) => 0,
                GeneratorBody::Combination { .. } => match e.generator.kind() {
                    crate::fermion::ExcitationKind::Single => 1,
                    _ => 2,
                },
            };
            *out.entry(rank).or_insert(0) += 1;
        }
        out
    }

    /// One JSON object per line: flavor, indices, screening value, term count.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let line = serde_json::json!({
                "flavor": self.flavor,
                "generator": e.generator.to_string(),
                "indices": e.generator.indices(),
                "screening_value": e.screening,
                "n_pauli_terms": e.operator.n_terms(),
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }

    fn push_realized(&mut self, generator: ExcitationGenerator, screening: Option<f64>, round: Option<usize>) -> Result<()> {
        let operator = realize_generator(&generator, self.n_qubits)?;
        if operator.is_empty() {
            return Ok(());
        }
        self.entries.push(PoolEntry {
            generator,
            operator,
            screening,
            round,
        });
        Ok(())
    }
}

fn same_spin(p: usize, q: usize) -> bool {
    p % 2 == q % 2
}

fn pairs(orbs: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (k, &p) in orbs.iter().enumerate() {
        for &q in &orbs[k + 1..] {
            out.push((p, q));
        }
    }
    out
}

fn alpha_count(v: &[usize]) -> usize {
    v.iter().filter(|p| *p % 2 == 0).count()
}

/// Spin-conserving singles `i -> a` and doubles `ij -> ab` from occupied to
/// virtual spin orbitals, with `i < j` and `a < b`.
pub fn uccsd_pool(mi: &MolecularIntegrals) -> Result<OperatorPool> {
    let occ = mi.hf_occupied();
    let virt = mi.hf_virtual();
    let mut pool = OperatorPool {
        flavor: PoolFlavor::Uccsd,
        n_qubits: mi.n_spin_orbitals(),
        entries: Vec::new(),
    };
    if virt.is_empty() || occ.is_empty() {
        log::warn!("{}: no occupied-virtual excitations, empty pool", mi.label);
        return Ok(pool);
    }
    for &i in &occ {
        for &a in &virt {
            if same_spin(i, a) {
                pool.push_realized(ExcitationGenerator::fermionic(vec![i], vec![a], Provenance::Uccsd), None, None)?;
            }
        }
    }
    for (i, j) in pairs(&occ) {
        for (a, b) in pairs(&virt) {
            if alpha_count(&[i, j]) == alpha_count(&[a, b]) {
                pool.push_realized(
                    ExcitationGenerator::fermionic(vec![i, j], vec![a, b], Provenance::Uccsd),
                    None,
                    None,
                )?;
            }
        }
    }
    Ok(pool)
}

/// Spin-conserving singles `p -> q` (`p < q`) and doubles `pq -> rs` over all
/// spin orbitals, one entry per unordered pair of index pairs. Generators
/// whose qubit image vanishes are dropped.
pub fn generalized_pool(mi: &MolecularIntegrals) -> Result<OperatorPool> {
    let n = mi.n_spin_orbitals();
    let all: Vec<usize> = (0..n).collect();
    let mut pool = OperatorPool {
        flavor: PoolFlavor::GeneralizedSd,
        n_qubits: n,
        entries: Vec::new(),
    };
    for (p, q) in pairs(&all) {
        if same_spin(p, q) {
            pool.push_realized(ExcitationGenerator::fermionic(vec![p], vec![q], Provenance::Generalized), None, None)?;
        }
    }
    let pp = pairs(&all);
    for (k, &(p, q)) in pp.iter().enumerate() {
        for &(r, s) in &pp[k + 1..] {
            if alpha_count(&[p, q]) == alpha_count(&[r, s]) {
                pool.push_realized(
                    ExcitationGenerator::fermionic(vec![p, q], vec![r, s], Provenance::Generalized),
                    None,
                    None,
                )?;
            }
        }
    }
    Ok(pool)
}

/// `T - T+`, normal ordered and scaled to unit coefficient norm, or
/// `None` when it vanishes.
fn normalized_anti_hermitian(terms: &[(LadderProduct, f64)]) -> Option<FermionOperator> {
    let mut t = FermionOperator::new();
    for (ops, c) in terms {
        t.push(ops.clone(), Complex64::new(*c, 0.0));
    }
    let mut f = t.clone();
    for (ops, c) in t.adjoint().terms {
        f.push(ops, -c);
    }
    let mut f = normal_order(&f);
    let norm = f.terms.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt();
    if f.terms.is_empty() || norm <= 1e-12 {
        return None;
    }
    for (_, c) in &mut f.terms {
        *c /= norm;
    }
    Some(f)
}

/// Spin-adapted generalized singles and doubles over spatial orbitals.
///
/// Singles `q -> p` (`p < q`) combine the alpha and beta excitations.
/// For each pair of spatial pairs `(p <= q) <= (r <= s)` two doubles are
/// formed from the singlet and triplet couplings of `E_rp E_sq`. Every
/// generator is normal ordered and scaled to unit coefficient norm;
/// vanishing ones are dropped.
pub fn singlet_generalized_pool(mi: &MolecularIntegrals) -> Result<OperatorPool> {
    let n = mi.n_spatial;
    let mut pool = OperatorPool {
        flavor: PoolFlavor::SingletGsd,
        n_qubits: mi.n_spin_orbitals(),
        entries: Vec::new(),
    };
    let a = |p: usize| 2 * p;
    let b = |p: usize| 2 * p + 1;
    let push = |pool: &mut OperatorPool, label: String, terms: Vec<(LadderProduct, f64)>| -> Result<()> {
        if let Some(op) = normalized_anti_hermitian(&terms) {
            let g = ExcitationGenerator::combination(label, op, Provenance::SingletGeneralized);
            pool.push_realized(g, None, None)?;
        }
        Ok(())
    };
    for p in 0..n {
        for q in p + 1..n {
            let terms = vec![
                (vec![(a(p), true), (a(q), false)], 1.0),
                (vec![(b(p), true), (b(q), false)], 1.0),
            ];
            push(&mut pool, format!("s{q}->{p}"), terms)?;
        }
    }
    let spatial_pairs: Vec<(usize, usize)> = (0..n).flat_map(|p| (p..n).map(move |q| (p, q))).collect();
    let c1 = 1.0 / 12f64.sqrt();
    let c2 = 2.0 / 12f64.sqrt();
    for (k, &(p, q)) in spatial_pairs.iter().enumerate() {
        for &(r, s) in &spatial_pairs[k..] {
            let e = |x: usize, y: usize, z: usize, w: usize| vec![(x, true), (y, false), (z, true), (w, false)];
            let singlet = vec![
                (e(a(r), a(p), a(s), a(q)), c2),
                (e(b(r), b(p), b(s), b(q)), c2),
                (e(a(r), a(p), b(s), b(q)), c1),
                (e(b(r), b(p), a(s), a(q)), c1),
                (e(a(r), b(p), b(s), a(q)), c1),
                (e(b(r), a(p), a(s), b(q)), c1),
            ];
            let triplet = vec![
                (e(a(r), a(p), b(s), b(q)), 0.5),
                (e(b(r), b(p), a(s), a(q)), 0.5),
                (e(a(r), b(p), b(s), a(q)), -0.5),
                (e(b(r), a(p), a(s), b(q)), -0.5),
            ];
            push(&mut pool, format!("s{p},{q}->{r},{s}:a"), singlet)?;
            push(&mut pool, format!("s{p},{q}->{r},{s}:b"), triplet)?;
        }
    }
    Ok(pool)
}

/// One `i P` entry per distinct non-diagonal Pauli string occurring in the
/// base pool, in string order.
pub fn qubit_pool(base: &OperatorPool) -> Result<OperatorPool> {
    if base.flavor == PoolFlavor::Qubit {
        return Err(Error::InvalidArgument("qubit pool needs a fermionic base pool".into()));
    }
    let strings: BTreeSet<_> = base
        .entries
        .iter()
        .flat_map(|e| e.operator.iter().map(|(p, _)| *p))
        .filter(|p| !p.is_diagonal())
        .collect();
    let mut pool = OperatorPool {
        flavor: PoolFlavor::Qubit,
        n_qubits: base.n_qubits,
        entries: Vec::new(),
    };
    for p in strings {
        pool.push_realized(ExcitationGenerator::pauli(p), None, None)?;
    }
    Ok(pool)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeSource {
    Mp2,
}

/// First-order cluster amplitudes over occupied and virtual spin orbitals.
#[derive(Debug, Clone)]
pub struct AmplitudeEstimate {
    pub source: AmplitudeSource,
    pub occupied: Vec<usize>,
    pub virtuals: Vec<usize>,
    /// `occ x virt`, row-major.
    pub t1: Vec<f64>,
    /// `occ x occ x virt x virt`, row-major.
    pub t2: Vec<f64>,
    /// Amplitudes zeroed because of a vanishing denominator.
    pub degenerate: usize,
}

impl AmplitudeEstimate {
    fn occ_pos(&self, i: usize) -> Option<usize> {
        self.occupied.iter().position(|&p| p == i)
    }

    fn virt_pos(&self, a: usize) -> Option<usize> {
        self.virtuals.iter().position(|&p| p == a)
    }

    /// `t1[i][a]` by spin-orbital index; zero outside the occupied-virtual block.
    pub fn t1(&self, i: usize, a: usize) -> f64 {
        match (self.occ_pos(i), self.virt_pos(a)) {
            (Some(x), Some(y)) => self.t1[x * self.virtuals.len() + y],
            _ => 0.0,
        }
    }

    /// `t2[i][j][a][b]` by spin-orbital index.
    pub fn t2(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        let (no, nv) = (self.occupied.len(), self.virtuals.len());
        match (self.occ_pos(i), self.occ_pos(j), self.virt_pos(a), self.virt_pos(b)) {
            (Some(w), Some(x), Some(y), Some(z)) => self.t2[((w * no + x) * nv + y) * nv + z],
            _ => 0.0,
        }
    }

    /// Second-order energy `1/4 sum t2[ijab] <ij||ab>`.
    pub fn mp2_energy(&self, mi: &MolecularIntegrals) -> f64 {
        let mut e = 0.0;
        for &i in &self.occupied {
            for &j in &self.occupied {
                for &a in &self.virtuals {
                    for &b in &self.virtuals {
                        e += self.t2(i, j, a, b) * mi.spin_antisymmetrized(i, j, a, b);
                    }
                }
            }
        }
        0.25 * e
    }
}

/// Diagonal of the Fock operator over spin orbitals for the HF occupation.
pub fn fock_diagonal(mi: &MolecularIntegrals) -> Vec<f64> {
    let occ = mi.hf_occupied();
    (0..mi.n_spin_orbitals())
        .map(|p| mi.spin_h1(p, p) + occ.iter().map(|&i| mi.spin_antisymmetrized(p, i, p, i)).sum::<f64>())
        .collect()
}

/// MP2 doubles amplitudes from the Fock diagonal; singles are zero.
pub fn mp2_amplitudes(mi: &MolecularIntegrals) -> AmplitudeEstimate {
    let occupied = mi.hf_occupied();
    let virtuals = mi.hf_virtual();
    let eps = fock_diagonal(mi);
    let (no, nv) = (occupied.len(), virtuals.len());
    let mut t2 = vec![0.0; no * no * nv * nv];
    let mut degenerate = 0;
    for (w, &i) in occupied.iter().enumerate() {
        for (x, &j) in occupied.iter().enumerate() {
            for (y, &a) in virtuals.iter().enumerate() {
                for (z, &b) in virtuals.iter().enumerate() {
                    let v = mi.spin_antisymmetrized(i, j, a, b);
                    if v == 0.0 {
                        continue;
                    }
                    let d = eps[i] + eps[j] - eps[a] - eps[b];
                    if d.abs() < DEGENERATE_DENOMINATOR {
                        degenerate += 1;
                        continue;
                    }
                    t2[((w * no + x) * nv + y) * nv + z] = v / d;
                }
            }
        }
    }
    if degenerate > 0 {
        log::warn!("{}: {degenerate} MP2 amplitudes zeroed on degenerate denominators", mi.label);
    }
    AmplitudeEstimate {
        source: AmplitudeSource::Mp2,
        occupied,
        virtuals,
        t1: vec![0.0; no * nv],
        t2,
        degenerate,
    }
}

/// A candidate excitation keyed by its sorted occupied and virtual sets.
type ExcitationKey = (Vec<usize>, Vec<usize>);

/// Selective pool. Round 1 admits singles with `|h1[i][a]| > eps` and
/// doubles with `|<ij||ab>| > eps`. Round `r > 1` uses `eps / 2^(r-1)` and
/// admits disconnected triples (admitted single times a `t2` amplitude) and
/// quadruples (admitted double times a `t2` amplitude) on disjoint indices.
/// Stops after `max_round` rounds or when a round admits nothing.
pub fn uscc_screen(mi: &MolecularIntegrals, amps: &AmplitudeEstimate, eps: f64, max_round: usize) -> Result<OperatorPool> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("screening threshold must be positive, got {eps}")));
    }
    let occ = mi.hf_occupied();
    let virt = mi.hf_virtual();
    let mut admitted: BTreeMap<ExcitationKey, (f64, usize)> = BTreeMap::new();
    let mut order: Vec<ExcitationKey> = Vec::new();

    let mut singles: Vec<(ExcitationKey, f64)> = Vec::new();
    let mut doubles: Vec<(ExcitationKey, f64)> = Vec::new();
    if max_round >= 1 {
        for &i in &occ {
            for &a in &virt {
                let v = mi.spin_h1(i, a).abs();
                if same_spin(i, a) && v > eps {
                    singles.push(((vec![i], vec![a]), v));
                }
            }
        }
        for (i, j) in pairs(&occ) {
            for (a, b) in pairs(&virt) {
                let v = mi.spin_antisymmetrized(i, j, a, b).abs();
                if alpha_count(&[i, j]) == alpha_count(&[a, b]) && v > eps {
                    doubles.push(((vec![i, j], vec![a, b]), v));
                }
            }
        }
        for (k, v) in singles.iter().chain(&doubles) {
            admitted.insert(k.clone(), (*v, 1));
            order.push(k.clone());
        }
    }

    // amplitudes worth contracting with, in a fixed order
    let mut t2_list: Vec<(ExcitationKey, f64)> = Vec::new();
    for (i, j) in pairs(&occ) {
        for (a, b) in pairs(&virt) {
            let t = amps.t2(i, j, a, b);
            if t != 0.0 {
                t2_list.push(((vec![i, j], vec![a, b]), t.abs()));
            }
        }
    }
    let disjoint = |x: &[usize], y: &[usize]| x.iter().all(|p| !y.contains(p));
    for round in 2..=max_round {
        let threshold = eps / f64::powi(2.0, round as i32 - 1);
        let mut candidates: BTreeMap<ExcitationKey, f64> = BTreeMap::new();
        for ((ho, hv), hval) in singles.iter().chain(&doubles) {
            for ((to, tv), tval) in &t2_list {
                if !disjoint(ho, to) || !disjoint(hv, tv) {
                    continue;
                }
                let v = hval * tval;
                if v <= threshold {
                    continue;
                }
                let mut o: Vec<usize> = ho.iter().chain(to).copied().collect();
                let mut w: Vec<usize> = hv.iter().chain(tv).copied().collect();
                o.sort_unstable();
                w.sort_unstable();
                let key = (o, w);
                if admitted.contains_key(&key) {
                    continue;
                }
                let slot = candidates.entry(key).or_insert(0.0);
                *slot = slot.max(v);
            }
        }
        if candidates.is_empty() {
            break;
        }
        for (k, v) in candidates {
            admitted.insert(k.clone(), (v, round));
            order.push(k);
        }
    }

    let mut pool = OperatorPool {
        flavor: PoolFlavor::Uscc,
        n_qubits: mi.n_spin_orbitals(),
        entries: Vec::new(),
    };
    for key in order {
        let (v, round) = admitted[&key];
        let provenance = if round == 1 {
            Provenance::UsccConnected
        } else {
            Provenance::UsccDisconnected
        };
        let (o, w) = key;
        pool.push_realized(ExcitationGenerator::fermionic(o, w, provenance), Some(v), Some(round))?;
    }
    Ok(pool)
}
