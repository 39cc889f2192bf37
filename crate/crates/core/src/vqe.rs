//! Ground-state drivers: plain VQE, ADAPT-VQE (fermionic and qubit pools),
//! the screened selective ansatz, the Jastrow-augmented non-unitary variant
//! and fragment energy assembly.
//!
//! Operators are compiled once into sparse matrices over an invariant
//! subspace (normally the HF sector), and every energy evaluation runs an
//! adjoint sweep: one forward preparation, then a backward pass that peels
//! the exponentials off the state and the costate together to read off all
//! parameter derivatives.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fci::SectorBasis;
use crate::fermion::{build_hamiltonian, jordan_wigner, MolecularIntegrals};
use crate::optimize::{self, Optimum, OptimizerConfig};
use crate::pauli::QubitOperator;
use crate::pools::{mp2_amplitudes, uscc_screen, OperatorPool};
use crate::statevector::{CompiledGenerator, SparseOperator, Statevector, Subspace};

/// `<phi|phi>` below which the Jastrow-scaled state counts as collapsed.
pub const NORM_COLLAPSE: f64 = 1e-10;
/// Pool gradients closer than this are treated as tied.
pub const TIE_TOL: f64 = 1e-12;

fn zero() -> Complex64 {
    Complex64::default()
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Qubit Hamiltonian of a set of integrals under Jordan-Wigner.
pub fn molecular_hamiltonian(mi: &MolecularIntegrals) -> Result<QubitOperator> {
    jordan_wigner(&build_hamiltonian(mi), mi.n_spin_orbitals())
}

/// A molecule ready for simulation: Hamiltonian, HF sector and reference.
#[derive(Debug, Clone)]
pub struct Problem {
    pub label: String,
    pub hamiltonian: QubitOperator,
    pub sector: SectorBasis,
    pub reference: Statevector,
}

impl Problem {
    pub fn from_integrals(mi: &MolecularIntegrals) -> Result<Self> {
        let n = mi.n_spin_orbitals();
        Ok(Self {
            label: mi.label.clone(),
            hamiltonian: molecular_hamiltonian(mi)?,
            sector: SectorBasis::new(mi.n_spatial, mi.n_alpha, mi.n_beta)?,
            reference: Statevector::hf_state(n, mi.hf_occupation())?,
        })
    }

    /// Engine over the HF electron-number sector.
    pub fn sector_engine(&self) -> Result<Engine> {
        Engine::new(&self.hamiltonian, &self.reference, self.sector.subspace())
    }

    /// Engine over the whole register, needed for pools that break
    /// number conservation.
    pub fn full_engine(&self) -> Result<Engine> {
        Engine::new(&self.hamiltonian, &self.reference, Subspace::full(self.hamiltonian.n_qubits()))
    }
}

/// Ordered product ansatz `exp(theta_n A_n) ... exp(theta_1 A_1)`; the
/// first element acts first.
#[derive(Debug, Clone, Default)]
pub struct Ansatz {
    labels: Vec<String>,
    generators: Vec<CompiledGenerator>,
}

impl Ansatz {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, label: impl Into<String>, generator: CompiledGenerator) {
        self.labels.push(label.into());
        self.generators.push(generator);
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn generators(&self) -> &[CompiledGenerator] {
        &self.generators
    }
}

/// A scalar functional of the prepared state. Alongside the value it returns
/// the costate `lambda` with `dF = 2 Re <lambda|d psi>`.
pub trait Objective {
    fn value_and_costate(&self, engine: &Engine, psi: &[Complex64]) -> (f64, Vec<Complex64>);
}

/// `F = <psi|H|psi>`.
pub struct EnergyObjective;

impl Objective for EnergyObjective {
    fn value_and_costate(&self, engine: &Engine, psi: &[Complex64]) -> (f64, Vec<Complex64>) {
        let hpsi = engine.h.apply(psi);
        (inner(psi, &hpsi).re, hpsi)
    }
}

/// Compiled Hamiltonian and reference over an invariant subspace.
#[derive(Debug, Clone)]
pub struct Engine {
    space: Subspace,
    h: SparseOperator,
    reference: Vec<Complex64>,
}

impl Engine {
    pub fn new(h: &QubitOperator, reference: &Statevector, space: Subspace) -> Result<Self> {
        let compact = space.restrict(reference)?;
        let h = SparseOperator::from_qubit_operator(h, &space)?;
        Ok(Self {
            space,
            h,
            reference: compact,
        })
    }

    pub fn space(&self) -> &Subspace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn hamiltonian(&self) -> &SparseOperator {
        &self.h
    }

    pub fn reference(&self) -> &[Complex64] {
        &self.reference
    }

    pub fn compile(&self, a: &QubitOperator) -> Result<CompiledGenerator> {
        CompiledGenerator::new(a, &self.space)
    }

    /// Compiles every pool entry; fails when an entry leaves the subspace.
    pub fn compile_pool(&self, pool: &OperatorPool) -> Result<Vec<CompiledGenerator>> {
        pool.entries.iter().map(|e| self.compile(&e.operator)).collect()
    }

    /// Compact amplitudes of `prod exp(theta_k A_k) |ref>`.
    pub fn prepare(&self, ansatz: &Ansatz, theta: &[f64]) -> Vec<Complex64> {
        self.prepare_from(&self.reference, ansatz, theta)
    }

    pub fn prepare_from(&self, start: &[Complex64], ansatz: &Ansatz, theta: &[f64]) -> Vec<Complex64> {
        let mut psi = start.to_vec();
        let (mut s1, mut s2) = (vec![zero(); psi.len()], vec![zero(); psi.len()]);
        for (g, &t) in ansatz.generators.iter().zip(theta) {
            g.exp_apply(t, &mut psi, &mut s1, &mut s2);
        }
        psi
    }

    pub fn energy_of(&self, psi: &[Complex64]) -> f64 {
        inner(psi, &self.h.apply(psi)).re
    }

    /// Full statevector of compact amplitudes.
    pub fn embed(&self, psi: &[Complex64]) -> Result<Statevector> {
        self.space.embed(psi)
    }

    /// Objective value and its gradient over `theta` by the adjoint sweep.
    pub fn evaluate(&self, obj: &dyn Objective, ansatz: &Ansatz, theta: &[f64]) -> (f64, Vec<f64>) {
        let psi = self.prepare(ansatz, theta);
        let (f, lambda) = obj.value_and_costate(self, &psi);
        (f, self.backward_sweep(ansatz, theta, psi, lambda))
    }

    /// Derivatives `2 Re <lambda| d psi / d theta_k>` given the prepared
    /// state `psi` and its costate.
    pub fn backward_sweep(
        &self,
        ansatz: &Ansatz,
        theta: &[f64],
        mut psi: Vec<Complex64>,
        mut lambda: Vec<Complex64>,
    ) -> Vec<f64> {
        let n = ansatz.len();
        let (mut s1, mut s2) = (vec![zero(); psi.len()], vec![zero(); psi.len()]);
        let mut a_psi = vec![zero(); psi.len()];
        let mut grad = vec![0.0; n];
        for k in (0..n).rev() {
            let g = &ansatz.generators[k];
            g.apply_into(&psi, &mut a_psi);
            grad[k] = 2.0 * inner(&lambda, &a_psi).re;
            if k > 0 {
                g.exp_apply(-theta[k], &mut psi, &mut s1, &mut s2);
                g.exp_apply(-theta[k], &mut lambda, &mut s1, &mut s2);
            }
        }
        grad
    }

    /// Runs the optimizer on an objective.
    pub fn optimize(&self, obj: &dyn Objective, ansatz: &Ansatz, cfg: &OptimizerConfig, theta0: &[f64]) -> Result<Optimum> {
        cfg.validate()?;
        if theta0.len() != ansatz.len() {
            return Err(Error::DimensionMismatch {
                expected: ansatz.len(),
                found: theta0.len(),
            });
        }
        Ok(optimize::minimize(|x| self.evaluate(obj, ansatz, x), theta0, cfg))
    }
}

/// Convenience form over the full register: energy and gradient of the
/// product ansatz built from raw qubit generators.
pub fn energy_and_gradient(
    h: &QubitOperator,
    reference: &Statevector,
    generators: &[QubitOperator],
    theta: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if generators.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            expected: generators.len(),
            found: theta.len(),
        });
    }
    let engine = Engine::new(h, reference, Subspace::full(reference.n_qubits()))?;
    let mut ansatz = Ansatz::new();
    for (k, g) in generators.iter().enumerate() {
        ansatz.push(format!("g{k}"), engine.compile(g)?);
    }
    Ok(engine.evaluate(&EnergyObjective, &ansatz, theta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub iteration: usize,
    /// Hartree.
    pub energy: f64,
    /// Gradient norm at this point (pool gradients for ADAPT).
    pub gradient_norm: f64,
    pub added: Option<String>,
    pub pool_index: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub parameters: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JastrowParams {
    pub alpha: Vec<f64>,
    /// Pairs `i < j` in row order: (0,1), (0,2), ..., (1,2), ...
    pub lambda: Vec<f64>,
}

impl JastrowParams {
    pub fn zeros(n_qubits: usize) -> Self {
        Self {
            alpha: vec![0.0; n_qubits],
            lambda: vec![0.0; n_qubits * n_qubits.saturating_sub(1) / 2],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.alpha.len()
    }

    pub fn n_params(&self) -> usize {
        self.alpha.len() + self.lambda.len()
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_qubits();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.alpha.iter().chain(&self.lambda).all(|v| *v == 0.0)
    }

    /// Eigenvalue of `J = 1 - sum a_i Z_i - sum l_ij Z_i Z_j` on a basis state.
    pub fn factor(&self, state: u64) -> f64 {
        let z = |i: usize| if state >> i & 1 == 1 { -1.0 } else { 1.0 };
        let mut v = 1.0;
        for (i, a) in self.alpha.iter().enumerate() {
            v -= a * z(i);
        }
        for ((i, j), l) in self.pairs().into_iter().zip(&self.lambda) {
            v -= l * z(i) * z(j);
        }
        v
    }

    pub fn to_operator(&self) -> Result<QubitOperator> {
        use crate::pauli::{Pauli, PauliString};
        let n = self.n_qubits();
        let mut op = QubitOperator::constant(n, Complex64::new(1.0, 0.0));
        for (i, a) in self.alpha.iter().enumerate() {
            op.add_term(PauliString::single(n, i, Pauli::Z)?, Complex64::new(-a, 0.0))?;
        }
        for ((i, j), l) in self.pairs().into_iter().zip(&self.lambda) {
            let p = PauliString::from_factors(n, &[(i, Pauli::Z), (j, Pauli::Z)])?;
            op.add_term(p, Complex64::new(-l, 0.0))?;
        }
        Ok(op)
    }

    pub fn from_flat(n_qubits: usize, x: &[f64]) -> Self {
        Self {
            alpha: x[..n_qubits].to_vec(),
            lambda: x[n_qubits..].to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeResult {
    pub flavor: String,
    /// Hartree.
    pub energy: f64,
    pub parameters: Vec<f64>,
    pub ansatz: Vec<String>,
    pub iterations: usize,
    pub evaluations: usize,
    pub gradient_norm_final: f64,
    pub converged: bool,
    pub trace: Vec<TraceStep>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pool_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub jastrow: Option<JastrowParams>,
}

impl VqeResult {
    pub fn n_params(&self) -> usize {
        self.parameters.len() + self.jastrow.as_ref().map_or(0, |j| j.n_params())
    }

    /// The trace as JSON lines.
    pub fn trace_json_lines(&self) -> String {
        self.trace
            .iter()
            .map(|s| serde_json::to_string(s).expect("trace serializes") + "\n")
            .collect()
    }

    fn from_optimum(flavor: &str, ansatz: &Ansatz, opt: Optimum) -> Self {
        let gn = opt.grad_norm();
        Self {
            flavor: flavor.to_string(),
            energy: opt.f,
            trace: vec![TraceStep {
                iteration: opt.iterations,
                energy: opt.f,
                gradient_norm: gn,
                added: None,
                pool_index: None,
                parameters: vec![],
            }],
            parameters: opt.x,
            ansatz: ansatz.labels.clone(),
            iterations: opt.iterations,
            evaluations: opt.evals,
            gradient_norm_final: gn,
            converged: opt.converged,
            threshold: None,
            pool_size: None,
            jastrow: None,
        }
    }
}

/// Minimizes the energy over the ansatz parameters from `theta0`.
pub fn minimize(engine: &Engine, ansatz: &Ansatz, cfg: &OptimizerConfig, theta0: &[f64]) -> Result<VqeResult> {
    let opt = engine.optimize(&EnergyObjective, ansatz, cfg, theta0)?;
    Ok(VqeResult::from_optimum("vqe", ansatz, opt))
}

/// Compiles a pool into a fixed ansatz in pool order.
pub fn pool_ansatz(engine: &Engine, pool: &OperatorPool) -> Result<Ansatz> {
    let mut ansatz = Ansatz::new();
    for (e, g) in pool.entries.iter().zip(engine.compile_pool(pool)?) {
        ansatz.push(e.generator.to_string(), g);
    }
    Ok(ansatz)
}

/// How ADAPT evaluates pool gradients `<psi|[H, A_k]|psi>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientRoute {
    /// `2 Re <H psi|A_k psi>`: one sparse product per pool entry.
    #[default]
    Costate,
    /// Expectation of the explicitly formed commutator `[H, A_k]`.
    Commutator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptConfig {
    /// Stop when the pool gradient norm drops below this (Hartree/radian).
    pub conv: f64,
    pub max_operators: usize,
    pub route: GradientRoute,
    pub optimizer: OptimizerConfig,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            conv: 1e-3,
            max_operators: 400,
            route: GradientRoute::Costate,
            optimizer: OptimizerConfig::default(),
        }
    }
}

/// Pool gradients `2 Re <H psi|A_k psi>` at `psi`.
pub fn pool_gradients(engine: &Engine, pool: &[CompiledGenerator], psi: &[Complex64]) -> Vec<f64> {
    let hpsi = engine.h.apply(psi);
    let mut buf = vec![zero(); psi.len()];
    pool.iter()
        .map(|g| {
            g.apply_into(psi, &mut buf);
            2.0 * inner(&hpsi, &buf).re
        })
        .collect()
}

/// Compiles `[H, A_k]` for each pool entry.
pub fn commutator_operators(h: &QubitOperator, pool: &OperatorPool, space: &Subspace) -> Result<Vec<SparseOperator>> {
    pool.entries
        .iter()
        .map(|e| SparseOperator::from_qubit_operator(&h.commutator(&e.operator)?, space))
        .collect()
}

fn commutator_gradients(ops: &[SparseOperator], psi: &[Complex64]) -> Vec<f64> {
    ops.iter().map(|c| inner(psi, &c.apply(psi)).re).collect()
}

/// Index of the largest `|g|`; ties within [`TIE_TOL`] go to the lowest index.
pub fn select_operator(grads: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, g) in grads.iter().enumerate() {
        let a = g.abs();
        if best.is_none_or(|(_, b)| a > b + TIE_TOL) {
            best = Some((k, a));
        }
    }
    best.map(|(k, _)| k)
}

/// ADAPT-VQE: grows the ansatz one pool operator at a time and
/// re-optimizes every parameter after each addition.
///
/// `hamiltonian` is only needed for the commutator route.
pub fn adapt_vqe(
    engine: &Engine,
    hamiltonian: Option<&QubitOperator>,
    pool: &OperatorPool,
    cfg: &AdaptConfig,
) -> Result<VqeResult> {
    Ok(adapt_ladder(engine, hamiltonian, pool, &[cfg.conv], cfg)?.remove(0))
}

/// Runs ADAPT once at the tightest threshold and reads off the result for
/// each looser threshold from the trace. Operator selection is
/// deterministic, so each looser run is exactly a prefix of the tight one.
pub fn adapt_ladder(
    engine: &Engine,
    hamiltonian: Option<&QubitOperator>,
    pool: &OperatorPool,
    thresholds: &[f64],
    cfg: &AdaptConfig,
) -> Result<Vec<VqeResult>> {
    if pool.is_empty() {
        return Err(Error::InvalidArgument("ADAPT needs a nonempty pool".into()));
    }
    if thresholds.is_empty() || thresholds.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument("ADAPT thresholds must be positive".into()));
    }
    let tightest = thresholds.iter().copied().fold(f64::INFINITY, f64::min);
    let compiled = engine.compile_pool(pool)?;
    let commutators = match cfg.route {
        GradientRoute::Costate => None,
        GradientRoute::Commutator => {
            let h = hamiltonian.ok_or_else(|| {
                Error::InvalidArgument("the commutator route needs the qubit Hamiltonian".into())
            })?;
            Some(commutator_operators(h, pool, engine.space())?)
        }
    };
    let gradients = |psi: &[Complex64]| match &commutators {
        Some(ops) => commutator_gradients(ops, psi),
        None => pool_gradients(engine, &compiled, psi),
    };

    let mut ansatz = Ansatz::new();
    let mut theta: Vec<f64> = Vec::new();
    let mut psi = engine.reference.clone();
    let mut energy = engine.energy_of(&psi);
    let mut trace = Vec::new();
    let mut evals = 0;
    let mut added: Option<(String, usize)> = None;
    loop {
        let g = gradients(&psi);
        let gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        trace.push(TraceStep {
            iteration: ansatz.len(),
            energy,
            gradient_norm: gnorm,
            added: added.as_ref().map(|a| a.0.clone()),
            pool_index: added.as_ref().map(|a| a.1),
            parameters: theta.clone(),
        });
        log::debug!("adapt {}: E = {energy:.12} |g| = {gnorm:.3e}", ansatz.len());
        if gnorm < tightest || ansatz.len() >= cfg.max_operators {
            break;
        }
        let k = select_operator(&g).expect("pool is nonempty");
        let label = pool.entries[k].generator.to_string();
        ansatz.push(label.clone(), compiled[k].clone());
        theta.push(0.0);
        let opt = engine.optimize(&EnergyObjective, &ansatz, &cfg.optimizer, &theta)?;
        evals += opt.evals;
        theta = opt.x;
        energy = opt.f;
        psi = engine.prepare(&ansatz, &theta);
        added = Some((label, k));
    }

    let results = thresholds
        .iter()
        .map(|&eps| {
            let stop = trace.iter().position(|s| s.gradient_norm < eps);
            let idx = stop.unwrap_or(trace.len() - 1);
            let step = &trace[idx];
            VqeResult {
                flavor: "adapt".into(),
                energy: step.energy,
                parameters: step.parameters.clone(),
                ansatz: ansatz.labels[..idx].to_vec(),
                iterations: idx,
                evaluations: evals,
                gradient_norm_final: step.gradient_norm,
                converged: stop.is_some(),
                trace: trace[..=idx].to_vec(),
                threshold: Some(eps),
                pool_size: Some(pool.len()),
                jastrow: None,
            }
        })
        .collect();
    Ok(results)
}

/// Selective ansatz: screens the pool classically at `eps`, then runs one
/// optimization from zero amplitudes.
pub fn uscc_vqe(
    engine: &Engine,
    mi: &MolecularIntegrals,
    eps: f64,
    max_round: usize,
    cfg: &OptimizerConfig,
) -> Result<VqeResult> {
    let pool = uscc_screen(mi, &mp2_amplitudes(mi), eps, max_round)?;
    if pool.is_empty() {
        log::warn!("{}: screening at {eps:e} kept no operators, returning the reference energy", mi.label);
    }
    let ansatz = pool_ansatz(engine, &pool)?;
    let mut r = minimize(engine, &ansatz, cfg, &vec![0.0; ansatz.len()])?;
    r.flavor = "uscc".into();
    r.threshold = Some(eps);
    r.pool_size = Some(pool.len());
    Ok(r)
}

/// Energy `<phi|H|phi> / <phi|phi>` of `phi = J U(theta) |ref>`.
pub fn nu_energy(engine: &Engine, ansatz: &Ansatz, theta: &[f64], jastrow: &JastrowParams) -> Result<f64> {
    let psi = engine.prepare(ansatz, theta);
    if jastrow.is_identity() {
        return Ok(engine.energy_of(&psi));
    }
    let phi = apply_jastrow(engine, jastrow, &psi);
    let n = norm_sqr(&phi);
    if n <= NORM_COLLAPSE {
        return Err(Error::InvalidArgument(format!("Jastrow-scaled state collapsed (norm {n:e})")));
    }
    Ok(engine.energy_of(&phi) / n)
}

fn apply_jastrow(engine: &Engine, jastrow: &JastrowParams, psi: &[Complex64]) -> Vec<Complex64> {
    engine
        .space
        .basis()
        .iter()
        .zip(psi)
        .map(|(&b, a)| a * jastrow.factor(b))
        .collect()
}

/// Energy and analytic gradient of `phi = J U(theta) |ref>` with respect to
/// `x = (theta, alpha, lambda)`; `None` when `<phi|phi>` has collapsed.
pub fn nu_energy_and_gradient(engine: &Engine, ansatz: &Ansatz, x: &[f64]) -> Option<(f64, Vec<f64>)> {
    let nq = engine.space.n_qubits();
    let nt = ansatz.len();
    let (theta, jx) = x.split_at(nt);
    let jastrow = JastrowParams::from_flat(nq, jx);
    let psi = engine.prepare(ansatz, theta);
    let basis = engine.space.basis();
    let factors: Vec<f64> = basis.iter().map(|&b| jastrow.factor(b)).collect();
    let phi: Vec<Complex64> = psi.iter().zip(&factors).map(|(a, f)| a * f).collect();
    let n = norm_sqr(&phi);
    if n <= NORM_COLLAPSE {
        return None;
    }
    let hphi = engine.h.apply(&phi);
    let e = inner(&phi, &hphi).re / n;
    // dE = 2 Re <r|d phi> with r = (H phi - E phi) / N
    let r: Vec<Complex64> = hphi.iter().zip(&phi).map(|(h, p)| (h - p * e) / n).collect();
    let lambda: Vec<Complex64> = r.iter().zip(&factors).map(|(v, f)| v * f).collect();
    let mut grad = engine.backward_sweep(ansatz, theta, psi.clone(), lambda);
    // d phi / d alpha_i = -Z_i psi ; d phi / d lambda_ij = -Z_i Z_j psi
    let w: Vec<f64> = r.iter().zip(&psi).map(|(v, p)| -2.0 * (v.conj() * p).re).collect();
    let z = |b: u64, i: usize| if b >> i & 1 == 1 { -1.0 } else { 1.0 };
    for i in 0..nq {
        grad.push(w.iter().zip(basis).map(|(wb, &b)| wb * z(b, i)).sum());
    }
    for (i, j) in jastrow.pairs() {
        grad.push(w.iter().zip(basis).map(|(wb, &b)| wb * z(b, i) * z(b, j)).sum());
    }
    Some((e, grad))
}

/// Jastrow-augmented VQE, optimizing `theta` together with the Jastrow
/// coefficients from `theta = 0` and `J = 1`. All derivatives are analytic.
pub fn nu_vqe(engine: &Engine, ansatz: &Ansatz, cfg: &OptimizerConfig) -> Result<VqeResult> {
    cfg.validate()?;
    let nq = engine.space.n_qubits();
    let nt = ansatz.len();
    let penalty = engine.energy_of(&engine.reference).abs() + 1e3;
    let collapsed = std::cell::Cell::new(false);
    let objective = |x: &[f64]| -> (f64, Vec<f64>) {
        match nu_energy_and_gradient(engine, ansatz, x) {
            Some(v) => {
                collapsed.set(false);
                v
            }
            None => {
                collapsed.set(true);
                (penalty, vec![0.0; x.len()])
            }
        }
    };
    let x0 = vec![0.0; nt + JastrowParams::zeros(nq).n_params()];
    let opt = optimize::minimize(objective, &x0, cfg);
    let jastrow = JastrowParams::from_flat(nq, &opt.x[nt..]);
    let final_collapsed = nu_energy(engine, ansatz, &opt.x[..nt], &jastrow).is_err();
    let mut r = VqeResult::from_optimum("nuvqe", ansatz, opt);
    r.parameters.truncate(nt);
    r.jastrow = Some(jastrow);
    if final_collapsed || collapsed.get() && r.energy >= penalty {
        r.converged = false;
    }
    Ok(r)
}

/// Fragment energy `sum E_I + sum_{I<J} (E_IJ - E_I - E_J)`.
pub fn fmo_assemble(monomers: &[f64], dimers: &BTreeMap<(usize, usize), f64>) -> Result<f64> {
    let mut e: f64 = monomers.iter().sum();
    for (&(i, j), &eij) in dimers {
        if i >= j {
            return Err(Error::InvalidArgument(format!("dimer key ({i},{j}) must have I < J")));
        }
        if j >= monomers.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                limit: monomers.len(),
                what: "monomers",
            });
        }
        e += eij - monomers[i] - monomers[j];
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pools::uccsd_pool;

    fn two_level() -> MolecularIntegrals {
        let mut mi = MolecularIntegrals::zeros("two-level", 2, 1, 1).unwrap();
        mi.e_core = 0.7;
        mi.set_h1(0, 0, -1.25);
        mi.set_h1(1, 1, -0.47);
        mi.set_h1(0, 1, 0.05);
        mi.set_h2(0, 0, 0, 0, 0.67);
        mi.set_h2(1, 1, 1, 1, 0.70);
        mi.set_h2(0, 0, 1, 1, 0.66);
        mi.set_h2(0, 1, 0, 1, 0.18);
        mi.set_h2(0, 0, 0, 1, 0.03);
        mi
    }

    #[test]
    fn zero_parameters_give_reference_energy() {
        let mi = two_level();
        let p = Problem::from_integrals(&mi).unwrap();
        let engine = p.sector_engine().unwrap();
        let pool = uccsd_pool(&mi).unwrap();
        let ansatz = pool_ansatz(&engine, &pool).unwrap();
        let (e, _) = engine.evaluate(&EnergyObjective, &ansatz, &[0.0; 3]);
        let e_ref = p.reference.expectation(&p.hamiltonian).unwrap().re;
        assert!((e - e_ref).abs() < 1e-13);
    }

    #[test]
    fn empty_ansatz_minimize() {
        let mi = two_level();
        let engine = Problem::from_integrals(&mi).unwrap().sector_engine().unwrap();
        let r = minimize(&engine, &Ansatz::new(), &OptimizerConfig::default(), &[]).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
        assert!((r.energy - engine.energy_of(engine.reference())).abs() < 1e-15);
    }

    #[test]
    fn sweep_matches_finite_differences() {
        let mi = two_level();
        let engine = Problem::from_integrals(&mi).unwrap().sector_engine().unwrap();
        let ansatz = pool_ansatz(&engine, &uccsd_pool(&mi).unwrap()).unwrap();
        let theta = [0.3, -0.2, 0.7];
        let (_, g) = engine.evaluate(&EnergyObjective, &ansatz, &theta);
        for k in 0..3 {
            let mut tp = theta;
            let mut tm = theta;
            tp[k] += 1e-5;
            tm[k] -= 1e-5;
            let fd = (engine.evaluate(&EnergyObjective, &ansatz, &tp).0 - engine.evaluate(&EnergyObjective, &ansatz, &tm).0) / 2e-5;
            assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1e-3), "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn tie_goes_to_lowest_index() {
        assert_eq!(select_operator(&[0.1, -0.3, 0.3 + 1e-13, 0.2]), Some(1));
        assert_eq!(select_operator(&[0.1, 0.3, 0.3 + 1e-9]), Some(2));
        assert_eq!(select_operator(&[]), None);
    }

    #[test]
    fn fmo_sums() {
        let none = BTreeMap::new();
        assert_eq!(fmo_assemble(&[-1.5], &none).unwrap(), -1.5);
        let mut d = BTreeMap::new();
        d.insert((0, 1), -3.0);
        assert_eq!(fmo_assemble(&[-1.0, -2.0], &d).unwrap(), -3.0);
        d.insert((0, 1), -3.25);
        d.insert((1, 2), -2.5);
        d.insert((0, 2), -1.75);
        // -1 - 2 - 0.5 + (-0.25) + (-2.5 + 2.5) + (-1.75 + 1.5)
        assert!((fmo_assemble(&[-1.0, -2.0, -0.5], &d).unwrap() + 4.0).abs() < 1e-15);
        let mut bad = BTreeMap::new();
        bad.insert((0, 3), -1.0);
        assert!(fmo_assemble(&[-1.0, -2.0], &bad).is_err());
        let mut rev = BTreeMap::new();
        rev.insert((1, 0), -1.0);
        assert!(fmo_assemble(&[-1.0, -2.0], &rev).is_err());
    }

    #[test]
    fn jastrow_operator_matches_factor() {
        let j = JastrowParams {
            alpha: vec![0.1, -0.2, 0.05],
            lambda: vec![0.3, 0.0, -0.1],
        };
        let op = j.to_operator().unwrap();
        for b in 0..8u64 {
            let s = Statevector::basis_state(3, b).unwrap();
            let v = s.expectation(&op).unwrap().re;
            assert!((v - j.factor(b)).abs() < 1e-14);
        }
    }
}
