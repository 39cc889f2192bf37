//! Excited states: overlap-penalty deflation (VQD), folded-spectrum VQE and
//! the equation-of-motion secular problem (qEOM).

use nalgebra::{DMatrix, Schur, SVD};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{jordan_wigner, ExcitationGenerator, MolecularIntegrals};
use crate::optimize::OptimizerConfig;
use crate::pauli::QubitOperator;
use crate::pools::{uccsd_pool, OperatorPool};
use crate::statevector::SparseOperator;
use crate::vqe::{inner, norm_sqr, pool_ansatz, select_operator, AdaptConfig, Ansatz, Engine, Objective, VqeResult};

/// `|<psi_k|psi_i>|^2` above which a level counts as collapsed.
pub const COLLAPSE_OVERLAP: f64 = 0.5;

/// Previously found states and their penalty weights.
#[derive(Debug, Clone, Default)]
pub struct DeflationSet {
    pub states: Vec<Vec<Complex64>>,
    pub energies: Vec<f64>,
    pub betas: Vec<f64>,
}

impl DeflationSet {
    pub fn push(&mut self, state: Vec<Complex64>, energy: f64, beta: f64) -> Result<()> {
        if !(beta > 0.0) {
            return Err(Error::InvalidArgument(format!("penalty weight must be positive, got {beta}")));
        }
        self.states.push(state);
        self.energies.push(energy);
        self.betas.push(beta);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// `F = <psi|H|psi> + sum_i beta_i |<phi_i|psi>|^2`.
pub struct DeflatedEnergy<'a> {
    pub deflation: &'a DeflationSet,
}

impl Objective for DeflatedEnergy<'_> {
    fn value_and_costate(&self, engine: &Engine, psi: &[Complex64]) -> (f64, Vec<Complex64>) {
        let mut lambda = engine.hamiltonian().apply(psi);
        let mut f = inner(psi, &lambda).re;
        for (phi, beta) in self.deflation.states.iter().zip(&self.deflation.betas) {
            let ov = inner(phi, psi);
            f += beta * ov.norm_sqr();
            for (l, p) in lambda.iter_mut().zip(phi) {
                *l += p * ov * *beta;
            }
        }
        (f, lambda)
    }
}

/// `F = ||(H - omega) psi||^2`.
pub struct FoldedSpectrum {
    pub omega: f64,
}

impl FoldedSpectrum {
    fn shifted(&self, engine: &Engine, psi: &[Complex64]) -> Vec<Complex64> {
        let mut r = engine.hamiltonian().apply(psi);
        for (x, p) in r.iter_mut().zip(psi) {
            *x -= p * self.omega;
        }
        r
    }
}

impl Objective for FoldedSpectrum {
    fn value_and_costate(&self, engine: &Engine, psi: &[Complex64]) -> (f64, Vec<Complex64>) {
        let r = self.shifted(engine, psi);
        let f = norm_sqr(&r);
        (f, self.shifted(engine, &r))
    }
}

/// How VQD picks the penalty weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaPolicy {
    /// Twice the one-norm of the Hamiltonian's Pauli coefficients, which
    /// bounds its spectral radius.
    Auto,
    Constant(f64),
}

/// How each VQD level builds its ansatz.
#[derive(Debug, Clone)]
pub enum AnsatzFactory {
    /// The whole pool as one fixed product, started from seeded random
    /// angles (level 0 starts from zero).
    FixedPool(OperatorPool),
    /// Fresh ADAPT growth per level on the deflated cost.
    Adapt(OperatorPool, AdaptConfig),
}

#[derive(Debug, Clone)]
pub struct VqdConfig {
    /// Highest level to compute; levels `0..=k` are returned.
    pub k: usize,
    pub beta: BetaPolicy,
    /// Retries with doubled penalties after a collapse.
    pub max_retries: usize,
    /// Random starting points tried per level.
    pub starts: usize,
    /// Half-width of the uniform random start, in radians.
    pub start_scale: f64,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl Default for VqdConfig {
    fn default() -> Self {
        Self {
            k: 1,
            beta: BetaPolicy::Auto,
            max_retries: 3,
            starts: 3,
            start_scale: 1.0,
            optimizer: OptimizerConfig::default(),
            seed: 11,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VqdOutcome {
    pub levels: Vec<VqeResult>,
    /// Compact amplitudes of each level.
    pub states: Vec<Vec<Complex64>>,
    pub betas: Vec<f64>,
    /// `|<psi_i|psi_j>|^2` for all pairs.
    pub overlaps: Vec<Vec<f64>>,
    /// Levels that still collapsed after every retry.
    pub collapsed: Vec<usize>,
}

impl VqdOutcome {
    pub fn max_pairwise_overlap(&self) -> f64 {
        let n = self.overlaps.len();
        (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.overlaps[i][j])
            .fold(0.0, f64::max)
    }

    pub fn spectrum(&self) -> Vec<SpectrumLine> {
        let e0 = self.levels.first().map_or(0.0, |l| l.energy);
        self.levels
            .iter()
            .enumerate()
            .map(|(i, l)| SpectrumLine {
                level: i,
                energy: l.energy,
                gap_to_ground: l.energy - e0,
                overlap_diagnostics: Some(self.overlaps[i].clone()),
            })
            .collect()
    }
}

/// One line of a spectrum report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLine {
    pub level: usize,
    pub energy: f64,
    pub gap_to_ground: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub overlap_diagnostics: Option<Vec<f64>>,
}

pub fn spectrum_json(lines: &[SpectrumLine]) -> String {
    serde_json::to_string_pretty(lines).expect("spectrum serializes")
}

/// Sum of the absolute Pauli coefficients.
pub fn coefficient_one_norm(h: &QubitOperator) -> f64 {
    h.iter().map(|(_, c)| c.norm()).sum()
}

fn random_start(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// Fixed-ansatz minimization of `obj` from several starts; the zero start
/// is used when `zero_first` is set. Returns the lowest-cost run.
fn best_of_starts(
    engine: &Engine,
    obj: &dyn Objective,
    ansatz: &Ansatz,
    cfg: &OptimizerConfig,
    starts: usize,
    scale: f64,
    zero_first: bool,
    rng: &mut ChaCha8Rng,
) -> Result<crate::optimize::Optimum> {
    let mut best: Option<crate::optimize::Optimum> = None;
    for s in 0..starts.max(1) {
        let x0 = if zero_first && s == 0 {
            vec![0.0; ansatz.len()]
        } else {
            random_start(rng, ansatz.len(), scale)
        };
        let run = engine.optimize(obj, ansatz, cfg, &x0)?;
        if best.as_ref().is_none_or(|b| run.f < b.f - 1e-12) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Variational quantum deflation for levels `0..=cfg.k`.
pub fn vqd(engine: &Engine, h: &QubitOperator, factory: &AnsatzFactory, cfg: &VqdConfig) -> Result<VqdOutcome> {
    let base_beta = match cfg.beta {
        BetaPolicy::Auto => 2.0 * coefficient_one_norm(h),
        BetaPolicy::Constant(b) => b,
    };
    if !(base_beta > 0.0) {
        return Err(Error::InvalidArgument(format!("penalty weight must be positive, got {base_beta}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let fixed = match factory {
        AnsatzFactory::FixedPool(pool) => Some(pool_ansatz(engine, pool)?),
        AnsatzFactory::Adapt(..) => None,
    };
    let mut found = DeflationSet::default();
    let mut levels = Vec::new();
    let mut collapsed = Vec::new();
    for level in 0..=cfg.k {
        let mut beta = base_beta;
        let mut attempt = 0;
        loop {
            let mut trial = found.clone();
            trial.betas.iter_mut().for_each(|b| *b = b.max(beta));
            let obj = DeflatedEnergy { deflation: &trial };
            let (result, psi) = match (&fixed, factory) {
                (Some(ansatz), _) => {
                    let opt = best_of_starts(
                        engine,
                        &obj,
                        ansatz,
                        &cfg.optimizer,
                        if level == 0 { 1 } else { cfg.starts },
                        cfg.start_scale,
                        level == 0,
                        &mut rng,
                    )?;
                    let psi = engine.prepare(ansatz, &opt.x);
                    let energy = engine.energy_of(&psi);
                    let gn = opt.grad_norm();
                    let r = VqeResult {
                        flavor: "vqd".into(),
                        energy,
                        parameters: opt.x,
                        ansatz: ansatz.labels().to_vec(),
                        iterations: opt.iterations,
                        evaluations: opt.evals,
                        gradient_norm_final: gn,
                        converged: opt.converged,
                        trace: vec![],
                        threshold: None,
                        pool_size: None,
                        jastrow: None,
                    };
                    (r, psi)
                }
                (None, AnsatzFactory::Adapt(pool, acfg)) => adapt_deflated(engine, pool, acfg, &trial)?,
                (None, AnsatzFactory::FixedPool(_)) => unreachable!("fixed ansatz compiled above"),
            };
            let worst = found
                .states
                .iter()
                .map(|phi| inner(phi, &psi).norm_sqr())
                .fold(0.0, f64::max);
            if worst > COLLAPSE_OVERLAP && attempt < cfg.max_retries {
                attempt += 1;
                beta *= 2.0;
                log::warn!("level {level} collapsed (overlap {worst:.3}); retrying with beta {beta}");
                continue;
            }
            if worst > COLLAPSE_OVERLAP {
                collapsed.push(level);
            }
            found.push(psi, result.energy, beta)?;
            levels.push(result);
            break;
        }
    }
    let n = found.len();
    let overlaps = (0..n)
        .map(|i| (0..n).map(|j| inner(&found.states[i], &found.states[j]).norm_sqr()).collect())
        .collect();
    Ok(VqdOutcome {
        levels,
        states: found.states,
        betas: found.betas,
        overlaps,
        collapsed,
    })
}

/// ADAPT growth on the deflated cost `F`, with pool gradients
/// `2 Re <lambda|A_k psi>` taken from the costate.
fn adapt_deflated(
    engine: &Engine,
    pool: &OperatorPool,
    cfg: &AdaptConfig,
    deflation: &DeflationSet,
) -> Result<(VqeResult, Vec<Complex64>)> {
    let obj = DeflatedEnergy { deflation };
    let compiled = engine.compile_pool(pool)?;
    let mut ansatz = Ansatz::new();
    let mut theta: Vec<f64> = vec![];
    let mut psi = engine.reference().to_vec();
    let mut buf = vec![Complex64::default(); psi.len()];
    let mut converged = false;
    let mut gnorm;
    let mut evals = 0;
    loop {
        let (_, lambda) = obj.value_and_costate(engine, &psi);
        let grads: Vec<f64> = compiled
            .iter()
            .map(|g| {
                g.apply_into(&psi, &mut buf);
                2.0 * inner(&lambda, &buf).re
            })
            .collect();
        gnorm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < cfg.conv {
            converged = true;
            break;
        }
        if ansatz.len() >= cfg.max_operators {
            break;
        }
        let k = select_operator(&grads).expect("pool is nonempty");
        ansatz.push(pool.entries[k].generator.to_string(), compiled[k].clone());
        theta.push(0.0);
        let opt = engine.optimize(&obj, &ansatz, &cfg.optimizer, &theta)?;
        evals += opt.evals;
        theta = opt.x;
        psi = engine.prepare(&ansatz, &theta);
    }
    let energy = engine.energy_of(&psi);
    let r = VqeResult {
        flavor: "vqd".into(),
        energy,
        parameters: theta,
        ansatz: ansatz.labels().to_vec(),
        iterations: ansatz.len(),
        evaluations: evals,
        gradient_norm_final: gnorm,
        converged,
        trace: vec![],
        threshold: Some(cfg.conv),
        pool_size: Some(pool.len()),
        jastrow: None,
    };
    Ok((r, psi))
}

#[derive(Debug, Clone)]
pub struct FsConfig {
    pub starts: usize,
    pub start_scale: f64,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl Default for FsConfig {
    fn default() -> Self {
        Self {
            starts: 4,
            start_scale: 1.0,
            optimizer: OptimizerConfig {
                energy_tol: 1e-12,
                grad_tol: 1e-9,
                ..OptimizerConfig::default()
            },
            seed: 13,
        }
    }
}

/// Folded-spectrum VQE: minimizes `||(H - omega) psi||^2` over the fixed
/// ansatz from seeded random starts; the reported energy is `<psi|H|psi>`.
/// The final folded cost is stored as the last trace step's energy.
pub fn fs_vqe(engine: &Engine, ansatz: &Ansatz, omega: f64, cfg: &FsConfig) -> Result<VqeResult> {
    let obj = FoldedSpectrum { omega };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let opt = best_of_starts(engine, &obj, ansatz, &cfg.optimizer, cfg.starts, cfg.start_scale, false, &mut rng)?;
    let psi = engine.prepare(ansatz, &opt.x);
    let energy = engine.energy_of(&psi);
    let gn = opt.grad_norm();
    Ok(VqeResult {
        flavor: "fs".into(),
        energy,
        trace: vec![crate::vqe::TraceStep {
            iteration: opt.iterations,
            energy: opt.f,
            gradient_norm: gn,
            added: None,
            pool_index: None,
            parameters: vec![],
        }],
        parameters: opt.x,
        ansatz: ansatz.labels().to_vec(),
        iterations: opt.iterations,
        evaluations: opt.evals,
        gradient_norm_final: gn,
        converged: opt.converged,
        threshold: Some(omega),
        pool_size: None,
        jastrow: None,
    })
}

/// Folded cost `||(H - omega) psi||^2` of a compact state.
pub fn folded_cost(engine: &Engine, psi: &[Complex64], omega: f64) -> f64 {
    FoldedSpectrum { omega }.value_and_costate(engine, psi).0
}

/// Excitation operators `E_mu` (not anti-Hermitized) for qEOM.
#[derive(Debug, Clone)]
pub struct EomBasis {
    pub labels: Vec<String>,
    pub operators: Vec<QubitOperator>,
}

impl EomBasis {
    /// HF-referenced spin-conserving singles and doubles.
    pub fn singles_doubles(mi: &MolecularIntegrals) -> Result<Self> {
        let pool = uccsd_pool(mi)?;
        let n = mi.n_spin_orbitals();
        let mut labels = Vec::new();
        let mut operators = Vec::new();
        for e in &pool.entries {
            let t = e.generator.excitation_operator().expect("fermionic excitation");
            labels.push(e.generator.to_string());
            operators.push(jordan_wigner(&t, n)?);
        }
        Ok(Self { labels, operators })
    }

    pub fn from_generators(gens: &[ExcitationGenerator], n_qubits: usize) -> Result<Self> {
        let mut labels = Vec::new();
        let mut operators = Vec::new();
        for g in gens {
            let t = g
                .excitation_operator()
                .ok_or_else(|| Error::InvalidGenerator(format!("{g}: no fermionic excitation")))?;
            if !g.is_spin_conserving() {
                return Err(Error::InvalidGenerator(format!("{g}: does not conserve spin")));
            }
            let op = jordan_wigner(&t, n_qubits)?;
            if op.is_empty() {
                return Err(Error::InvalidGenerator(format!("{g}: vanishes")));
            }
            labels.push(g.to_string());
            operators.push(op);
        }
        Ok(Self { labels, operators })
    }

    pub fn empty() -> Self {
        Self {
            labels: vec![],
            operators: vec![],
        }
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct EomMatrices {
    pub m: DMatrix<Complex64>,
    pub q: DMatrix<Complex64>,
    pub v: DMatrix<Complex64>,
    pub w: DMatrix<Complex64>,
}

impl EomMatrices {
    /// Largest `|X - X^+|` entry of `M` and `V`.
    pub fn hermiticity_error(&self) -> f64 {
        let dev = |x: &DMatrix<Complex64>| (x - x.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        dev(&self.m).max(dev(&self.v))
    }
}

/// Builds `M, Q, V, W` over `basis` at the compact ground state `ground`.
pub fn eom_matrices(engine: &Engine, ground: &[Complex64], basis: &EomBasis) -> Result<EomMatrices> {
    let space = engine.space();
    let n = basis.len();
    let mut ex = Vec::with_capacity(n);
    let mut dex = Vec::with_capacity(n);
    for op in &basis.operators {
        ex.push(SparseOperator::from_qubit_operator(op, space)?);
        dex.push(SparseOperator::from_qubit_operator(&op.adjoint(), space)?);
    }
    let h = engine.hamiltonian();
    let h0 = h.apply(ground);
    let u: Vec<Vec<Complex64>> = ex.iter().map(|e| e.apply(ground)).collect();
    let d: Vec<Vec<Complex64>> = dex.iter().map(|e| e.apply(ground)).collect();
    let hu: Vec<Vec<Complex64>> = u.iter().map(|x| h.apply(x)).collect();
    let hd: Vec<Vec<Complex64>> = d.iter().map(|x| h.apply(x)).collect();
    let eh0: Vec<Vec<Complex64>> = ex.iter().map(|e| e.apply(&h0)).collect();
    let dh0: Vec<Vec<Complex64>> = dex.iter().map(|e| e.apply(&h0)).collect();
    let mut m = DMatrix::zeros(n, n);
    let mut q = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    let mut w = DMatrix::zeros(n, n);
    for mu in 0..n {
        for nu in 0..n {
            // <0|E_mu+ H E_nu|0> - <0|E_mu+ E_nu H|0> - <0|H E_nu E_mu+|0> + <0|E_nu H E_mu+|0>
            let e_nu_d_mu = ex[nu].apply(&d[mu]);
            m[(mu, nu)] = inner(&u[mu], &hu[nu]) - inner(&u[mu], &eh0[nu]) - inner(&h0, &e_nu_d_mu) + inner(&d[nu], &hd[mu]);
            let edag_nu_d_mu = dex[nu].apply(&d[mu]);
            q[(mu, nu)] = -(inner(&u[mu], &hd[nu]) - inner(&u[mu], &dh0[nu]) - inner(&h0, &edag_nu_d_mu)
                + inner(&u[nu], &hd[mu]));
            v[(mu, nu)] = inner(&u[mu], &u[nu]) - inner(&d[nu], &d[mu]);
            w[(mu, nu)] = -(inner(&u[mu], &d[nu]) - inner(&u[nu], &d[mu]));
        }
    }
    Ok(EomMatrices { m, q, v, w })
}

#[derive(Debug, Clone)]
pub struct QeomResult {
    /// Positive excitation energies, ascending (Hartree).
    pub excitation_energies: Vec<f64>,
    /// Metric directions dropped as numerically null.
    pub pruned: usize,
    /// Largest imaginary part among the returned energies.
    pub max_imaginary: f64,
    pub matrices: EomMatrices,
}

/// Relative singular-value cutoff of the metric.
const METRIC_CUTOFF: f64 = 1e-12;

/// Solves `(M Q; Q* M*) z = E (V W; -W* -V*) z` and returns the positive
/// branch. Null directions of the metric are projected out first.
pub fn qeom(engine: &Engine, ground: &[Complex64], basis: &EomBasis) -> Result<QeomResult> {
    let mats = eom_matrices(engine, ground, basis)?;
    let n = basis.len();
    if n == 0 {
        return Ok(QeomResult {
            excitation_energies: vec![],
            pruned: 0,
            max_imaginary: 0.0,
            matrices: mats,
        });
    }
    let mut a = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    let mut b = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    let conj = |x: &DMatrix<Complex64>| x.map(|v| v.conj());
    a.view_mut((0, 0), (n, n)).copy_from(&mats.m);
    a.view_mut((0, n), (n, n)).copy_from(&mats.q);
    a.view_mut((n, 0), (n, n)).copy_from(&conj(&mats.q));
    a.view_mut((n, n), (n, n)).copy_from(&conj(&mats.m));
    b.view_mut((0, 0), (n, n)).copy_from(&mats.v);
    b.view_mut((0, n), (n, n)).copy_from(&mats.w);
    b.view_mut((n, 0), (n, n)).copy_from(&(-conj(&mats.w)));
    b.view_mut((n, n), (n, n)).copy_from(&(-conj(&mats.v)));

    let svd = SVD::new(b, true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Err(Error::LinearAlgebra("qEOM metric vanishes".into()));
    }
    let keep: Vec<usize> = (0..2 * n).filter(|&i| svd.singular_values[i] > METRIC_CUTOFF * smax).collect();
    let pruned = 2 * n - keep.len();
    if pruned > 0 {
        log::info!("qEOM: dropped {pruned} null metric directions");
    }
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v requested");
    let r = keep.len();
    let mut ur = DMatrix::<Complex64>::zeros(2 * n, r);
    let mut vr = DMatrix::<Complex64>::zeros(2 * n, r);
    for (c, &i) in keep.iter().enumerate() {
        ur.set_column(c, &u.column(i));
        vr.set_column(c, &vt.row(i).adjoint());
    }
    let mut reduced = ur.adjoint() * a * vr;
    for (row, &i) in keep.iter().enumerate() {
        let s = svd.singular_values[i];
        for c in 0..r {
            reduced[(row, c)] /= Complex64::new(s, 0.0);
        }
    }
    let schur = Schur::new(reduced);
    let (_, t) = schur.unpack();
    let eigs: Vec<Complex64> = (0..r).map(|i| t[(i, i)]).collect();
    let scale = eigs.iter().map(|e| e.norm()).fold(1.0, f64::max);
    let mut positive: Vec<Complex64> = eigs.into_iter().filter(|e| e.re > 1e-8 * scale).collect();
    positive.sort_by(|x, y| x.re.total_cmp(&y.re));
    let max_imaginary = positive.iter().map(|e| e.im.abs()).fold(0.0, f64::max);
    Ok(QeomResult {
        excitation_energies: positive.iter().map(|e| e.re).collect(),
        pruned,
        max_imaginary,
        matrices: mats,
    })
}

/// Spin-orbital generalized pool used as the default excited-state ansatz.
pub fn default_excited_pool(mi: &MolecularIntegrals) -> Result<OperatorPool> {
    crate::pools::generalized_pool(mi)
}
