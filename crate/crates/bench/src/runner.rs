//! Method execution shared by scans and the command line.

use std::fmt;

use serde::{Deserialize, Serialize};
use vqe_core::fermion::MolecularIntegrals;
use vqe_core::optimize::OptimizerConfig;
use vqe_core::pauli::QubitOperator;
use vqe_core::pools::{generalized_pool, qubit_pool, singlet_generalized_pool, uccsd_pool, OperatorPool, PoolFlavor};
use vqe_core::vqe::{adapt_ladder, minimize, nu_vqe, pool_ansatz, uscc_vqe, AdaptConfig, Ansatz, Engine, Problem, VqeResult};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    /// Zero-parameter reference row.
    Hf,
    Vqe,
    Adapt,
    Uscc,
    Nuvqe,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Hf => "hf",
            Flavor::Vqe => "vqe",
            Flavor::Adapt => "adapt",
            Flavor::Uscc => "uscc",
            Flavor::Nuvqe => "nuvqe",
        })
    }
}

/// One method of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub flavor: Flavor,
    /// ADAPT gradient threshold or USCC screening threshold.
    #[serde(default)]
    pub eps: Option<f64>,
    /// ADAPT pool; singlet-adapted generalized by default.
    #[serde(default)]
    pub pool: Option<PoolFlavor>,
}

impl MethodSpec {
    pub fn new(flavor: Flavor, eps: Option<f64>) -> Self {
        Self { flavor, eps, pool: None }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.flavor, self.eps) {
            (Flavor::Adapt | Flavor::Uscc, None) => {
                Err(BenchError::InvalidSpec(format!("{} needs a threshold", self.flavor)))
            }
            (_, Some(e)) if !(e > 0.0) || !e.is_finite() => {
                Err(BenchError::InvalidSpec(format!("threshold must be positive, got {e}")))
            }
            _ => Ok(()),
        }
    }

    pub fn adapt_pool(&self) -> PoolFlavor {
        self.pool.unwrap_or(PoolFlavor::SingletGsd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSettings {
    pub optimizer: OptimizerConfig,
    pub adapt: AdaptConfig,
    pub uscc_max_round: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig::default(),
            adapt: AdaptConfig::default(),
            uscc_max_round: 3,
        }
    }
}

impl RunSettings {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.optimizer.seed = seed;
        self.adapt.optimizer.seed = seed;
        self
    }
}

/// Integrals with the electron counts replaced by `sector`.
pub fn with_sector(mi: &MolecularIntegrals, sector: Option<(usize, usize)>) -> Result<MolecularIntegrals> {
    let mut out = mi.clone();
    if let Some((a, b)) = sector {
        if a > mi.n_spatial || b > mi.n_spatial {
            return Err(BenchError::InvalidInput(format!(
                "sector ({a},{b}) does not fit {} spatial orbitals",
                mi.n_spatial
            )));
        }
        out.n_alpha = a;
        out.n_beta = b;
    }
    Ok(out)
}

pub fn build_pool(mi: &MolecularIntegrals, flavor: PoolFlavor, eps: Option<f64>, max_round: usize) -> Result<OperatorPool> {
    Ok(match flavor {
        PoolFlavor::Uccsd => uccsd_pool(mi)?,
        PoolFlavor::GeneralizedSd => generalized_pool(mi)?,
        PoolFlavor::SingletGsd => singlet_generalized_pool(mi)?,
        PoolFlavor::Qubit => qubit_pool(&generalized_pool(mi)?)?,
        PoolFlavor::Uscc => {
            let eps = eps.ok_or_else(|| BenchError::InvalidInput("the uscc pool needs --eps".into()))?;
            vqe_core::pools::uscc_screen(mi, &vqe_core::pools::mp2_amplitudes(mi), eps, max_round)?
        }
    })
}

/// Qubit pools break number conservation and need the whole register.
pub fn engine_for(problem: &Problem, pool: PoolFlavor) -> Result<Engine> {
    Ok(match pool {
        PoolFlavor::Qubit => problem.full_engine()?,
        _ => problem.sector_engine()?,
    })
}

pub fn uccsd_ansatz(engine: &Engine, mi: &MolecularIntegrals) -> Result<Ansatz> {
    Ok(pool_ansatz(engine, &uccsd_pool(mi)?)?)
}

pub fn run_vqe(problem: &Problem, mi: &MolecularIntegrals, s: &RunSettings) -> Result<VqeResult> {
    let engine = problem.sector_engine()?;
    let ansatz = uccsd_ansatz(&engine, mi)?;
    let mut r = minimize(&engine, &ansatz, &s.optimizer, &vec![0.0; ansatz.len()])?;
    r.flavor = "vqe".into();
    Ok(r)
}

pub fn run_hf(problem: &Problem) -> Result<VqeResult> {
    let engine = problem.sector_engine()?;
    let mut r = minimize(&engine, &Ansatz::new(), &OptimizerConfig::default(), &[])?;
    r.flavor = "hf".into();
    Ok(r)
}

/// ADAPT at every threshold in `eps` from a single run at the tightest.
pub fn run_adapt(
    problem: &Problem,
    mi: &MolecularIntegrals,
    pool: PoolFlavor,
    eps: &[f64],
    s: &RunSettings,
) -> Result<Vec<VqeResult>> {
    let ops = build_pool(mi, pool, None, s.uscc_max_round)?;
    let engine = engine_for(problem, pool)?;
    let h: Option<&QubitOperator> = Some(&problem.hamiltonian);
    Ok(adapt_ladder(&engine, h, &ops, eps, &s.adapt)?)
}

pub fn run_uscc(problem: &Problem, mi: &MolecularIntegrals, eps: f64, s: &RunSettings) -> Result<VqeResult> {
    let engine = problem.sector_engine()?;
    Ok(uscc_vqe(&engine, mi, eps, s.uscc_max_round, &s.optimizer)?)
}

pub fn run_nuvqe(problem: &Problem, mi: &MolecularIntegrals, s: &RunSettings) -> Result<VqeResult> {
    let engine = problem.sector_engine()?;
    let ansatz = uccsd_ansatz(&engine, mi)?;
    Ok(nu_vqe(&engine, &ansatz, &s.optimizer)?)
}
