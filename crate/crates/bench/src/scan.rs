//! Scans over fixture grids.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use vqe_core::fci::fci_solve;
use vqe_core::fermion::{FixtureEntry, FixtureManifest};
use vqe_core::pools::PoolFlavor;
use vqe_core::vqe::{Problem, VqeResult};

use crate::error::{BenchError, Result};
use crate::runner::{run_adapt, run_hf, run_nuvqe, run_uscc, run_vqe, with_sector, Flavor, MethodSpec, RunSettings};

/// Grid points closer than this (Angstrom) are the same point.
const GRID_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSet {
    pub molecule: String,
    pub basis: String,
    /// Geometry values to run; every manifest point when absent.
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    /// Manifest path, relative to the config file when loaded from disk.
    #[serde(default = "default_manifest")]
    pub manifest: PathBuf,
    pub fixtures: Vec<FixtureSet>,
    pub methods: Vec<MethodSpec>,
    #[serde(default)]
    pub sector: Option<(usize, usize)>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub settings: RunSettings,
}

fn default_manifest() -> PathBuf {
    PathBuf::from("fixtures/manifest.json")
}

fn default_seed() -> u64 {
    7
}

fn default_workers() -> usize {
    1
}

impl ScanSpec {
    pub fn new(manifest: impl Into<PathBuf>, fixtures: Vec<FixtureSet>, methods: Vec<MethodSpec>) -> Self {
        Self {
            manifest: manifest.into(),
            fixtures,
            methods,
            sector: None,
            output: None,
            seed: default_seed(),
            workers: default_workers(),
            settings: RunSettings::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut spec: ScanSpec = serde_json::from_str(&text)?;
        if spec.manifest.is_relative() {
            if let Some(dir) = path.parent() {
                spec.manifest = dir.join(&spec.manifest);
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for m in &self.methods {
            m.validate()?;
        }
        if self.workers == 0 {
            return Err(BenchError::InvalidSpec("workers must be at least 1".into()));
        }
        for f in &self.fixtures {
            if let Some(g) = &f.grid {
                if g.iter().any(|r| !(*r > 0.0)) {
                    return Err(BenchError::InvalidSpec(format!("{}: grid values must be positive", f.molecule)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub molecule: String,
    pub basis: String,
    pub label: String,
    /// Angstrom.
    pub r: f64,
    pub method: String,
    pub eps: Option<f64>,
    /// Hartree.
    pub energy: f64,
    pub e_fci: f64,
    pub abs_err: f64,
    pub n_params: usize,
    pub n_iterations: usize,
    /// Seconds.
    pub wall_time: f64,
    /// `ok`, `unconverged`, `below-fci` or `failed: <reason>`.
    pub status: String,
}

impl ScanRow {
    /// Row has a usable energy, converged or not.
    pub fn is_ok(&self) -> bool {
        self.status == "ok" || self.status == "unconverged"
    }

    /// Signed error, for the variational check.
    pub fn signed_err(&self) -> f64 {
        self.energy - self.e_fci
    }
}

/// Resolves every requested point, reporting all missing ones together.
pub fn preflight(spec: &ScanSpec, manifest: &FixtureManifest) -> Result<Vec<FixtureEntry>> {
    let mut points = Vec::new();
    let mut missing = Vec::new();
    for set in &spec.fixtures {
        let series = manifest.series(&set.molecule, &set.basis);
        match &set.grid {
            None if series.is_empty() => missing.push(format!("{}/{}", set.molecule, set.basis)),
            None => points.extend(series.into_iter().cloned()),
            Some(grid) => {
                for &r in grid {
                    match series.iter().find(|e| (e.r - r).abs() < GRID_TOL) {
                        Some(e) => points.push((*e).clone()),
                        None => missing.push(format!("{}/{}@{r}", set.molecule, set.basis)),
                    }
                }
            }
        }
    }
    for p in &points {
        if !manifest.path_of(p).exists() {
            missing.push(format!("{} ({})", p.label, manifest.path_of(p).display()));
        }
    }
    if missing.is_empty() {
        Ok(points)
    } else {
        Err(BenchError::MissingFixtures(missing))
    }
}

pub fn load_manifest(path: &Path) -> Result<FixtureManifest> {
    if !path.exists() {
        return Err(BenchError::MissingFixtures(vec![path.display().to_string()]));
    }
    Ok(FixtureManifest::load(path)?)
}

/// Runs every method at every point. Rows come out in point order, then
/// method order, whatever order the workers finish in.
pub fn run_scan(spec: &ScanSpec) -> Result<Vec<ScanRow>> {
    spec.validate()?;
    let manifest = load_manifest(&spec.manifest)?;
    let points = preflight(spec, &manifest)?;
    if spec.methods.is_empty() {
        return Ok(vec![]);
    }
    let settings = spec.settings.clone().with_seed(spec.seed);
    let results: Mutex<Vec<Option<Vec<ScanRow>>>> = Mutex::new(vec![None; points.len()]);
    let next = AtomicUsize::new(0);
    let workers = spec.workers.min(points.len()).max(1);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= points.len() {
                    break;
                }
                let rows = run_point(&manifest, &points[i], &spec.methods, spec.sector, &settings);
                results.lock().expect("no worker panics while holding the lock")[i] = Some(rows);
            });
        }
    });
    Ok(results
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .flat_map(|r| r.expect("every point ran"))
        .collect())
}

struct Point<'a> {
    entry: &'a FixtureEntry,
    e_fci: f64,
}

impl Point<'_> {
    fn row(&self, m: &MethodSpec, outcome: std::result::Result<VqeResult, String>, wall: f64) -> ScanRow {
        let mut row = ScanRow {
            molecule: self.entry.molecule.clone(),
            basis: self.entry.basis.clone(),
            label: self.entry.label.clone(),
            r: self.entry.r,
            method: method_name(m),
            eps: m.eps,
            energy: f64::NAN,
            e_fci: self.e_fci,
            abs_err: f64::NAN,
            n_params: 0,
            n_iterations: 0,
            wall_time: wall,
            status: String::new(),
        };
        match outcome {
            Ok(r) => {
                row.energy = r.energy;
                row.abs_err = (r.energy - self.e_fci).abs();
                row.n_params = r.n_params();
                row.n_iterations = r.iterations;
                row.status = if r.energy < self.e_fci - 1e-9 {
                    "below-fci".into()
                } else if r.converged {
                    "ok".into()
                } else {
                    "unconverged".into()
                };
            }
            Err(e) => row.status = format!("failed: {e}"),
        }
        row
    }
}

fn method_name(m: &MethodSpec) -> String {
    match (m.flavor, m.pool) {
        (Flavor::Adapt, Some(p)) if p != PoolFlavor::SingletGsd => format!("adapt-{p}"),
        (f, _) => f.to_string(),
    }
}

fn guarded<T>(f: impl FnOnce() -> Result<T>) -> std::result::Result<T, String> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(e.to_string()),
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into())),
    }
}

fn run_point(
    manifest: &FixtureManifest,
    entry: &FixtureEntry,
    methods: &[MethodSpec],
    sector: Option<(usize, usize)>,
    settings: &RunSettings,
) -> Vec<ScanRow> {
    let setup = guarded(|| {
        let mi = with_sector(&manifest.load_integrals(entry)?, sector)?;
        let problem = Problem::from_integrals(&mi)?;
        let e_fci = fci_solve(&problem.hamiltonian, &problem.sector, 1)?[0].energy;
        Ok((mi, problem, e_fci))
    });
    let (mi, problem, e_fci) = match setup {
        Ok(v) => v,
        Err(e) => {
            let p = Point { entry, e_fci: f64::NAN };
            return methods.iter().map(|m| p.row(m, Err(e.clone()), 0.0)).collect();
        }
    };
    log::info!("{}: E_fci = {e_fci:.10}", entry.label);
    let point = Point { entry, e_fci };

    // ADAPT thresholds sharing a pool come from one ladder run
    let mut ladders: BTreeMap<PoolFlavor, (Vec<f64>, Option<std::result::Result<Vec<VqeResult>, String>>, f64)> =
        BTreeMap::new();
    for m in methods.iter().filter(|m| m.flavor == Flavor::Adapt) {
        ladders.entry(m.adapt_pool()).or_insert_with(|| (vec![], None, 0.0)).0.push(m.eps.unwrap_or(f64::NAN));
    }
    for (pool, (eps, out, wall)) in ladders.iter_mut() {
        let t = Instant::now();
        *out = Some(guarded(|| run_adapt(&problem, &mi, *pool, eps, settings)));
        *wall = t.elapsed().as_secs_f64();
    }

    methods
        .iter()
        .map(|m| {
            let t = Instant::now();
            let (outcome, wall) = match m.flavor {
                Flavor::Adapt => {
                    let (eps, out, wall) = &ladders[&m.adapt_pool()];
                    let k = eps.iter().position(|e| Some(*e) == m.eps).expect("threshold registered");
                    (out.as_ref().expect("ladder ran").clone().map(|mut v| v.swap_remove(k)), *wall)
                }
                Flavor::Hf => (guarded(|| run_hf(&problem)), 0.0),
                Flavor::Vqe => (guarded(|| run_vqe(&problem, &mi, settings)), 0.0),
                Flavor::Uscc => (guarded(|| run_uscc(&problem, &mi, m.eps.expect("validated"), settings)), 0.0),
                Flavor::Nuvqe => (guarded(|| run_nuvqe(&problem, &mi, settings)), 0.0),
            };
            let wall = if m.flavor == Flavor::Adapt { wall } else { t.elapsed().as_secs_f64() };
            point.row(m, outcome, wall)
        })
        .collect()
}
