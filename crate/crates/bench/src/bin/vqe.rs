use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use vqe_bench::output::{json_lines, write_csv};
use vqe_bench::runner::{
    build_pool, run_adapt, run_nuvqe, run_uscc, run_vqe, uccsd_ansatz, with_sector, RunSettings,
};
use vqe_bench::scan::{run_scan, ScanSpec};
use vqe_bench::summary::summarize;
use vqe_bench::BenchError;
use vqe_core::excited::{
    default_excited_pool, fs_vqe, qeom, spectrum_json, vqd, AnsatzFactory, EomBasis, FsConfig, SpectrumLine, VqdConfig,
};
use vqe_core::fci::fci_solve;
use vqe_core::fermion::{parse_fcidump, MolecularIntegrals};
use vqe_core::pools::PoolFlavor;
use vqe_core::vqe::{minimize, pool_ansatz, Problem, VqeResult};

#[derive(Parser)]
#[command(name = "vqe", version, about = "Statevector VQE workbench")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// FCIDUMP file to load.
    #[arg(long, global = true, conflicts_with = "fixture")]
    fcidump: Option<PathBuf>,
    /// Fixture label from the manifest.
    #[arg(long, global = true)]
    fixture: Option<String>,
    /// Fixture manifest (default: $VQE_MANIFEST or fixtures/manifest.json).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Electron counts `alpha,beta`.
    #[arg(long, global = true, value_parser = parse_sector)]
    sector: Option<(usize, usize)>,
    /// Screening or gradient threshold.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// ADAPT gradient-norm threshold.
    #[arg(long, global = true)]
    conv: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Ground {
    Fci,
    Vqe,
}

#[derive(Subcommand)]
enum Cmd {
    /// UCCSD-VQE.
    Vqe,
    /// ADAPT-VQE.
    Adapt {
        #[arg(long, value_parser = parse_pool, default_value = "singlet-gsd")]
        pool: PoolFlavor,
    },
    /// Selectively screened UCC.
    Uscc,
    /// Jastrow-augmented UCCSD-VQE.
    Nuvqe,
    /// Variational quantum deflation.
    Vqd {
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Folded-spectrum VQE around `omega`.
    Fs {
        #[arg(long, allow_hyphen_values = true)]
        omega: f64,
    },
    /// Equation-of-motion excitation energies.
    Qeom {
        #[arg(long, value_enum, default_value_t = Ground::Vqe)]
        ground: Ground,
    },
    /// Exact sector spectrum.
    Fci {
        /// Number of levels (all by default).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Run a scan described by a JSON config.
    Scan {
        #[arg(long)]
        config: PathBuf,
        /// Also write the summary tables as JSON here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Dump an operator pool as JSON lines.
    Pools {
        #[arg(long, value_parser = parse_pool, default_value = "uccsd")]
        flavor: PoolFlavor,
    },
}

fn parse_sector(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected alpha,beta, got {s:?}"))?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

fn parse_pool(s: &str) -> Result<PoolFlavor, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown pool {s:?}; expected uccsd, generalized-sd, singlet-gsd, qubit or uscc"))
}

/// Exit status 2: bad input. Exit status 1: computation failed or flagged.
enum Failure {
    Input(BenchError),
    Compute(BenchError),
    Unconverged,
}

fn input<E: Into<BenchError>>(e: E) -> Failure {
    Failure::Input(e.into())
}

fn compute<E: Into<BenchError>>(e: E) -> Failure {
    Failure::Compute(e.into())
}

fn default_manifest() -> PathBuf {
    if let Some(p) = std::env::var_os("VQE_MANIFEST") {
        return PathBuf::from(p);
    }
    let local = PathBuf::from("fixtures/manifest.json");
    if local.exists() {
        return local;
    }
    let bundled = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/manifest.json");
    if bundled.exists() {
        bundled
    } else {
        local
    }
}

struct Loaded {
    mi: MolecularIntegrals,
    problem: Problem,
    e_fci: f64,
}

fn load(cli: &Cli) -> Result<Loaded, Failure> {
    let mi = match (&cli.fcidump, &cli.fixture) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|source| {
                input(BenchError::Io {
                    path: path.display().to_string(),
                    source,
                })
            })?;
            parse_fcidump(&text).map_err(input)?
        }
        (None, Some(label)) => {
            let path = cli.manifest.clone().unwrap_or_else(default_manifest);
            let m = vqe_bench::scan::load_manifest(&path).map_err(Failure::Input)?;
            let entry = m
                .get(label)
                .ok_or_else(|| input(BenchError::MissingFixtures(vec![label.clone()])))?;
            m.load_integrals(entry).map_err(input)?
        }
        (None, None) => {
            return Err(input(BenchError::InvalidInput("one of --fcidump or --fixture is required".into())))
        }
    };
    let mi = with_sector(&mi, cli.sector).map_err(Failure::Input)?;
    let problem = Problem::from_integrals(&mi).map_err(input)?;
    let e_fci = fci_solve(&problem.hamiltonian, &problem.sector, 1).map_err(input)?[0].energy;
    Ok(Loaded { mi, problem, e_fci })
}

fn settings(cli: &Cli) -> RunSettings {
    let mut s = RunSettings::default();
    if let Some(c) = cli.conv.or(cli.eps) {
        s.adapt.conv = c;
    }
    match cli.seed {
        Some(seed) => s.with_seed(seed),
        None => s,
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(p) => std::fs::write(p, text).map_err(|source| {
            input(BenchError::Io {
                path: p.display().to_string(),
                source,
            })
        }),
        None => {
            let mut o = std::io::stdout().lock();
            o.write_all(text.as_bytes()).and_then(|_| o.flush()).map_err(|source| {
                compute(BenchError::Io {
                    path: "<stdout>".into(),
                    source,
                })
            })
        }
    }
}

fn report(cli: &Cli, l: &Loaded, method: &str, eps: Option<f64>, r: &VqeResult) -> Result<(), Failure> {
    let abs_err = (r.energy - l.e_fci).abs();
    let text = match cli.format {
        Format::Json => {
            serde_json::to_string_pretty(&json!({
                "label": l.mi.label,
                "method": method,
                "eps": eps,
                "energy": r.energy,
                "e_fci": l.e_fci,
                "abs_err": abs_err,
                "n_params": r.n_params(),
                "iterations": r.iterations,
                "converged": r.converged,
                "ansatz": r.ansatz,
                "parameters": r.parameters,
                "jastrow": r.jastrow,
            }))
            .map_err(compute)?
                + "\n"
        }
        Format::Csv => {
            let row = vqe_bench::scan::ScanRow {
                molecule: String::new(),
                basis: String::new(),
                label: l.mi.label.clone(),
                r: f64::NAN,
                method: method.into(),
                eps,
                energy: r.energy,
                e_fci: l.e_fci,
                abs_err,
                n_params: r.n_params(),
                n_iterations: r.iterations,
                wall_time: 0.0,
                status: if r.converged { "ok" } else { "unconverged" }.into(),
            };
            let mut buf = Vec::new();
            write_csv(&[row], &mut buf, false).map_err(compute)?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
    };
    emit(cli, &text)?;
    if r.converged {
        Ok(())
    } else {
        Err(Failure::Unconverged)
    }
}

fn spectrum(cli: &Cli, lines: &[SpectrumLine]) -> Result<(), Failure> {
    let text = match cli.format {
        Format::Json => spectrum_json(lines) + "\n",
        Format::Csv => {
            let mut s = String::from("level,energy,gap_to_ground\n");
            for l in lines {
                s.push_str(&format!("{},{:.12e},{:.12e}\n", l.level, l.energy, l.gap_to_ground));
            }
            s
        }
    };
    emit(cli, &text)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let s = settings(cli);
    match &cli.cmd {
        Cmd::Scan { config, summary } => {
            if !config.exists() {
                return Err(input(BenchError::InvalidInput(format!("no such config {}", config.display()))));
            }
            let mut spec = ScanSpec::load(config).map_err(Failure::Input)?;
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            spec.validate().map_err(Failure::Input)?;
            let rows = run_scan(&spec).map_err(|e| match e {
                BenchError::MissingFixtures(_) | BenchError::InvalidSpec(_) => Failure::Input(e),
                _ => Failure::Compute(e),
            })?;
            let text = match cli.format {
                Format::Json => json_lines(&rows).map_err(compute)?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_csv(&rows, &mut buf, true).map_err(compute)?;
                    String::from_utf8(buf).expect("csv is utf-8")
                }
            };
            let target = cli.out.clone().or(spec.output.clone());
            match target {
                Some(p) => std::fs::write(&p, text).map_err(|source| {
                    input(BenchError::Io {
                        path: p.display().to_string(),
                        source,
                    })
                })?,
                None => emit(cli, &text)?,
            }
            if let Some(p) = summary {
                let json = serde_json::to_string_pretty(&summarize(&rows)).map_err(compute)?;
                std::fs::write(p, json).map_err(|source| {
                    input(BenchError::Io {
                        path: p.display().to_string(),
                        source,
                    })
                })?;
            }
            if rows.iter().any(|r| r.status != "ok") {
                return Err(Failure::Unconverged);
            }
            Ok(())
        }
        Cmd::Pools { flavor } => {
            let l = load(cli)?;
            let pool = build_pool(&l.mi, *flavor, cli.eps, s.uscc_max_round).map_err(|e| match e {
                BenchError::InvalidInput(_) => Failure::Input(e),
                _ => Failure::Compute(e),
            })?;
            log::info!("{} pool: {} operators", flavor, pool.len());
            emit(cli, &pool.to_json_lines())
        }
        Cmd::Fci { k } => {
            let l = load(cli)?;
            let levels = fci_solve(&l.problem.hamiltonian, &l.problem.sector, k.unwrap_or(usize::MAX)).map_err(compute)?;
            let e0 = levels[0].energy;
            let lines: Vec<SpectrumLine> = levels
                .iter()
                .enumerate()
                .map(|(i, e)| SpectrumLine {
                    level: i,
                    energy: e.energy,
                    gap_to_ground: e.energy - e0,
                    overlap_diagnostics: None,
                })
                .collect();
            spectrum(cli, &lines)
        }
        Cmd::Vqe => {
            let l = load(cli)?;
            let r = run_vqe(&l.problem, &l.mi, &s).map_err(Failure::Compute)?;
            report(cli, &l, "vqe", None, &r)
        }
        Cmd::Adapt { pool } => {
            let l = load(cli)?;
            let conv = s.adapt.conv;
            if !(conv > 0.0) {
                return Err(input(BenchError::InvalidInput("--conv must be positive".into())));
            }
            let r = run_adapt(&l.problem, &l.mi, *pool, &[conv], &s)
                .map_err(Failure::Compute)?
                .remove(0);
            report(cli, &l, "adapt", Some(conv), &r)
        }
        Cmd::Uscc => {
            let l = load(cli)?;
            let eps = cli.eps.ok_or_else(|| input(BenchError::InvalidInput("uscc needs --eps".into())))?;
            if !(eps > 0.0) {
                return Err(input(BenchError::InvalidInput("--eps must be positive".into())));
            }
            let r = run_uscc(&l.problem, &l.mi, eps, &s).map_err(Failure::Compute)?;
            report(cli, &l, "uscc", Some(eps), &r)
        }
        Cmd::Nuvqe => {
            let l = load(cli)?;
            let r = run_nuvqe(&l.problem, &l.mi, &s).map_err(Failure::Compute)?;
            report(cli, &l, "nuvqe", None, &r)
        }
        Cmd::Vqd { k } => {
            let l = load(cli)?;
            let engine = l.problem.sector_engine().map_err(compute)?;
            let pool = default_excited_pool(&l.mi).map_err(compute)?;
            let cfg = VqdConfig {
                k: *k,
                seed: cli.seed.unwrap_or(VqdConfig::default().seed),
                optimizer: s.optimizer.clone(),
                ..VqdConfig::default()
            };
            let out = vqd(&engine, &l.problem.hamiltonian, &AnsatzFactory::FixedPool(pool), &cfg).map_err(compute)?;
            spectrum(cli, &out.spectrum())?;
            if !out.collapsed.is_empty() || out.levels.iter().any(|r| !r.converged) {
                return Err(Failure::Unconverged);
            }
            Ok(())
        }
        Cmd::Fs { omega } => {
            let l = load(cli)?;
            let engine = l.problem.sector_engine().map_err(compute)?;
            let ansatz = pool_ansatz(&engine, &default_excited_pool(&l.mi).map_err(compute)?).map_err(compute)?;
            let cfg = FsConfig {
                seed: cli.seed.unwrap_or(FsConfig::default().seed),
                ..FsConfig::default()
            };
            let r = fs_vqe(&engine, &ansatz, *omega, &cfg).map_err(compute)?;
            report(cli, &l, "fs", None, &r)
        }
        Cmd::Qeom { ground } => {
            let l = load(cli)?;
            let engine = l.problem.sector_engine().map_err(compute)?;
            let (e0, psi) = match ground {
                Ground::Fci => {
                    let g = fci_solve(&l.problem.hamiltonian, &l.problem.sector, 1).map_err(compute)?.remove(0);
                    (g.energy, g.vector)
                }
                Ground::Vqe => {
                    let ansatz = uccsd_ansatz(&engine, &l.mi).map_err(Failure::Compute)?;
                    let r = minimize(&engine, &ansatz, &s.optimizer, &vec![0.0; ansatz.len()]).map_err(compute)?;
                    (r.energy, engine.prepare(&ansatz, &r.parameters))
                }
            };
            let basis = EomBasis::singles_doubles(&l.mi).map_err(compute)?;
            let q = qeom(&engine, &psi, &basis).map_err(compute)?;
            let mut lines = vec![SpectrumLine {
                level: 0,
                energy: e0,
                gap_to_ground: 0.0,
                overlap_diagnostics: None,
            }];
            lines.extend(q.excitation_energies.iter().enumerate().map(|(i, w)| SpectrumLine {
                level: i + 1,
                energy: e0 + w,
                gap_to_ground: *w,
                overlap_diagnostics: None,
            }));
            spectrum(cli, &lines)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Unconverged) => {
            log::warn!("computation flagged unconverged");
            ExitCode::from(1)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
