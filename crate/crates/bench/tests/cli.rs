use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn vqe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vqe"))
        .args(args)
        .current_dir(root())
        .env_remove("VQE_MANIFEST")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn fci_energy(label: &str) -> f64 {
    let m: Value = serde_json::from_str(&std::fs::read_to_string(root().join("fixtures/manifest.json")).unwrap()).unwrap();
    m["fixtures"]
        .as_array()
        .unwrap()
        .iter()
        .find(|f| f["label"] == label)
        .unwrap()["fci_ground_energy"]
        .as_f64()
        .unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("vqe-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn fci_prints_the_sector_spectrum() {
    let o = vqe(&["fci", "--fixture", "h2_sto3g_0.735", "--sector", "1,1"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let levels = v.as_array().unwrap();
    assert_eq!(levels.len(), 4);
    assert!((levels[0]["energy"].as_f64().unwrap() - fci_energy("h2_sto3g_0.735")).abs() < 1e-8);
    assert_eq!(levels[0]["gap_to_ground"].as_f64().unwrap(), 0.0);
    let e: Vec<f64> = levels.iter().map(|l| l["energy"].as_f64().unwrap()).collect();
    assert!(e.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn adapt_reaches_fci_on_h2() {
    let o = vqe(&["adapt", "--fixture", "h2_sto3g_0.735", "--conv", "1e-3"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!((v["energy"].as_f64().unwrap() - fci_energy("h2_sto3g_0.735")).abs() < 1e-6);
    assert_eq!(v["method"], "adapt");
    assert_eq!(v["converged"], true);
}

#[test]
fn input_errors_exit_with_two() {
    assert_eq!(code(&vqe(&["scan", "--config", "missing.json"])), 2);
    let bogus = vqe(&["fci", "--bogus"]);
    assert_eq!(code(&bogus), 2);
    assert!(String::from_utf8_lossy(&bogus.stderr).contains("Usage"));
    assert_eq!(code(&vqe(&["fci"])), 2);
    assert_eq!(code(&vqe(&["fci", "--fixture", "no_such_fixture"])), 2);
    assert_eq!(code(&vqe(&["uscc", "--fixture", "h2_sto3g_0.735"])), 2);
    assert_eq!(code(&vqe(&["fci", "--fixture", "h2_sto3g_0.735", "--sector", "3,0"])), 2);
    assert_eq!(code(&vqe(&["fci", "--fixture", "h2_sto3g_0.735", "--sector", "x"])), 2);
    assert_eq!(code(&vqe(&["fci", "--fcidump", "/nonexistent.fcidump"])), 2);
    assert_eq!(code(&vqe(&["adapt", "--fixture", "h2_sto3g_0.735", "--pool", "bogus"])), 2);
    assert_eq!(code(&vqe(&["pools", "--fixture", "h2_sto3g_0.735", "--flavor", "uscc"])), 2);
}

#[test]
fn fcidump_input_matches_the_fixture() {
    let o = vqe(&["vqe", "--fcidump", "fixtures/h2_sto3g_1.500.fcidump", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert!(!header.contains(&"wall_time"));
    assert!(col("abs_err").parse::<f64>().unwrap() < 1e-8);
    assert!((col("e_fci").parse::<f64>().unwrap() - fci_energy("h2_sto3g_1.500")).abs() < 1e-8);
    assert_eq!(col("status"), "ok");
}

#[test]
fn method_subcommands_run_on_h2() {
    let e0 = fci_energy("h2_sto3g_0.735");
    for (args, tol) in [
        (vec!["vqe"], 1e-8),
        (vec!["uscc", "--eps", "1e-2"], 1e-8),
        (vec!["nuvqe"], 1e-6),
        (vec!["adapt", "--pool", "qubit", "--conv", "1e-6"], 1e-8),
    ] {
        let mut full = args.clone();
        full.extend(["--fixture", "h2_sto3g_0.735"]);
        let o = vqe(&full);
        assert_eq!(code(&o), 0, "{args:?}");
        let v = json(&o);
        let e = v["energy"].as_f64().unwrap();
        assert!((e - e0).abs() < tol && e >= e0 - 1e-9, "{args:?}: {e}");
    }
}

#[test]
fn excited_state_subcommands() {
    let fci = json(&vqe(&["fci", "--fixture", "h2_sto3g_0.735"]));
    let levels: Vec<f64> = fci.as_array().unwrap().iter().map(|l| l["energy"].as_f64().unwrap()).collect();

    let o = vqe(&["vqd", "--fixture", "h2_sto3g_0.735", "--k", "1"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let lines = v.as_array().unwrap();
    assert_eq!(lines.len(), 2);
    assert!((lines[1]["gap_to_ground"].as_f64().unwrap() - (levels[1] - levels[0])).abs() < 1e-3);

    let o = vqe(&["qeom", "--fixture", "h2_sto3g_0.735", "--ground", "fci", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("level,energy,gap_to_ground"));
    let gap: f64 = text.lines().nth(2).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((gap - (levels[1] - levels[0])).abs() < 1e-3);

    let omega = format!("{}", levels[1] + 0.005);
    let o = vqe(&["fs", "--fixture", "h2_sto3g_0.735", "--omega", &omega]);
    assert_eq!(code(&o), 0);
    assert!((json(&o)["energy"].as_f64().unwrap() - levels[1]).abs() < 1e-3);
}

#[test]
fn pools_dump_one_line_per_operator() {
    let o = vqe(&["pools", "--fixture", "h4_sto3g_0.900"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 26);
    let o = vqe(&["pools", "--fixture", "h4_sto3g_0.900", "--flavor", "uscc", "--eps", "1e3"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 0);
}

#[test]
fn scan_writes_rows_and_summary() {
    let dir = scratch("scan");
    let config = dir.join("scan.json");
    let rows = dir.join("rows.csv");
    let summary = dir.join("summary.json");
    let manifest = root().join("fixtures/manifest.json");
    std::fs::write(
        &config,
        format!(
            r#"{{"manifest": "{}", "fixtures": [{{"molecule": "lih", "basis": "STO-3G", "grid": [1.4, 3.0]}}],
                "methods": [{{"flavor": "adapt", "eps": 0.001}}, {{"flavor": "uscc", "eps": 0.001}}],
                "output": "{}"}}"#,
            manifest.display(),
            rows.display()
        ),
    )
    .unwrap();
    let c = config.to_str().unwrap();
    let o = vqe(&["scan", "--config", c, "--format", "csv", "--summary", summary.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&rows).unwrap();
    assert_eq!(text.lines().count(), 2 + 4);
    assert!(text.lines().nth(1).unwrap().contains("wall_time"));
    let s: Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["rows"].as_array().unwrap().len(), 2);
    assert_eq!(s["ratios"].as_array().unwrap().len(), 1);

    let out = dir.join("rows.jsonl");
    let o = vqe(&["scan", "--config", c, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 4);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn unconverged_scan_exits_with_one() {
    let dir = scratch("unconverged");
    let config = dir.join("scan.json");
    std::fs::write(
        &config,
        format!(
            r#"{{"manifest": "{}", "fixtures": [{{"molecule": "h4", "basis": "STO-3G", "grid": [1.8]}}],
                "methods": [{{"flavor": "vqe"}}], "settings": {{"optimizer": {{"max_evals": 2}}}}}}"#,
            root().join("fixtures/manifest.json").display()
        ),
    )
    .unwrap();
    let o = vqe(&["scan", "--config", config.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("unconverged"));

    std::fs::write(&config, r#"{"fixtures": [{"molecule": "h2", "basis": "STO-3G"}], "methods": [{"flavor": "vqe"}]}"#)
        .unwrap();
    assert_eq!(code(&vqe(&["scan", "--config", config.to_str().unwrap()])), 2);
    std::fs::remove_dir_all(&dir).unwrap();
}
