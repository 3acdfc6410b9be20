use std::path::Path;
use std::process::{Command, Output};

fn pdlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdlab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn pdlab")
}

fn generate(dir: &Path, m: &str, n: &str, seed: &str) {
    let out = pdlab(&["generate", "--m", m, "--n", n, "--seed", seed, "--out", "inst.json"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn generate_then_solve_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "3", "6", "4");
    assert!(dir.path().join("inst.json.manifest.json").exists());

    let out = pdlab(&["solve", "--instance", "inst.json", "--csv", "run.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "cell_id,seed,m,n,l,phi,kappa,Phi,T_basis,T_local,T_total,epochs,final_dist,solved"
    );
    assert!(lines[1].ends_with(",true"));
}

#[test]
fn analyze_reports_bound_chain() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "4", "9", "2");
    let out = pdlab(&["analyze", "--instance", "inst.json"], dir.path());
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["bound_chain_holds"], serde_json::Value::Bool(true));
    assert!(v["report"]["kappa"].as_f64().unwrap() >= 1.0);
}

#[test]
fn probe_sigma_max_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdlab(
        &["probe", "sigma-max", "--m", "5", "--n", "10", "--trials", "50"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 2);
}

#[test]
fn custom_experiment_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdlab(
        &[
            "experiment", "custom", "--sizes", "2x5,3x6", "--count", "4", "--seed", "9",
            "--threads", "2", "--out", "exp",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["runs.csv", "tail.csv", "quantiles.csv", "slopes.csv", "manifest.json"] {
        assert!(dir.path().join("exp").join(f).exists(), "missing {f}");
    }
    let runs = std::fs::read_to_string(dir.path().join("exp/runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 9);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pdlab(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(pdlab(&["solve", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(
        pdlab(&["generate", "--m", "5", "--n", "0", "--out", "x.json"], dir.path()).status.code(),
        Some(1)
    );
    assert_eq!(
        pdlab(&["solve", "--instance", "missing.json"], dir.path()).status.code(),
        Some(2)
    );
}
