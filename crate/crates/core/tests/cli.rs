use std::path::{Path, PathBuf};
use std::process::Command;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn nesslab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nesslab"))
        .args(args)
        .env("NESSLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn run(sub: &str, cfg: &str, out: &Path) -> i32 {
    let out = nesslab(&[sub, "--config", config(cfg).to_str().unwrap(), "--out", out.to_str().unwrap()]);
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn summary_column(path: &Path, column: &str) -> Vec<String> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let idx = rdr.headers().unwrap().iter().position(|h| h == column).unwrap();
    rdr.records().map(|r| r.unwrap()[idx].to_string()).collect()
}

#[test]
fn fredkin_all_tasks_succeed() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("all", "fredkin_n4.json", dir.path()), 0);
    let fit = read_json(&dir.path().join("gibbs_fit.json"));
    let slope = fit["slopes"][0].as_f64().unwrap();
    assert!((slope + 3f64.ln()).abs() < 1e-6);
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert!(manifest["residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(manifest["config"]["model"]["family"], "fredkin");
    let dot = std::fs::read_to_string(dir.path().join("wdag.dot")).unwrap();
    assert!(dot.starts_with("digraph") && dot.trim_end().ends_with('}'));
}

#[test]
fn single_subcommand_writes_only_its_files() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("sectors", "fredkin_n6.json", dir.path()), 0);
    assert!(dir.path().join("sectors.csv").exists());
    assert!(!dir.path().join("ness_diag.csv").exists());
    let rows = std::fs::read_to_string(dir.path().join("sectors.csv")).unwrap();
    assert_eq!(rows.lines().count(), 17);
}

#[test]
fn steady_report_fields() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("steady", "infinite_temperature.json", dir.path()), 0);
    let steady = read_json(&dir.path().join("steady.json"));
    for key in ["null_dim", "residual", "trace", "min_eig", "offdiag_mass"] {
        assert!(!steady[key].is_null(), "{key}");
    }
    let mut rdr = csv::Reader::from_path(dir.path().join("ness_diag.csv")).unwrap();
    for r in rdr.records() {
        let v: f64 = r.unwrap()[3].parse().unwrap();
        assert!((v - 1.0 / 16.0).abs() < 1e-12);
    }
}

#[test]
fn two_temperature_xx_exits_two_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("all", "xx_two_temperatures.json", dir.path()), 2);
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["exit_code"], 2);
    assert!(manifest["consistency"]["witness"]["path_a"].is_array());
}

#[test]
fn multiplicity_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("all", "fredkin_left_only.json", dir.path()), 2);
    assert_eq!(read_json(&dir.path().join("steady.json"))["null_dim"], 3);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("all", "tjz_dis2.json", dir.path()), 2);
    assert_eq!(read_json(&dir.path().join("manifest.json"))["null_dim"], 2);
}

#[test]
fn invalid_config_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"model": {"family": "fredkin", "n": 4}, "bath": {}, "extra": 1}"#).unwrap();
    let out = nesslab(&["all", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let missing = dir.path().join("missing.json");
    let out = nesslab(&["steady", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run("all", "pairflip_n3.json", a.path()), 0);
    assert_eq!(run("all", "pairflip_n3.json", b.path()), 0);
    for f in ["sectors.csv", "ness_diag.csv", "gibbs_fit.csv", "qdbc.csv", "fcs.csv", "wdag.dot", "osee.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn sweep_over_temperatures() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("sweep", "sweep_beta.json", dir.path()), 0);
    let slopes: Vec<f64> = summary_column(&dir.path().join("summary.csv"), "slope")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let expected = [0.0, -2f64.ln(), -3f64.ln()];
    assert_eq!(slopes.len(), 3);
    for (s, e) in slopes.iter().zip(expected) {
        assert!((s - e).abs() < 1e-6, "{s} vs {e}");
    }
    assert!(dir.path().join("point_001/manifest.json").exists());
}

#[test]
fn sweep_over_sizes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("sweep", "sweep_sizes.json", dir.path()), 0);
    let sectors = summary_column(&dir.path().join("summary.csv"), "sectors");
    assert_eq!(sectors, vec!["9", "16"]);
}

#[test]
fn empty_sweep() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("sweep", "sweep_empty.json", dir.path()), 0);
    let text = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
}
