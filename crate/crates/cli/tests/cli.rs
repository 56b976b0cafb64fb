use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lpjmm::io::{read_json, Manifest};

fn lpjmm(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpjmm"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

const SPEC: &str = r#"{
  "n_actors": 14,
  "omega": [0.5, 0.5],
  "mu": [[-1.5, 0.0], [1.5, 0.0]],
  "kappa2": [0.3, 0.3],
  "beta": 0.0, "sigma2": 1.0, "tau2": 0.3, "phi": 0.5,
  "layers": [{"a": 2.0, "b": -1.0, "theta": 1.5}, {"a": 1.0, "b": 0.5, "theta": 2.0}],
  "seed": 0
}"#;

/// Simulates a small two-layer dataset and shortens the generated config.
fn dataset(dir: &Path) -> PathBuf {
    std::fs::write(dir.join("spec.json"), SPEC).unwrap();
    ok(&lpjmm(
        &["simulate", "--spec", "spec.json", "--seed", "3", "--missing", "0.1", "--h", "3", "--out", "ds"],
        dir,
    ));
    let path = dir.join("ds/run.toml");
    let text = std::fs::read_to_string(&path)
        .unwrap()
        .replace("n_adapt = 20000", "n_adapt = 50")
        .replace("n_burn = 20000", "n_burn = 50")
        .replace("n_keep = 10000", "n_keep = 60")
        .replace("thin = 10", "thin = 2")
        .replace("store_pointwise = false", "store_pointwise = true")
        .replace("gof_stride = 10", "gof_stride = 5");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn help_lists_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&lpjmm(&["--help"], dir.path()));
    for cmd in ["simulate", "fit", "cluster", "gof", "stats", "sweep-h", "waic", "pca"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn fit_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    dataset(d);
    let stats = ok(&lpjmm(&["stats", "--config", "ds/run.toml"], d));
    assert!(stats.contains("\"missing_pairs\""));

    let fit = lpjmm(&["fit", "--config", "ds/run.toml"], d);
    ok(&fit);
    assert!(String::from_utf8_lossy(&fit.stderr).contains("largest number of groups"));
    let out = d.join("ds/out");
    let manifest: Manifest = read_json(&out.join("manifest.json")).unwrap();
    manifest.verify(&out).unwrap();
    assert_eq!(manifest.seed, 1);
    for f in ["chain.csv", "loglik.csv", "summary.json", "gof.csv", "gof.json", "positions.csv", "pointwise.csv", "partition_maxpear.csv", "partition_minbinder.csv", "partition_greedyepl.csv", "config.toml", "chain_meta.json"] {
        assert!(manifest.files.iter().any(|e| e.file == f), "{f} not in manifest");
    }
    // 30 draws at stride 5.
    assert_eq!(std::fs::read_to_string(out.join("gof.csv")).unwrap().lines().count(), 1 + 6 * 2);

    let waic = ok(&lpjmm(&["waic", "--run", "ds/out"], d));
    assert!(waic.contains("\"p_waic\""));
    let cl = ok(&lpjmm(&["cluster", "--run", "ds/out", "--methods", "maxpear", "--truth", "ds/truth.csv", "--out", "cl"], d));
    assert!(cl.contains("truth_ari"));
    assert_eq!(
        std::fs::read(d.join("cl/partition_maxpear.csv")).unwrap(),
        std::fs::read(out.join("partition_maxpear.csv")).unwrap()
    );
    let gof = ok(&lpjmm(&["gof", "--config", "ds/run.toml", "--run", "ds/out", "--stride", "100", "--out", "g"], d));
    assert!(gof.contains("\"replicates\": 0"));
    assert_eq!(std::fs::read_to_string(d.join("g/gof.csv")).unwrap().lines().count(), 1);

    // The saved config reproduces the run exactly.
    ok(&lpjmm(&["fit", "--config", "ds/out/config.toml", "--out", "again"], d));
    assert_eq!(
        std::fs::read(out.join("chain.csv")).unwrap(),
        std::fs::read(d.join("again/chain.csv")).unwrap()
    );
    let again: Manifest = read_json(&d.join("again/manifest.json")).unwrap();
    assert_eq!(again.data_fingerprint, manifest.data_fingerprint);
}

#[test]
fn parallel_chains_use_their_own_directories_and_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    dataset(d);
    ok(&lpjmm(&["fit", "--config", "ds/run.toml", "--chains", "2", "--seed", "7", "--out", "multi"], d));
    let m1: Manifest = read_json(&d.join("multi/chain_1/manifest.json")).unwrap();
    let m2: Manifest = read_json(&d.join("multi/chain_2/manifest.json")).unwrap();
    assert_eq!((m1.seed, m2.seed), (7, 8));
    assert_ne!(
        std::fs::read(d.join("multi/chain_1/chain.csv")).unwrap(),
        std::fs::read(d.join("multi/chain_2/chain.csv")).unwrap()
    );
}

#[test]
fn sweep_h_tabulates_each_value() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    dataset(d);
    let table = ok(&lpjmm(&["sweep-h", "--config", "ds/run.toml", "--h", "1,2", "--out", "sweep"], d));
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("h,waic,groups_maxpear,ari_maxpear"));
    assert!(lines[1].starts_with("1,") && lines[2].starts_with("2,"));
    assert!(d.join("sweep/h_2/manifest.json").exists());
}

#[test]
fn pca_writes_attribute_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cols.csv"), "age,seniority\n30,2\n40,9\n50,20\n60,31\n").unwrap();
    let text = ok(&lpjmm(&["pca", "--input", "cols.csv", "--out", "x.csv", "--name", "pc"], d));
    assert!(text.contains("variance_explained"));
    let x = std::fs::read_to_string(d.join("x.csv")).unwrap();
    assert!(x.starts_with("pc\n"));
    assert_eq!(x.lines().count(), 5);
}

#[test]
fn input_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = dataset(d);
    std::fs::write(d.join("ds/layer_1.csv"), "0,1\n0,0\n").unwrap();
    let out = lpjmm(&["stats", "--config", cfg.to_str().unwrap()], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1 column 2"));

    assert_eq!(lpjmm(&["fit", "--config", "missing.toml"], d).status.code(), Some(2));
    std::fs::write(d.join("bad.toml"), "[model]\nk = 2\n").unwrap();
    assert_eq!(lpjmm(&["fit", "--config", "bad.toml"], d).status.code(), Some(2));
    assert_eq!(lpjmm(&["simulate", "--scenario", "nope", "--out", "x"], d).status.code(), Some(2));
    assert_eq!(lpjmm(&["waic", "--run", "."], d).status.code(), Some(2));
}
