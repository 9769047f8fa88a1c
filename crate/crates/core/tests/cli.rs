//! The `modgraph` binary end to end: train, cluster, shuffle-test, lesion.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use modgraph::netio::load_archive;

const BIN: &str = env!("CARGO_BIN_EXE_modgraph");

fn mnist_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist10k")
}

fn run(args: &[&str]) -> Output {
    let out = Command::new(BIN)
        .args(args)
        .env_remove("MODGRAPH_WORKERS")
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "modgraph {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn train_small(dir: &Path) -> PathBuf {
    let data = mnist_dir();
    run(&[
        "train", "--dataset", "idx", "--data", s(&data), "--take", "600", "--hidden", "16,16",
        "--epochs", "1", "--prune", "--prune-epochs", "1", "--batch-size", "64", "--seed", "3",
        "--out", s(dir),
    ]);
    dir.join("final.mg")
}

#[test]
fn full_pipeline_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let net_path = train_small(tmp.path());
    for f in ["final.mg", "pre_pruning.mg", "metrics.csv", "train.json"] {
        assert!(tmp.path().join(f).is_file(), "missing {f}");
    }
    let net = load_archive(&net_path).unwrap();
    assert_eq!(net.layer_dims(), &[784, 16, 16, 10]);
    let metrics = fs::read_to_string(tmp.path().join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3, "{metrics}");

    let cl = tmp.path().join("cluster");
    fs::create_dir_all(&cl).unwrap();
    run(&["cluster", s(&net_path), "--k", "4", "--seed", "1", "--out", s(&cl)]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(cl.join("clustering.json")).unwrap()).unwrap();
    let ncut = report["ncut"].as_f64().unwrap();
    assert!((0.0..=4.0).contains(&ncut), "{report}");
    let partition = fs::read_to_string(cl.join("partition.csv")).unwrap();
    assert!(partition.starts_with("layer,neuron_index,cluster"));

    let sh = tmp.path().join("shuffle");
    fs::create_dir_all(&sh).unwrap();
    run(&["shuffle-test", s(&net_path), "--k", "4", "--n-shuffles", "9", "--kind", "nonzero", "--seed", "2", "--out", s(&sh)]);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(sh.join("summary.json")).unwrap()).unwrap();
    let p = summary["p_value"].as_f64().unwrap();
    assert!(p >= 0.1 && p <= 1.0, "{summary}");
    assert_eq!(fs::read_to_string(sh.join("nulls.csv")).unwrap().lines().count(), 10);

    let le = tmp.path().join("lesion");
    fs::create_dir_all(&le).unwrap();
    let data = mnist_dir();
    run(&[
        "lesion", s(&net_path), s(&cl.join("partition.csv")), "--data", s(&data), "--split", "train",
        "--skip", "9000", "--take", "500", "--n-null", "9", "--all-pairs", "--pair-n-null", "4",
        "--seed", "5", "--out", s(&le),
    ]);
    let single = fs::read_to_string(le.join("single_lesion.csv")).unwrap();
    assert!(single.starts_with("layer,label,acc_diff,p_value,proportion,type"));
    assert!(single.lines().count() > 1);
    assert!(le.join("lesion.json").is_file());
    assert!(le.join("all_pairs.csv").is_file());
}

#[test]
fn worker_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let net_path = train_small(tmp.path());
    let outputs: Vec<String> = ["1", "8"]
        .iter()
        .map(|w| {
            let dir = tmp.path().join(format!("w{w}"));
            fs::create_dir_all(&dir).unwrap();
            run(&["shuffle-test", s(&net_path), "--n-shuffles", "12", "--seed", "4", "--workers", w, "--out", s(&dir)]);
            fs::read_to_string(dir.join("nulls.csv")).unwrap()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn missing_seed_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "train", "--dataset", "random", "--examples", "64", "--input-dim", "12", "--classes", "3",
        "--hidden", "6", "--epochs", "1", "--batch-size", "16", "--out", s(tmp.path()),
    ]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("seed: "), "{stderr}");
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[train]\ndataset = \"random\"\nexamples = 64\ninput-dim = 12\nclasses = 3\nhidden = [5, 4]\nepochs = 3\nbatch_size = 16\nseed = 9\n").unwrap();
    run(&["--config", s(&cfg), "train", "--epochs", "2", "--out", s(tmp.path())]);
    let net = load_archive(tmp.path().join("final.mg")).unwrap();
    assert_eq!(net.layer_dims(), &[12, 5, 4, 3]);
    let metrics = fs::read_to_string(tmp.path().join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3);
}

#[test]
fn bad_input_fails_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let bogus = tmp.path().join("bogus.mg");
    fs::write(&bogus, b"not an archive").unwrap();
    let out = Command::new(BIN).args(["cluster", s(&bogus)]).output().unwrap();
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}
