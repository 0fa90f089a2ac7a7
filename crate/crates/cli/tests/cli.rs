use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn betastab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_betastab")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(
        &path,
        r#"{
  "model": {"kind": "dnn", "width": 8, "depth": 2, "stabilizer": "independent"},
  "initial_lr": 0.5,
  "seed": 3,
  "max_epochs": 4,
  "dataset": {"kind": "gaussian_frames", "num_classes": 3, "feature_dim": 4,
              "n": 120, "class_separation": 3.0, "noise_sigma": 1.0, "seed": 2}
}"#,
    )
    .unwrap();
    path
}

#[test]
fn train_writes_outputs_and_norms_reads_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out = dir.path().join("run");
    let res = betastab(&["train", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["record.csv", "summary.txt", "config.json", "checkpoint.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let norms = betastab(&["norms", "--checkpoint", out.join("checkpoint.json").to_str().unwrap()]);
    assert_eq!(code(&norms), 0);
    assert!(String::from_utf8_lossy(&norms.stdout).contains("stage0.weight"));
}

#[test]
fn sweep_writes_its_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out = dir.path().join("sweep");
    let res = betastab(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--grid",
        "0.5,0.05",
        "--seeds",
        "1,2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1 + 8);
    assert!(out.join("summary.csv").is_file());
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let text = std::fs::read_to_string(&config).unwrap().replace("\"seed\": 3,", "\"seed\": 3, \"speed\": 1,");
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, text).unwrap();
    let out = dir.path().join("x");
    let out = out.to_str().unwrap();
    assert_eq!(code(&betastab(&["train", "--config", bad.to_str().unwrap(), "--out", out])), 1);
    assert_eq!(code(&betastab(&["train", "--config", "/nonexistent.json", "--out", out])), 1);
    assert_eq!(
        code(&betastab(&["sweep", "--config", config.to_str().unwrap(), "--grid", "0.1,-1", "--seeds", "1", "--out", out])),
        1
    );
    assert_eq!(code(&betastab(&["gradcheck", "--layer", "conv"])), 1);
    assert_eq!(code(&betastab(&["gradcheck", "--tol", "0"])), 1);
    assert_eq!(code(&betastab(&["frobnicate"])), 1);
    std::fs::write(dir.path().join("ckpt.json"), "{\"version\": 99}").unwrap();
    assert_eq!(code(&betastab(&["norms", "--checkpoint", dir.path().join("ckpt.json").to_str().unwrap()])), 1);
}

#[test]
fn gradcheck_passes_for_every_target() {
    for layer in ["affine", "lstm", "network"] {
        let res = betastab(&["gradcheck", "--layer", layer, "--seeds", "3"]);
        assert_eq!(code(&res), 0, "{layer}: {}", String::from_utf8_lossy(&res.stdout));
        assert!(String::from_utf8_lossy(&res.stdout).contains("PASS"));
    }
    let res = betastab(&["gradcheck", "--layer", "lstm", "--mode", "gate-shared", "--seeds", "2"]);
    assert_eq!(code(&res), 0);
}

#[test]
fn divergence_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let text = std::fs::read_to_string(&config)
        .unwrap()
        .replace("\"initial_lr\": 0.5", "\"initial_lr\": 1e300")
        .replace("\"stabilizer\"", "\"activation\": \"linear\", \"stabilizer\"");
    std::fs::write(&config, text).unwrap();
    let out = dir.path().join("run");
    let res = betastab(&["train", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 2, "{}", String::from_utf8_lossy(&res.stdout));
}
