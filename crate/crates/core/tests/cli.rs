use std::path::Path;
use std::process::{Command, Output};

fn denise(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_denise"))
        .args(args)
        .current_dir(cwd)
        .env_remove("DENISE_RUN_ROOT")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const SMALL: &[&str] = &["--images", "24", "--epochs", "2", "--learning-rate", "0.05", "--seed", "3"];

fn pipeline(cwd: &Path, run_dir: &str, extra: &[&str]) -> Output {
    let mut args = vec!["pipeline", "--run-dir", run_dir];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    denise(&args, cwd)
}

#[test]
fn enhance_with_missing_prediction_names_the_sample() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&denise(&["synth", "--out", "data", "--images", "6", "--seed", "1"], dir));
    ok(&denise(&["predict", "--manifest", "data/manifest.txt", "--out", "preds"], dir));
    std::fs::remove_file(dir.join("preds/s00003.dpf")).unwrap();
    let out = denise(
        &["enhance", "--manifest", "data/manifest.txt", "--predictions", "preds", "--out", "enh", "--variant", "edge"],
        dir,
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("s00003"));
}

#[test]
fn bad_config_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = pipeline(tmp.path(), "run", &["--variant", "sideways"]);
    assert_eq!(out.status.code(), Some(2));
    let out = denise(&["synth", "--out", "d", "--ratios", "0.5,0.5,0.5"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_manifest_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let out = denise(&["train", "--manifest", "nowhere/manifest.txt", "--out", "m.dnw"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn pipeline_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&pipeline(dir, "a", &["--variant", "edge", "--mode", "merge3"]));
    ok(&pipeline(dir, "b", &["--variant", "edge", "--mode", "merge3"]));
    for f in ["comparison.txt", "baseline_metrics.txt", "enhanced_metrics.txt", "enhanced_metrics.csv"] {
        let (a, b) = (std::fs::read(dir.join("a").join(f)).unwrap(), std::fs::read(dir.join("b").join(f)).unwrap());
        assert_eq!(a, b, "{f} differs");
    }
    let log = std::fs::read_to_string(dir.join("a/pipeline.log")).unwrap();
    assert!(log.contains("seed=3"), "{log}");
}

#[test]
fn baseline_only_leaves_no_enhanced_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&pipeline(dir, "run", &["--baseline-only"]));
    let run = dir.join("run");
    assert!(run.join("baseline_metrics.txt").is_file());
    for gone in ["stage1", "enhanced", "enhanced_predictions", "enhanced_metrics.txt", "comparison.txt"] {
        assert!(!run.join(gone).exists(), "{gone} exists");
    }
}

#[test]
fn run_root_comes_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["pipeline", "--run-id", "envrun", "--baseline-only"];
    args.extend_from_slice(SMALL);
    let out = Command::new(env!("CARGO_BIN_EXE_denise"))
        .args(&args)
        .current_dir(tmp.path())
        .env("DENISE_RUN_ROOT", tmp.path().join("root"))
        .output()
        .unwrap();
    ok(&out);
    assert!(tmp.path().join("root/envrun/baseline_metrics.txt").is_file());
}

#[test]
fn stepwise_commands_compose() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&denise(&["synth", "--out", "data", "--images", "20", "--seed", "2"], dir));
    ok(&denise(&["train", "--manifest", "data/manifest.txt", "--out", "m.dnw", "--epochs", "2", "--learning-rate", "0.05"], dir));
    ok(&denise(&["predict", "--manifest", "data/manifest.txt", "--model", "m.dnw", "--out", "p"], dir));
    ok(&denise(&["enhance", "--manifest", "data/manifest.txt", "--predictions", "p", "--out", "enh"], dir));
    ok(&denise(&["eval", "--manifest", "data/manifest.txt", "--predictions", "p", "--out", "base.txt"], dir));
    ok(&denise(&["eval", "--manifest", "enh/manifest.txt", "--predictions", "p", "--out", "enh.txt", "--method-label", "Seg-DeNISE (3-channels)"], dir));
    let out = denise(&["compare", "--baseline", "base.txt", "--enhanced", "enh.txt"], dir);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("Seg-DeNISE"));
}
