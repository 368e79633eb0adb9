use std::path::{Path, PathBuf};
use std::process::Command;

const GAUSSIAN: &str = r#"{"type":"polynomial","coeffs":[0,0,0.5]}"#;
const TWO_CUT: &str = r#""potential":{"type":"polynomial","coeffs":[0,0,-2,0,0.25]},"support":[[-2.6,-1.3],[1.3,2.6]]"#;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("loggas-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(mode: &str, config: Option<&str>, out: &Path, extra: &[&str]) -> i32 {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_loggas"));
    cmd.arg(mode).arg("--out").arg(out);
    if let Some(text) = config {
        let path = out.with_extension("json");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.args(extra);
    let output = cmd.output().unwrap();
    output.status.code().unwrap()
}

fn read_json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn empty_or_malformed_config_exits_one() {
    let dir = scratch("empty");
    assert_eq!(run("equilibrium", Some(""), &dir.join("a"), &[]), 1);
    assert_eq!(run("equilibrium", Some("{\"potentail\": 1}"), &dir.join("b"), &[]), 1);
    assert_eq!(run("equilibrium", Some("{}"), &dir.join("c"), &[]), 1);
    assert_eq!(run("predict", None, &dir.join("d"), &["--n", "5..2"]), 1);
    assert_eq!(run("predict", Some(r#"{"mode":"theta"}"#), &dir.join("e"), &[]), 1);
}

#[test]
fn model_assumption_violation_exits_three() {
    let dir = scratch("assume");
    let cfg = r#"{"potential":{"type":"polynomial","coeffs":[0,0,-2,0,0.25]},"support":[[-3,3]]}"#;
    assert_eq!(run("predict", Some(cfg), &dir.join("a"), &[]), 3);
}

#[test]
fn gaussian_equilibrium_support() {
    let dir = scratch("eq");
    let out = dir.join("o");
    assert_eq!(run("equilibrium", Some(&format!(r#"{{"potential":{GAUSSIAN}}}"#)), &out, &[]), 0);
    let v = read_json(out.join("equilibrium.json"));
    let s = &v["support"][0];
    assert!((s[0].as_f64().unwrap() + 2.0).abs() < 1e-8);
    assert!((s[1].as_f64().unwrap() - 2.0).abs() < 1e-8);
    assert!(out.join("density.csv").exists());
}

#[test]
fn lemma_certificate() {
    let dir = scratch("lemmas");
    let out = dir.join("o");
    assert_eq!(run("lemmas", None, &out, &[]), 0);
    let v = read_json(out.join("lemmas.json"));
    assert!(v["delta1"].as_f64().unwrap() > 0.0);
    assert!(v["decay_slope"].as_f64().unwrap() < 0.0);
    assert_eq!(v["knot_jumps"].as_array().unwrap().len(), 5);
}

#[test]
fn non_sampling_commands_are_byte_reproducible() {
    let dir = scratch("det");
    let cfg = format!("{{{TWO_CUT}, \"beta\": 2}}");
    for (mode, files) in [
        ("equilibrium", vec!["equilibrium.json", "density.csv"]),
        ("predict", vec!["predict.json", "predict_sweep.csv"]),
        ("theta", vec!["theta.json", "theta_sweep.csv"]),
        ("partition", vec!["partition.json", "partition_sweep.csv"]),
    ] {
        let (a, b) = (dir.join(format!("{mode}-a")), dir.join(format!("{mode}-b")));
        assert_eq!(run(mode, Some(&cfg), &a, &["--n", "100..103"]), 0, "{mode}");
        assert_eq!(run(mode, Some(&cfg), &b, &["--n", "100..103"]), 0, "{mode}");
        for f in files {
            let x = std::fs::read(a.join(f)).unwrap();
            assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{mode}/{f}");
        }
    }
    let sweep = std::fs::read_to_string(dir.join("predict-a").join("predict_sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 5);
    let p = read_json(dir.join("partition-a").join("partition.json"));
    let labels: Vec<&str> = p["terms"].as_array().unwrap().iter().map(|t| t["term"].as_str().unwrap()).collect();
    assert!(labels.contains(&"resolvent.log_det") && labels.contains(&"theta.log_theta0"));
}

#[test]
fn sampling_is_reproducible_under_seed() {
    let dir = scratch("sample");
    let cfg = r#"{"potential":{"type":"polynomial","coeffs":[0,0,0.5,0,0.1]},"n":8,"beta":1,
        "sampler":{"draws":800,"chains":2,"burn_in":200}}"#;
    let (a, b, c) = (dir.join("a"), dir.join("b"), dir.join("c"));
    assert_eq!(run("sample", Some(cfg), &a, &["--seed", "5"]), 0);
    assert_eq!(run("sample", Some(cfg), &b, &["--seed", "5"]), 0);
    assert_eq!(run("sample", Some(cfg), &c, &["--seed", "6"]), 0);
    for f in ["samples.csv", "trace.csv", "stats.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_ne!(std::fs::read(a.join("samples.csv")).unwrap(), std::fs::read(c.join("samples.csv")).unwrap());
    let rows = std::fs::read_to_string(a.join("samples.csv")).unwrap();
    assert_eq!(rows.lines().count(), 800);
    assert!(rows.lines().all(|l| l.split(',').count() == 8));
}

#[test]
fn verify_passes_and_flags_wrong_predictions() {
    let dir = scratch("verify");
    let base = format!(r#""potential":{GAUSSIAN},"n":50,"beta":2,"sampler":{{"draws":4000}}"#);
    let good = dir.join("good");
    assert_eq!(run("verify", Some(&format!("{{{base}}}")), &good, &["--seed", "3"]), 0);
    assert_eq!(read_json(good.join("verify.json"))["pass"], true);
    let bad = dir.join("bad");
    let cfg = format!(r#"{{{base},"verify":{{"variance_scale":2.0}}}}"#);
    assert_eq!(run("verify", Some(&cfg), &bad, &["--seed", "3"]), 0);
    assert_eq!(read_json(bad.join("verify.json"))["pass"], false);
    let few = dir.join("few");
    let cfg = format!(r#"{{"potential":{GAUSSIAN},"n":50,"sampler":{{"draws":40}}}}"#);
    assert_eq!(run("verify", Some(&cfg), &few, &[]), 2);
}
