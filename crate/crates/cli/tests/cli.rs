use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cli(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ramsey-adapt"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("RAMSEY_ADAPT_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) -> Value {
    let o = cli(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1, "{stdout}");
    serde_json::from_str(&stdout).unwrap()
}

fn fails(args: &[&str], out: &Path) -> String {
    let o = cli(args, out);
    assert!(!o.status.success(), "{args:?} succeeded");
    String::from_utf8(o.stderr).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_SCALING: [&str; 8] = ["scaling", "--n-range", "2..4", "--detunings", "4", "--reps", "3", "--seed"];

#[test]
fn run_with_one_repetition_per_time_has_one_step_per_time() {
    let dir = tempfile::tempdir().unwrap();
    let summary = ok(&["run", "--n", "3", "--g", "1", "--f", "0", "--seed", "7"], dir.path());
    assert_eq!(summary["steps"], 3);

    let trace = read_json(&dir.path().join("trace.json"));
    let steps = trace["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 3);
    let units: Vec<u64> = steps.iter().map(|s| s["t_units"].as_u64().unwrap()).collect();
    assert_eq!(units, [4, 2, 1]);

    let manifest = read_json(&dir.path().join("trace.manifest.json"));
    assert_eq!(manifest["command"], "run");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["outputs"][0], "trace.json");
    assert_eq!(manifest["config"]["g"], 1);
}

#[test]
fn scaling_is_byte_identical_across_reruns() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut args = SMALL_SCALING.to_vec();
    args.push("11");
    ok(&args, a.path());
    args.extend(["--workers", "1"]);
    ok(&args, b.path());
    let read = |d: &Path| std::fs::read(d.join("scaling.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    assert!(a.path().join("scaling.manifest.json").exists());
}

#[test]
fn fidelity_above_one_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let err = fails(&["run", "--f0", "1.2"], dir.path());
    assert!(err.contains("`f0`") && err.contains("[0, 1]"), "{err}");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn optimized_adaptive_needs_increments() {
    let dir = tempfile::tempdir().unwrap();
    let err = fails(&["run", "--protocol", "optimized-adaptive"], dir.path());
    assert!(err.contains("pso-train"), "{err}");
    ok(&["run", "--protocol", "optimized-adaptive", "--increments", "zero"], dir.path());
}

#[test]
fn trained_tables_feed_scaling_without_retraining() {
    let dir = tempfile::tempdir().unwrap();
    let lib_path = dir.path().join("increments.json");
    let trained = ok(
        &[
            "pso-train", "--n-range", "2..3", "--g", "2", "--f", "1", "--particles", "3",
            "--iterations", "2", "--train-detunings", "2", "--train-reps", "2",
            "--validation-detunings", "2", "--validation-reps", "2", "--seed", "3",
        ],
        dir.path(),
    );
    assert_eq!(trained["tables"].as_array().unwrap().len(), 2);
    let lib = read_json(&lib_path);
    assert_eq!(lib["tables"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("increments.manifest.json").exists());

    let lib_arg = lib_path.to_str().unwrap();
    let summary = ok(
        &[
            "scaling", "--n-range", "2..3", "--g", "2", "--f", "1", "--detunings", "2", "--reps", "2",
            "--increments", lib_arg,
        ],
        dir.path(),
    );
    let kinds: Vec<&str> = summary["protocols"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["protocol"].as_str().unwrap())
        .collect();
    assert!(kinds.contains(&"optimized-adaptive"));
    assert_eq!(read_json(&lib_path), lib, "scaling must not touch its inputs");

    let err = fails(
        &["scaling", "--n-range", "2..4", "--g", "2", "--f", "1", "--increments", lib_arg],
        dir.path(),
    );
    assert!(err.contains("N=4"), "{err}");
}

#[test]
fn empty_config_gives_reference_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.json");
    std::fs::write(&cfg, "{}").unwrap();
    ok(&["run", "--config", cfg.to_str().unwrap()], dir.path());
    let config = &read_json(&dir.path().join("trace.manifest.json"))["config"];
    assert_eq!(config["f0"], 0.88);
    assert_eq!(config["f1"], 0.98);
    assert_eq!(config["t2star_us"], 96.0);
    assert_eq!(config["tau_min_ns"], 20.0);
}

#[test]
fn flags_override_config_and_unknown_keys_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"n": 4, "g": 3, "f": 0, "seed": 5}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let s = ok(&["run", "--config", c, "--g", "1"], dir.path());
    assert_eq!(s["steps"], 4);

    std::fs::write(&cfg, r#"{"n": 4, "nn": 3}"#).unwrap();
    let err = fails(&["run", "--config", c], dir.path());
    assert!(err.contains("nn"), "{err}");
}

#[test]
fn n_range_spans_twelve_schedules() {
    let dir = tempfile::tempdir().unwrap();
    let s = ok(
        &[
            "scaling", "--protocol", "non-adaptive", "--n-range", "2..13", "--detunings", "1",
            "--reps", "2",
        ],
        dir.path(),
    );
    assert_eq!(s["rows"], 12);
    let csv = std::fs::read_to_string(dir.path().join("scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn env_seed_is_the_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ramsey-adapt"))
        .args(["run", "--n", "2", "--out"])
        .arg(dir.path())
        .env("RAMSEY_ADAPT_SEED", "42")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(read_json(&dir.path().join("trace.manifest.json"))["seed"], 42);
}

#[test]
fn sweep_and_rt_compare_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let s = ok(
        &["sweep", "--protocol", "limited-adaptive,non-adaptive", "--n", "3", "--detunings", "3", "--reps", "3"],
        dir.path(),
    );
    assert_eq!(s["rows"], 6);
    let sweep = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().next().unwrap(), "kind,N,G,F,detuning_hz,reps,V_H,V_H_ci_lo,V_H_ci_hi,seed");
    assert_eq!(sweep.lines().count(), 7);

    ok(
        &[
            "rt-compare", "--protocol", "non-adaptive", "--n-range", "2..3", "--f", "2", "--detunings",
            "2", "--reps", "2", "--repetitions", "100,1000",
        ],
        dir.path(),
    );
    let rt = std::fs::read_to_string(dir.path().join("rt_compare.csv")).unwrap();
    assert!(rt.starts_with("repetitions,contrast,F0,kind,"));
    assert_eq!(rt.lines().count(), 3);
    assert!(dir.path().join("rt_compare.manifest.json").exists());
}
