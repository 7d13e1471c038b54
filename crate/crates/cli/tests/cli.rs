//! End-to-end checks of the `mpsim` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mpsim"));
    c.env_remove("MPSIM_WORKERS");
    c
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn assert_schema(v: &Value) {
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/run_output.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "schema violations: {errors:?}");
}

#[test]
fn run_ghz_counts_and_schema() {
    let ghz = data("ghz_4.qasm");
    let out = run(&["run", "--qasm", ghz.to_str().unwrap(), "--shots", "1000", "--seed", "9"]);
    let v = stdout_json(&out);
    assert_schema(&v);
    let counts = v["counts"].as_object().unwrap();
    assert!(counts.keys().all(|k| k == "0000" || k == "1111"));
    assert_eq!(counts.values().map(|c| c.as_u64().unwrap()).sum::<u64>(), 1000);
    assert_eq!(v["peak_bond"], 2);
}

#[test]
fn zero_shots_has_no_counts() {
    let out = run(&["run", "--qasm", data("qft_4.qasm").to_str().unwrap()]);
    let v = stdout_json(&out);
    assert_schema(&v);
    assert!(v.get("counts").is_none());
    assert!(!v["layers"].as_array().unwrap().is_empty());
}

#[test]
fn same_seed_gives_identical_counts() {
    let f = data("random_6.qasm");
    let args = ["run", "--qasm", f.to_str().unwrap(), "--shots", "500", "--seed", "3"];
    let a = stdout_json(&run(&args));
    let b = stdout_json(&run(&args));
    assert_eq!(serde_json::to_string(&a["counts"]).unwrap(), serde_json::to_string(&b["counts"]).unwrap());
}

#[test]
fn every_backend_validates() {
    let f = data("random_6.qasm");
    for backend in ["mps-serial", "mps-parallel", "statevector"] {
        let v = stdout_json(&run(&[
            "run", "--qasm", f.to_str().unwrap(), "--backend", backend, "--shots", "50", "--workers", "2",
        ]));
        assert_schema(&v);
        assert_eq!(v["config"]["backend"], backend);
    }
    let v = stdout_json(&run(&["run", "--qasm", f.to_str().unwrap(), "--nonlocal", "bondprop"]));
    assert_schema(&v);
}

#[test]
fn config_errors_exit_1() {
    let f = data("ghz_4.qasm");
    let f = f.to_str().unwrap();
    for args in [
        vec!["run", "--qasm", f, "--backend", "mps-parallel", "--nonlocal", "bondprop"],
        vec!["run", "--qasm", f, "--cutoff", "1.5"],
        vec!["run", "--qasm", f, "--max-bond", "0"],
        vec!["run", "--qasm", f, "--backend", "mps-parallel", "--workers", "0"],
        vec!["run", "--qasm", "/nonexistent/file.qasm"],
        vec!["run", "--qasm", f, "--backend", "nope"],
        vec!["run"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn parse_errors_exit_2_with_position() {
    let out = run(&["run", "--qasm", data("malformed/missing_semicolon.qasm").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing_semicolon.qasm:5:1:"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn numeric_errors_exit_3() {
    // parses fine, but the rotation angle overflows to a non-finite matrix
    let out = run(&["run", "--qasm", data("numeric/overflowing_angle.qasm").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-finite"));
}

#[test]
fn workers_env_and_flag_precedence() {
    let f = data("ghz_4.qasm");
    let f = f.to_str().unwrap();
    let base = ["run", "--qasm", f, "--backend", "mps-parallel"];
    let v = stdout_json(&bin().args(base).env("MPSIM_WORKERS", "3").output().unwrap());
    assert_eq!(v["config"]["workers"], 3);
    let mut with_flag = base.to_vec();
    with_flag.extend(["--workers", "2"]);
    let v = stdout_json(&bin().args(&with_flag).env("MPSIM_WORKERS", "3").output().unwrap());
    assert_eq!(v["config"]["workers"], 2);
    with_flag.push("--deterministic");
    let v = stdout_json(&bin().args(&with_flag).output().unwrap());
    assert_eq!(v["config"]["workers"], 1);
}

#[test]
fn generated_ghz_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ghz.qasm");
    let out = run(&["gen-ghz", "-n", "64", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("wrote "));
    let c = mpsim::circuit::parse_qasm(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(c.ops().len(), 64);
    let v = stdout_json(&run(&["run", "--qasm", path.to_str().unwrap()]));
    assert_eq!(v["peak_bond"], 2);
    assert_eq!(run(&["gen-ghz", "-n", "1"]).status.code(), Some(1));
}

#[test]
fn brickwork_generation_is_deterministic_and_runs() {
    let a = run(&["gen-brickwork", "-n", "6", "--depth", "4", "--seed", "11"]);
    let b = run(&["gen-brickwork", "-n", "6", "--depth", "4", "--seed", "11"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let dir = tempfile::tempdir().unwrap();
    let qasm = dir.path().join("bw.qasm");
    let side = dir.path().join("bw.json");
    let out = run(&[
        "gen-brickwork", "-n", "6", "--depth", "4", "--seed", "11", "--haar",
        "--sidecar", side.to_str().unwrap(), "--out", qasm.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v = stdout_json(&run(&[
        "run", "--qasm", qasm.to_str().unwrap(), "--sidecar", side.to_str().unwrap(), "--shots", "10",
    ]));
    assert_schema(&v);
    // without the sidecar the unitary2 references are unresolved
    assert_eq!(run(&["run", "--qasm", qasm.to_str().unwrap()]).status.code(), Some(2));
    // --haar without a sidecar path is a usage error
    assert_eq!(run(&["gen-brickwork", "-n", "4", "--depth", "1", "--haar"]).status.code(), Some(1));
}

#[test]
fn bench_emits_array_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = run(&[
        "bench", "--family", "brickwork", "--qubits", "8,16,32", "--depth", "2", "--max-bond", "32",
        "--csv", csv.to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    assert_schema(&v);
    assert_eq!(v.as_array().unwrap().len(), 3);
    let table = std::fs::read_to_string(csv).unwrap();
    assert_eq!(table.lines().count(), 4);

    let v = stdout_json(&run(&[
        "bench", "--family", "ghz", "--qubits", "4,8", "--backend", "mps-serial,statevector,mps-parallel",
        "--workers", "1,2",
    ]));
    assert_schema(&v);
    // 2 sizes x (serial + statevector + 2 worker counts)
    assert_eq!(v.as_array().unwrap().len(), 8);
}
