use std::path::Path;
use std::process::{Command, Output};

use qsearch_core::{fidelity, ParameterizedCircuit, StateVector, Target, UnitaryMatrix};
use sha2::{Digest, Sha256};

fn qsearch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsearch")).args(args).output().expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&read(dir, "manifest.json")).unwrap()
}

#[test]
fn bounds_table() {
    let out = qsearch(&["bounds", "--task", "u", "--kind", "cnot", "--n", "2..5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lbs: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(lbs, ["3", "14", "61", "252"]);

    let out = qsearch(&["bounds", "--task", "sp", "--kind", "cnot", "--n", "8", "--format", "json"]);
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows[0]["n_lb"], 124);

    let out = qsearch(&["bounds", "--task", "sp", "--kind", "b", "--n", "2..4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lbs: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(lbs, ["1", "2", "4"]);

    assert_eq!(qsearch(&["bounds", "--n", "1"]).status.code(), Some(1));
}

#[test]
fn synthesize_exports_a_circuit_that_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = qsearch(&[
        "synthesize", "--task", "u", "--kind", "cnot", "--n", "2", "--sizes", "3", "--samples", "10", "--seed",
        "11", "-o", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let circuit = ParameterizedCircuit::from_json(&read(&out_dir, "circuit.json")).unwrap();
    assert_eq!(circuit.config().size(), 3);
    let target_json: serde_json::Value = serde_json::from_str(&read(&out_dir, "target.json")).unwrap();
    let target = Target::Unitary(UnitaryMatrix::from_json(&target_json).unwrap());
    let summary: serde_json::Value = serde_json::from_str(&read(&out_dir, "summary.json")).unwrap();
    let recorded = summary["best_fidelity"].as_f64().unwrap();
    assert!((fidelity(&circuit, &target).unwrap() - recorded).abs() < 1e-10);
    assert!(1.0 - recorded < 1e-8);
    assert_eq!(read(&out_dir, "trials.jsonl").lines().count(), 10);

    // every digest in the manifest matches the file on disk
    let m = manifest(&out_dir);
    assert_eq!(m["command"], "synthesize");
    for f in m["files"].as_array().unwrap() {
        let bytes = std::fs::read(out_dir.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(format!("{:x}", Sha256::digest(&bytes)), f["sha256"].as_str().unwrap());
    }
}

#[test]
fn synthesize_reports_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let out = qsearch(&[
        "synthesize", "--task", "u", "--n", "2", "--sizes", "2", "--samples", "3", "--seed", "1", "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("circuit.json").exists());
}

#[test]
fn empty_circuit_prepares_the_zero_state() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("zero.json");
    std::fs::write(&target, StateVector::basis(2, 0).unwrap().to_json().to_string()).unwrap();
    let arg = format!("file:{}", target.display());
    let out = qsearch(&[
        "synthesize", "--task", "sp", "--n", "2", "--sizes", "0", "--samples", "1", "--seed", "4", "--target",
        &arg, "-o", dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let circuit = ParameterizedCircuit::from_json(&read(&dir.path().join("run"), "circuit.json")).unwrap();
    assert_eq!(circuit.config().size(), 0);
}

#[test]
fn bad_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "[[1,0],[1,0],[0,0]]").unwrap();
    let arg = format!("file:{}", bad.display());
    let out = qsearch(&[
        "synthesize", "--task", "sp", "--n", "2", "--sizes", "1", "--seed", "1", "--target", &arg, "-o",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    // no seed
    let out = qsearch(&["sweep", "--task", "sp", "--n", "3", "-o", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

fn payloads(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|name| name != "manifest.json" && name != "timings.csv")
        .map(|name| {
            let bytes = std::fs::read(dir.join(&name)).unwrap();
            (name, bytes)
        })
        .collect();
    files.sort();
    files
}

#[test]
fn sweeps_rerun_byte_identically_from_a_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"task": "state_prep", "kind": "cnot", "n": 3, "sizes": "2..4", "n_samples": 8, "seed": 2024,
            "settings": {"restarts": 2}}"#,
    )
    .unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let spec_arg = spec.to_str().unwrap();
    let out = qsearch(&["sweep", "--spec", spec_arg, "-o", a.to_str().unwrap(), "--workers", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = qsearch(&["sweep", "--spec", spec_arg, "-o", b.to_str().unwrap(), "--workers", "3"]);
    assert!(out.status.success());

    let pa = payloads(&a);
    assert_eq!(pa, payloads(&b));
    let names: Vec<&str> = pa.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        ["sweep.csv", "sweep.json", "target.json", "trials_N2.jsonl", "trials_N3.jsonl", "trials_N4.jsonl"]
    );
    let csv = read(&a, "sweep.csv");
    assert!(csv.starts_with("N,n_samples,n_perfect,p_num,err_lo,err_hi\n2,8,0,0,"));
    let m = manifest(&a);
    assert_eq!(m["spec"]["seed"], 2024);
    assert_eq!(m["spec"]["settings"]["restarts"], 2);
    assert_eq!(m["summary"]["n_min_perfect"], 3);
}

#[test]
fn histogram_of_one_trial() {
    let dir = tempfile::tempdir().unwrap();
    let out = qsearch(&[
        "histogram", "--task", "u", "--n", "2", "--sizes", "2", "--samples", "1", "--seed", "5", "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = read(dir.path(), "histogram.csv");
    let counts: Vec<u64> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(counts.len(), 100);
    assert_eq!(counts.iter().sum::<u64>(), 1);
}

#[test]
fn toffoli_fixture_spec_resolves() {
    let dir = tempfile::tempdir().unwrap();
    // a single cheap trial; whether it is perfect is an acceptance question
    let out = qsearch(&[
        "synthesize", "--target", "toffoli", "--config", "toffoli4-cnot15", "--samples", "1", "--max-iters", "50",
        "--seed", "1", "-o", dir.path().to_str().unwrap(),
    ]);
    assert!(matches!(out.status.code(), Some(0 | 2)), "{}", String::from_utf8_lossy(&out.stderr));
    let line: serde_json::Value =
        serde_json::from_str(read(dir.path(), "trials.jsonl").lines().next().unwrap()).unwrap();
    assert_eq!(line["size"], 15);
    assert_eq!(line["placements"].as_array().unwrap().len(), 15);
}
