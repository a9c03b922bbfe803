use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn qsuff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsuff"))
        .args(args)
        .env_remove("QSUFF_SEED")
        .output()
        .expect("binary runs")
}

fn run_json(args: &[&str]) -> (i32, Value) {
    let out = qsuff(args);
    let code = out.status.code().expect("exit code");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let report = serde_json::from_str(&stdout)
        .unwrap_or_else(|e| panic!("{e}: {stdout}\n{}", String::from_utf8_lossy(&out.stderr)));
    (code, report)
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qsuff-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn sorted_blocks(v: &Value) -> Vec<(u64, u64)> {
    let mut b: Vec<(u64, u64)> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (p[0].as_u64().unwrap(), p[1].as_u64().unwrap()))
        .collect();
    b.sort();
    b
}

#[test]
fn bipartite_product_is_sufficient() {
    let (code, r) = run_json(&["check-subalgebra", path_str(&data("bipartite_product.json"))]);
    assert_eq!(code, 0);
    assert_eq!(r["verdict"]["sufficient"], true);
    assert_eq!(r["subalgebra_dimension"], 4);
    assert_eq!(r["format_version"], "1");
}

#[test]
fn generic_qubits_with_diagonal_subalgebra_are_insufficient() {
    let (code, r) = run_json(&["check-subalgebra", path_str(&data("generic_qubits.json"))]);
    assert_eq!(code, 1);
    assert_eq!(r["verdict"]["sufficient"], false);
    assert_eq!(r["verdict"]["status"], "insufficient");
}

#[test]
fn embedding_channel_is_sufficient_and_structured() {
    let (code, r) = run_json(&["check-channel", path_str(&data("bipartite_channel.json"))]);
    assert_eq!(code, 0);
    assert!(r["structure"]["choi_distance"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn two_block_file_decomposes() {
    let (code, r) = run_json(&["decompose", path_str(&data("two_blocks.json"))]);
    assert_eq!(code, 0);
    let d = &r["decomposition"];
    assert_eq!(sorted_blocks(&d["blocks"]), vec![(1, 3), (2, 2)]);
    assert!(d["reconstruction_residual"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn single_state_is_one_block() {
    let (_, r) = run_json(&["decompose", path_str(&data("single_state.json"))]);
    assert_eq!(sorted_blocks(&r["decomposition"]["blocks"]), vec![(1, 3)]);
}

#[test]
fn classical_file_has_one_dimensional_blocks() {
    let (_, r) = run_json(&["decompose", path_str(&data("classical.json"))]);
    assert_eq!(sorted_blocks(&r["decomposition"]["blocks"]), vec![(1, 1); 4]);
}

#[test]
fn ssa_examples() {
    let (code, r) = run_json(&["ssa", path_str(&data("ssa_product.json"))]);
    assert_eq!(code, 0);
    assert!(r["ssa"]["gap_entropies"].as_f64().unwrap().abs() <= 1e-9);
    assert_eq!(r["ssa"]["structure"]["blocks"].as_array().unwrap().len(), 1);

    let (code, r) = run_json(&["ssa", path_str(&data("ssa_equality.json"))]);
    assert_eq!(code, 0);
    assert_eq!(sorted_blocks(&r["ssa"]["structure"]["blocks"]), vec![(2, 2)]);

    let (code, r) = run_json(&["ssa", path_str(&data("ssa_random.json"))]);
    assert_eq!(code, 1);
    assert!(r["ssa"]["gap_entropies"].as_f64().unwrap() > 1e-3);
    assert!(r["ssa"].get("structure").is_none());
}

#[test]
fn ssa_needs_three_factors() {
    let out = qsuff(&["ssa", path_str(&data("bipartite_product.json"))]);
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tensor_dims"));
}

#[test]
fn qubit_tilt_fit() {
    let file = data("expfam_qubit.json");
    let (code, r) = run_json(&["expfam", "fit", path_str(&file)]);
    assert_eq!(code, 0);
    let xi = r["expfam"]["fits"][0]["xi"][0].as_f64().unwrap();
    assert!((xi - 0.4f64.atanh()).abs() <= 1e-9, "{xi}");
    assert!((xi - 0.423649).abs() < 1e-6);

    let (_, r) = run_json(&["expfam", "fit", path_str(&file), "--target", "0"]);
    assert_eq!(r["expfam"]["fits"][0]["xi"][0].as_f64().unwrap(), 0.0);

    let out = qsuff(&["expfam", "fit", path_str(&file), "--target", "1.5"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("last iterate"));
}

#[test]
fn expfam_sufficiency_check() {
    let (code, r) = run_json(&["expfam", "check-sufficiency", path_str(&data("expfam_product.json"))]);
    assert_eq!(code, 0);
    assert_eq!(r["expfam"]["route"], "subalgebra");
}

#[test]
fn reports_are_deterministic() {
    for (cmd, file) in [
        ("decompose", "two_blocks.json"),
        ("check-subalgebra", "generic_qubits.json"),
        ("ssa", "ssa_equality.json"),
    ] {
        let file = data(file);
        let args = [cmd, path_str(&file), "--no-timings", "--seed", "7"];
        let a = qsuff(&args);
        let b = qsuff(&args);
        assert_eq!(a.stdout, b.stdout, "{cmd} {}", file.display());
        assert!(!a.stdout.is_empty());
    }
}

#[test]
fn timings_are_the_only_difference() {
    let file = data("two_blocks.json");
    let args = ["decompose", path_str(&file)];
    let (_, mut a) = run_json(&args);
    let (_, mut b) = run_json(&args);
    assert!(a.get("timings").is_some());
    a.as_object_mut().unwrap().remove("timings");
    b.as_object_mut().unwrap().remove("timings");
    assert_eq!(a, b);
}

#[test]
fn seed_comes_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_qsuff"))
        .args(["decompose", path_str(&data("single_state.json"))])
        .env("QSUFF_SEED", "99")
        .output()
        .unwrap();
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["settings"]["seed"], 99);
}

#[test]
fn flags_are_recorded() {
    let (_, r) = run_json(&[
        "check-subalgebra",
        path_str(&data("bipartite_product.json")),
        "--tol",
        "1e-8",
        "--t-grid",
        "-0.5,0.5,1.3",
    ]);
    assert_eq!(r["settings"]["tol"]["sufficiency"].as_f64(), Some(1e-8));
    assert_eq!(r["settings"]["t_grid"].as_array().unwrap().len(), 3);
    assert_eq!(r["verdict"]["tolerance"].as_f64(), Some(1e-8));
}

#[test]
fn verify_round_trip() {
    for (cmd, file) in [("decompose", "two_blocks.json"), ("ssa", "ssa_equality.json")] {
        let report = scratch(&format!("{file}.report.json"));
        let out = qsuff(&[cmd, path_str(&data(file)), "-o", path_str(&report)]);
        assert_eq!(out.status.code(), Some(0));
        let (code, v) = run_json(&["verify", path_str(&report)]);
        assert_eq!(code, 0, "{v}");
    }
}

#[test]
fn verify_catches_tampering() {
    let report = scratch("tampered.json");
    qsuff(&["decompose", path_str(&data("two_blocks.json")), "-o", path_str(&report)]);
    let mut r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let w = &mut r["decomposition"]["states"][1]["weights"][0];
    *w = Value::from(w.as_f64().unwrap() + 1e-4);
    std::fs::write(&report, serde_json::to_string(&r).unwrap()).unwrap();
    let (code, _) = run_json(&["verify", path_str(&report)]);
    assert_eq!(code, 1);
}

#[test]
fn empty_states_exit_64() {
    let file = scratch("empty.json");
    std::fs::write(
        &file,
        r#"{"format_version": "1", "dim": 2, "states": [], "subalgebra_generators": []}"#,
    )
    .unwrap();
    let out = qsuff(&["check-subalgebra", path_str(&file)]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn parse_errors_point_at_the_field() {
    let file = scratch("typo.json");
    std::fs::write(
        &file,
        "{\"format_version\": \"1\",\n \"dim\": 2,\n \"states\": [{\"label\": \"a\", \"matrix\": [[0.5, 0], [0, 0], [0, 0], [\"half\", 0]]}]}",
    )
    .unwrap();
    let out = qsuff(&["decompose", path_str(&file)]);
    assert_eq!(out.status.code(), Some(64));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("states[0].matrix[3][0]"), "{err}");
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(qsuff(&["no-such-command"]).status.code(), Some(64));
    assert_eq!(qsuff(&["decompose"]).status.code(), Some(64));
    assert_eq!(qsuff(&["--help"]).status.code(), Some(0));
}

#[test]
fn human_output_summarizes() {
    let out = qsuff(&["decompose", path_str(&data("two_blocks.json")), "--human"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("blocks (d_n, m_n)"), "{text}");
}
