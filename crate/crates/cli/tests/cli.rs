use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn blochlu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blochlu"))
        .args(args)
        .env_remove("BLOCHLU_SEED")
        .output()
        .expect("spawn blochlu")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json_out(o: &Output) -> Value {
    assert_eq!(code(o), 0, "stderr: {}", stderr(o));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn entry_values(report: &Value) -> Vec<(String, f64)> {
    report["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["label"].as_str().unwrap().to_string(), e["value"].as_f64().unwrap()))
        .collect()
}

#[test]
fn extract_bell_correlation_matrix() {
    let v = json_out(&blochlu(&["extract", p(&data("bell.json"))]));
    let t12: Vec<Vec<f64>> = serde_json::from_value(v["tensors"]["T12"].clone()).unwrap();
    assert_eq!(t12, vec![vec![0.25, 0.0, 0.0], vec![0.0, -0.25, 0.0], vec![0.0, 0.0, 0.25]]);
    assert_eq!(v["tensors"]["T1"], serde_json::json!([0.0, 0.0, 0.0]));
}

#[test]
fn extract_maximally_mixed_is_zero() {
    let v = json_out(&blochlu(&["extract", p(&data("mixed.json"))]));
    for (key, t) in v["tensors"].as_object().unwrap() {
        let flat = t.to_string();
        assert!(!flat.chars().any(|c| ('1'..='9').contains(&c)), "{key}: {flat}");
    }
}

#[test]
fn malformed_grid_reports_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"n_qubits": 2, "matrix": {"re": [[1,0,0,0],[0,0,0,0],[0,0,0],[0,0,0,0]]}}"#).unwrap();
    let o = blochlu(&["extract", p(&path)]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("BadDimension") && stderr(&o).contains("row 2"), "{}", stderr(&o));
}

#[test]
fn product_state_twelve_values() {
    let o = blochlu(&["invariants", p(&data("product-00.json"))]);
    let v = json_out(&o);
    assert_eq!(v["scheme"], "two-qubit-12");
    let entries = entry_values(&v);
    assert_eq!(entries.len(), 12);
    // T1 = T2 = (0, 0, 1/4) and T12 = diag(0, 0, 1/4).
    let q = 0.25f64;
    let expected = [
        q * q,
        q.powi(4),
        q.powi(6),
        q * q,
        q.powi(4),
        q.powi(6),
        q.powi(3),
        q.powi(5),
        q.powi(7),
        q * q,
        q.powi(4),
        q.powi(6),
    ];
    for ((label, got), want) in entries.iter().zip(expected) {
        assert!((got - want).abs() <= 1e-12, "{label}: {got} vs {want}");
    }
    assert_eq!(entries[0].0, "<T1,T1>");
    assert!(v["genericity"]["generic"].is_boolean());
}

#[test]
fn invariant_values_carry_seventeen_digits() {
    let text = stdout(&blochlu(&["invariants", p(&data("product-00.json"))]));
    assert!(text.contains("\"value\": 6.2500000000000000e-2"), "{text}");
}

#[test]
fn ghz_ninety_scheme() {
    let v = json_out(&blochlu(&["invariants", p(&data("ghz.json")), "--scheme", "90"]));
    let entries = entry_values(&v);
    assert_eq!(entries.len(), 90);
    let (label, value) = entries.iter().find(|(l, _)| l.starts_with("[f] tr(")).unwrap();
    assert_eq!(label, "[f] tr(T1|23' T1|23)");
    assert!((value - 0.0625).abs() <= 1e-12);
    let ext = json_out(&blochlu(&["invariants", p(&data("ghz.json")), "--extended"]));
    assert_eq!(ext["scheme"], "three-qubit-extended");
    assert!(entry_values(&ext).len() > 90);
}

#[test]
fn ninety_scheme_rejects_two_qubits() {
    let o = blochlu(&["invariants", p(&data("bell.json")), "--scheme", "90"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("3 qubits"), "{}", stderr(&o));
}

#[test]
fn compare_product_and_bell_is_inequivalent() {
    let o = blochlu(&["compare", p(&data("product-00.json")), p(&data("bell.json"))]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("separating: <T1,T1>"), "{}", stdout(&o));
}

#[test]
fn compare_bell_states_uses_degenerate_branch() {
    let o = blochlu(&["compare", p(&data("bell.json")), p(&data("bell-phi-minus.json")), "--witness"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("branch: degenerate") && text.contains("U2 = "), "{text}");
}

#[test]
fn apply_then_compare_recovers_witness() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(code(&blochlu(&["random", "--qubits", "3", "--seed", "11", "-o", p(&a)])), 0);
    assert_eq!(code(&blochlu(&["apply", p(&a), "-o", p(&b), "--seed", "12"])), 0);
    assert!(dir.path().join("b.unitary.json").exists());

    let o = blochlu(&["compare", p(&a), p(&b), "--json"]);
    let v = json_out(&o);
    assert_eq!(v["verdict"], "equivalent");
    assert!(v["residual"].as_f64().unwrap() <= 1e-7);
    assert_eq!(v["witness"]["factors"].as_array().unwrap().len(), 3);

    let text = stdout(&blochlu(&["compare", p(&a), p(&b), "--witness"]));
    assert!(text.contains("residual: ") && text.contains("U3 = "), "{text}");
}

#[test]
fn apply_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let outs: Vec<String> = ["x.json", "y.json"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            assert_eq!(code(&blochlu(&["apply", p(&data("ghz.json")), "-o", p(&out), "--seed", "5"])), 0);
            std::fs::read_to_string(out).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn seed_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_blochlu"))
            .args(["random", "--qubits", "1"])
            .env("BLOCHLU_SEED", seed)
            .current_dir(dir.path())
            .output()
            .unwrap();
        stdout(&o)
    };
    assert_eq!(run("7"), stdout(&blochlu(&["random", "--qubits", "1", "--seed", "7"])));
    assert_ne!(run("7"), run("8"));
}

#[test]
fn identity_unitary_leaves_state_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let u = dir.path().join("id.json");
    std::fs::write(&u, r#"{"factors": [{"re": [[1,0],[0,1]]}, {"re": [[1,0],[0,1]]}]}"#).unwrap();
    let out = dir.path().join("out.json");
    assert_eq!(code(&blochlu(&["apply", p(&data("bell.json")), "-o", p(&out), "--unitary", p(&u)])), 0);
    let before = json_out(&blochlu(&["extract", p(&data("bell.json"))]));
    let after = json_out(&blochlu(&["extract", p(&out)]));
    assert_eq!(before, after);
}

#[test]
fn unitary_arity_mismatch_fails() {
    let dir = tempfile::tempdir().unwrap();
    let u = dir.path().join("one.json");
    std::fs::write(&u, r#"{"factors": [{"re": [[1,0],[0,1]]}]}"#).unwrap();
    let out = dir.path().join("out.json");
    let o = blochlu(&["apply", p(&data("bell.json")), "-o", p(&out), "--unitary", p(&u)]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("expected 2 local factors"), "{}", stderr(&o));
}

#[test]
fn random_states_reproducible_and_valid() {
    let a = blochlu(&["random", "--qubits", "2", "--rank", "4", "--seed", "3"]);
    let b = blochlu(&["random", "--qubits", "2", "--rank", "4", "--seed", "3"]);
    assert_eq!(stdout(&a), stdout(&b));
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("r.json");
    std::fs::write(&f, stdout(&a)).unwrap();
    assert_eq!(code(&blochlu(&["extract", p(&f)])), 0);

    let o = blochlu(&["random", "--qubits", "2", "--rank", "5", "--seed", "3"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("rank 5"), "{}", stderr(&o));
}

#[test]
fn words_families() {
    let o = blochlu(&["words", "--qubits", "2", "--family", "O1"]);
    let lines: Vec<String> = stdout(&o).lines().skip(1).map(String::from).collect();
    assert_eq!(
        lines,
        ["T1", "T12 T2", "T12 T12' T1", "T12 T12' T12 T2", "(T12 T12')^2 T1", "(T12 T12')^2 T12 T2"]
    );
    let o = blochlu(&["words", "--qubits", "3", "--family", "O1|23"]);
    assert_eq!(stdout(&o).lines().count(), 16);

    let o = blochlu(&["words", "--qubits", "3", "--family", "O9"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("unknown family"));
}

#[test]
fn words_enumerate_and_check() {
    let o = blochlu(&["words", "--qubits", "2", "--enumerate", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().nth(1), Some("T2"));

    let o = blochlu(&["words", "--qubits", "3", "--check", "T1|23 T1|23' T1"]);
    assert_eq!(code(&o), 0);
    let o = blochlu(&["words", "--qubits", "2", "--check", "T12 T1"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("junction 1"));
}

fn without_timings(s: &str) -> String {
    s.lines().map(|l| l.split(" (").next().unwrap()).collect::<Vec<_>>().join("\n")
}

#[test]
fn selftest_runs_and_is_deterministic() {
    let o = blochlu(&["selftest", "--trials", "0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 1);

    let a = blochlu(&["selftest", "--trials", "3", "--seed", "4"]);
    let b = blochlu(&["selftest", "--trials", "3", "--seed", "4"]);
    assert_eq!(code(&a), 0, "{}", stdout(&a));
    assert_eq!(without_timings(&stdout(&a)), without_timings(&stdout(&b)));
    assert!(!stdout(&a).contains("FAIL"));
}

#[test]
fn usage_errors_exit_three() {
    assert_eq!(code(&blochlu(&["--help"])), 0);
    assert_eq!(code(&blochlu(&["compare", "only-one.json"])), 3);
    assert_eq!(code(&blochlu(&["extract", "/nonexistent/state.json"])), 3);
}
