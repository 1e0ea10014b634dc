use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn qsplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsplit")).args(args).output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = qsplit(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qsplit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn rho_min_output() {
    let out = qsplit(&["rho-min", "--n", "3"]);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "{\"d\":2,\"n\":3,\"rho_min\":\"1/3\",\"witness\":{\"exponents\":[1,2,2]}}\n"
    );
    assert_eq!(json(&["rho-min", "--n", "5", "--d", "3"])["rho_min"], "1/10");
}

#[test]
fn exit_codes() {
    assert_eq!(qsplit(&["--help"]).status.code(), Some(0));
    assert_eq!(qsplit(&["--version"]).status.code(), Some(0));
    assert_eq!(qsplit(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(qsplit(&["rho-min"]).status.code(), Some(1));
    assert_eq!(qsplit(&["rho-min", "--n", "0"]).status.code(), Some(2));
    assert_eq!(qsplit(&["g-bound", "--beta", "3", "--method", "single"]).status.code(), Some(2));
    assert_eq!(qsplit(&["g-bound", "--beta", "1/0"]).status.code(), Some(2));
    assert_eq!(qsplit(&["q-exact", "--n", "40"]).status.code(), Some(3));
    assert_eq!(qsplit(&["verify", "--questions", "/nonexistent/q.json"]).status.code(), Some(2));
}

#[test]
fn binary_constants() {
    let v = json(&["dary", "--d", "2"]);
    assert_eq!(v["magic"], 1.25);
    assert!((v["beta"].as_f64().unwrap() - 0.2).abs() < 1e-12);
    let g = json(&["g-bound", "--beta", "5/4", "--method", "single", "--b", "1"]);
    assert!((g["value"].as_f64().unwrap() + 1.25f64.log2()).abs() < 1e-12);
    let exact = json(&["g-bound", "--beta", "1.25", "--method", "single", "--b", "1"]);
    assert_eq!(exact["value"], g["value"]);
}

#[test]
fn hitter_file_verifies_and_prices() {
    let qpath = scratch("q4.json");
    let dpath = scratch("d4.json");
    let out = qsplit(&["hitter", "--n", "4", "--out", qpath.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&qpath).unwrap()).unwrap();
    assert_eq!(file["size"], 5);
    let v = json(&["verify", "--questions", qpath.to_str().unwrap()]);
    assert_eq!(v["optimal"], true);

    std::fs::write(&dpath, r#"{"d":2,"exponents":[1,2,3,3]}"#).unwrap();
    let c = json(&["restricted-cost", "--dist", dpath.to_str().unwrap(), "--questions", qpath.to_str().unwrap()]);
    assert_eq!(c["cost"], "7/4");
    assert_eq!(c["optimal"], true);
    let h = json(&["huffman", "--dist", dpath.to_str().unwrap()]);
    assert!((h["cost"].as_f64().unwrap() - 1.75).abs() < 1e-12);
    let bp = json(&["block-partition", "--dist", dpath.to_str().unwrap()]);
    assert_eq!(bp["valid"], true);
}

#[test]
fn halving_set_fails_for_a_missing_question() {
    let qpath = scratch("q3.json");
    std::fs::write(&qpath, r#"{"n":3,"d":2,"questions":[[0],[1]]}"#).unwrap();
    let v = json(&["verify", "--questions", qpath.to_str().unwrap()]);
    assert_eq!(v["optimal"], false);
    assert!(v["counterexample"]["exponents"].is_array());
}

#[test]
fn csv_output() {
    let out = qsplit(&["curves", "--beta-min", "1.5", "--beta-max", "1.6", "--step", "0.05", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "beta,single_b1,single_b0,two_block");
    assert_eq!(lines.len(), 4);
    let dary = String::from_utf8(qsplit(&["dary", "--d", "3", "--format", "csv"]).stdout).unwrap();
    assert!(dary.starts_with("beta,d,f_opt,magic,two_minus_mc\n"));
}

#[test]
fn thread_count_does_not_change_results() {
    let one = qsplit(&["--threads", "1", "hitter", "--n", "6", "--method", "random", "--seed", "9"]);
    let four = qsplit(&["--threads", "4", "hitter", "--n", "6", "--method", "random", "--seed", "9"]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let a = qsplit(&["--threads", "1", "rho-min", "--n", "8"]);
    let b = qsplit(&["--threads", "3", "rho-min", "--n", "8"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn report_exit_status() {
    let ok = qsplit(&["report", "--only", "5,9"]);
    assert_eq!(ok.status.code(), Some(0));
    let stderr = String::from_utf8(ok.stderr).unwrap();
    assert_eq!(stderr.lines().filter(|l| l.starts_with("PASS")).count(), 2);
    let bad = qsplit(&["report", "--only", "3", "--tol-scale", "0"]);
    assert_eq!(bad.status.code(), Some(5));
    assert!(String::from_utf8(bad.stderr).unwrap().starts_with("FAIL [ 3]"));
}
