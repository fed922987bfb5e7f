use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn problem(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arrayaccel"))
        .args(args)
        .env_remove("ARRAYACCEL_BACKEND")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(args: &[&str]) -> (Value, i32) {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let o = run(&all);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(&o)));
    assert_eq!(v["schema"], 1);
    (v, o.status.code().unwrap())
}

#[test]
fn check_exit_codes() {
    let cases = [("overview.arr", 0, "unsafe"), ("swap_triple.arr", 1, "safe-bounded"), ("mixing.arr", 2, "unknown")];
    for (file, code, verdict) in cases {
        let path = problem(file);
        let o = run(&["check", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(code), "{file}: {}", stdout(&o));
        assert!(stdout(&o).starts_with(verdict), "{file}: {}", stdout(&o));
    }
}

#[test]
fn unknown_names_the_phase() {
    let (v, code) = json(&["check", problem("mixing.arr").to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(v["verdict"], "unknown");
    let why = v["reason"].as_str().unwrap();
    assert!(why.contains("classification") && why.contains("mixed inductive/displacing in Lval(r_2)"), "{why}");
}

#[test]
fn overview_model_reaches_the_error() {
    let (v, _) = json(&["check", problem("overview.arr").to_str().unwrap()]);
    let m = &v["model"];
    let (j, k, n) = (m["j"].as_i64().unwrap(), m["k"].as_i64().unwrap(), m["n"].as_i64().unwrap());
    assert_eq!(k, 10000);
    assert_eq!(n, k - m["i"].as_i64().unwrap());
    assert!((0..=k).contains(&j));
}

#[test]
fn classify_table() {
    let o = run(&["classify", problem("swap.arr").to_str().unwrap()]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0));
    assert!(text.contains("(select a (+ i 1))  displacing"), "{text}");
    assert!(text.lines().last() == Some("a-solvable"), "{text}");

    let (v, code) = json(&["classify", problem("mixing.arr").to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(v["a_solvable"], false);
    assert_eq!(v["lvalues"].as_array().unwrap().len(), 3);
}

#[test]
fn closed_form_of_an_array() {
    let o = run(&["closed-form", problem("swap.arr").to_str().unwrap(), "--array", "a"]);
    let text = stdout(&o);
    assert!(text.starts_with("(lambda (c) (ite"), "{text}");
    let (v, _) = json(&["closed-form", problem("swap.arr").to_str().unwrap(), "--show-rec", "--check", "n=5"]);
    assert_eq!(v["check"]["ok"], true);
    assert_eq!(v["check"]["n_max"], 5);
    assert!(v["solution"].as_array().unwrap().iter().any(|t| t.as_str().unwrap().contains("(+ n rec!")));
}

#[test]
fn accelerate_prints_the_transition() {
    let o = run(&["accelerate", problem("decrement.arr").to_str().unwrap()]);
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert!(lines.contains(&"(> n 0)".to_string()), "{lines:?}");
    assert!(lines.contains(&"(= i' (- i n))".to_string()), "{lines:?}");
}

#[test]
fn oracle_is_deterministic() {
    let args = ["oracle", "--fuzz", "12", "--seed", "5", "--n-max", "5", "--states", "2"];
    let (a, code) = json(&args);
    let (b, _) = json(&args);
    assert_eq!(code, 0);
    assert_eq!(a["failed"], 0);
    assert_eq!(a, b);
}

#[test]
fn parse_errors_have_locations() {
    let dir = std::env::temp_dir().join(format!("arrayaccel-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.arr");
    std::fs::write(&bad, "(vars (i 0))\n(loop (guard (< i 1)) (update (i (+ i 1)))").unwrap();
    let o = run(&["classify", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.arr:2:1"), "{err}");
}

#[test]
fn unusable_backend_is_an_error() {
    let o = run(&["--backend", "/nonexistent/solver", "check", problem("overview.arr").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}
