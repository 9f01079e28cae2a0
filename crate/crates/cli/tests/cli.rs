use std::fs;
use std::path::Path;
use std::process::Command;

use bmfix::scenarios::{save, squared_line_example};
use bmfix_cli::{main_with, EXIT_INVALID, EXIT_MAX_ITER, EXIT_OK, EXIT_VIOLATION};
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["bmfix"];
    argv.extend_from_slice(args);
    let code = main_with(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn run_builtin_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, err) = run(&["run", "--scenario", "squared-line", "--out", out]);
    assert_eq!(code, EXIT_OK, "{err}");
    let r = report(dir.path());
    assert_eq!(r["certificate"]["verdicts"]["thm33"], "applicable");
    assert_eq!(r["certificate"]["verdicts"]["thm41"], "not applicable");
    assert_eq!(r["orbit"]["status"], "converged");
    assert!(r["certificate"]["alpha_note"]
        .as_str()
        .unwrap()
        .contains("non-minimal"));
    for key in [
        "scenario_digest",
        "certificate",
        "orbit",
        "audit",
        "timing_ms",
    ] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    let audit = &r["audit"];
    assert!(audit["cauchy_ratio_max"].as_f64().unwrap() <= 1.0 + 1e-9);
    assert!(audit["chaining_ratio_max"].as_f64().unwrap() <= 1.0 + 1e-9);
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("n,point,d_n,ratio,gamma,cauchy_bound_at_n\n"));
}

#[test]
fn run_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, _) = run(&[
        "run",
        "--scenario",
        "squared-line",
        "--out",
        out,
        "--max-iter",
        "1",
    ]);
    assert_eq!(code, EXIT_MAX_ITER);
    assert_eq!(report(dir.path())["orbit"]["status"], "max_iter");

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let (code, _, err) = run(&["run", "--scenario", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("error"));

    let (code, _, _) = run(&[
        "run",
        "--scenario",
        "squared-line",
        "--out",
        out,
        "--beta",
        "0.5",
    ]);
    assert_eq!(code, EXIT_INVALID);

    // alpha below alpha_min: the contraction condition fails
    let mut sc = squared_line_example();
    sc.params.alpha = 0.5;
    let path = dir.path().join("weak.json");
    save(&sc, &path).unwrap();
    let (code, _, err) = run(&["run", "--scenario", path.to_str().unwrap(), "--out", out]);
    assert_eq!(code, EXIT_VIOLATION, "{err}");
}

#[test]
fn run_json_trace_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, _) = run(&[
        "run",
        "--scenario",
        "squared-line",
        "--out",
        out,
        "--format",
        "json",
        "--tol",
        "1e-6",
        "--beta",
        "0.92",
    ]);
    assert_eq!(code, EXIT_OK);
    let trace: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("trace.json")).unwrap()).unwrap();
    assert_eq!(trace["beta"], 0.92);
    assert!(trace["residual"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn ratio_violation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // certified on a sample that misses the expanding pair
    let json = r#"{"space":{"kind":"matrix","n":3,"s":1.0,"d":[[0,1,10],[1,0,10],[10,10,0]]},
        "map":{"kind":"table","images":{"0":[1],"1":[2],"2":[0]}},
        "params":{"c":0,"q":0,"alpha":0.5},"x0":0,"tol":1e-9,"max_iter":10,
        "sample":{"kind":"points","pts":[0,2]}}"#;
    let path = dir.path().join("s.json");
    fs::write(&path, json).unwrap();
    let out = dir.path().join("o");
    let (code, _, err) = run(&[
        "run",
        "--scenario",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_VIOLATION, "{err}");
    assert!(err.contains("ratio violation"));
}

#[test]
fn report_is_stable_apart_from_timing() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let (code, _, _) = run(&[
            "run",
            "--scenario",
            "squared-line",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
    }
    let strip = |d: &Path| {
        let mut v = report(d);
        v.as_object_mut().unwrap().remove("timing_ms");
        serde_json::to_string_pretty(&v).unwrap()
    };
    assert_eq!(strip(a.path()), strip(b.path()));
    assert_eq!(
        fs::read(a.path().join("trace.csv")).unwrap(),
        fs::read(b.path().join("trace.csv")).unwrap()
    );
}

#[test]
fn verify_exit_codes() {
    let (code, out, _) = run(&["verify", "--scenario", "squared-line"]);
    assert_eq!(code, EXIT_OK);
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert!((doc["certificate"]["alpha_min"].as_f64().unwrap() - 0.81).abs() < 1e-9);
    assert_eq!(doc["axioms"]["passed"], true);

    let dir = tempfile::tempdir().unwrap();
    let json = r#"{"space":{"kind":"matrix","n":3,"s":1.9,"d":[[0,1,4],[1,0,1],[4,1,0]]},
        "map":{"kind":"table","images":{"0":[1],"1":[1],"2":[1]}},
        "params":{"c":0,"q":0,"alpha":0.5},"x0":0,"tol":1e-9,"max_iter":10}"#;
    let path = dir.path().join("line.json");
    fs::write(&path, json).unwrap();
    let (code, out, _) = run(&["verify", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_VIOLATION);
    let doc: Value = serde_json::from_str(&out).unwrap();
    let v = &doc["axioms"]["violations"][0];
    assert_eq!(v["axiom"], "relaxed-triangle");
    assert_eq!(v["witnesses"], serde_json::json!([0, 2, 1]));

    let (code, _, _) = run(&["verify", "--scenario", "/nonexistent/scenario.json"]);
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn compare_tables() {
    let (code, out, _) = run(&["compare", "--scenario", "squared-line"]);
    assert_eq!(code, EXIT_OK);
    let thm33 = out.lines().find(|l| l.starts_with("thm33")).unwrap();
    let thm41 = out.lines().find(|l| l.starts_with("thm41")).unwrap();
    assert!(thm33.contains("0 < 1") && thm33.ends_with("YES"), "{thm33}");
    assert!(
        thm41.contains("> 0.16666666666666666") && thm41.ends_with("NO"),
        "{thm41}"
    );

    let (code, out, _) = run(&["compare", "--scenario", "metric-example"]);
    assert_eq!(code, EXIT_OK);
    assert!(
        out.lines()
            .filter(|l| l.starts_with("thm"))
            .all(|l| l.ends_with("YES")),
        "{out}"
    );

    // q s alpha >= 1 on the squared line
    let mut sc = squared_line_example();
    sc.params.q = 1.0;
    sc.params.alpha = 0.95;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.json");
    save(&sc, &path).unwrap();
    let (code, out, _) = run(&["compare", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let thm33 = out.lines().find(|l| l.starts_with("thm33")).unwrap();
    assert!(thm33.ends_with("NO"), "{thm33}");

    let (code, _, _) = run(&["compare", "--scenario", "nope.json"]);
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn generate_then_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    let (code, _, _) = run(&[
        "generate",
        "--seed",
        "42",
        "--points",
        "5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let (_, stdout, _) = run(&["generate", "--seed", "42", "--points", "5"]);
    assert_eq!(stdout, fs::read_to_string(&path).unwrap());
    let out = dir.path().join("o");
    let (code, _, err) = run(&[
        "run",
        "--scenario",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let (code, _, _) = run(&["verify", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
}

#[test]
fn usage_errors_are_invalid_input() {
    assert_eq!(run(&["frobnicate"]).0, EXIT_INVALID);
    assert_eq!(run(&["run"]).0, EXIT_INVALID);
    assert_eq!(run(&["--help"]).0, EXIT_OK);
}

#[test]
fn builtin_alias_resolves() {
    let (code, out, _) = run(&["compare", "--scenario", "paper-example"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, run(&["compare", "--scenario", "squared-line"]).1);
}

#[test]
fn binary_exit_status() {
    let bin = env!("CARGO_BIN_EXE_bmfix");
    let status = Command::new(bin)
        .args(["compare", "--scenario", "squared-line"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let status = Command::new(bin)
        .args(["verify", "--scenario", "/does/not/exist"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(3));
}
