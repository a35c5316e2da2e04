use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn mmps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmps"))
        .args(args)
        .env("MMPS_LOG", "quiet")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn railway(dir: &TempDir) -> PathBuf {
    let path = dir.path().join("railway.json");
    let out = mmps(&["railway", "--stations", "4", "--emit", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const IDENTITY: &str = r#"{"format_version":"1.0","n":2,"m":2,"p":2,
  "kind_x":["t","t"],"kind_y":["t","t"],"kind_z":["t","t"],
  "A":[[1,"eps"],["eps",1]],"B":[[0,"top"],["top",0]],
  "C":[[1,0],[0,1]],"D":[[0,0],[0,0]]}"#;

// x(k) = x(k): the state reads itself in the same cycle, and the footprint
// program has no lower bound on the rate.
const SELF_LOOP: &str = r#"{"format_version":"1.0","n":1,"m":1,"p":1,
  "kind_x":["t"],"kind_y":["t"],"kind_z":["t"],
  "A":[[0]],"B":[[0]],"C":[[0]],"D":[[1]]}"#;

#[test]
fn railway_end_to_end() {
    let dir = TempDir::new().unwrap();
    let model = railway(&dir);
    assert_eq!(code(&mmps(&["validate", s(&model)])), 0);
    let out = mmps(&["analyze", s(&model)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = stdout_json(&out);
    assert_eq!(report["growth"]["lambdas"], serde_json::json!([120.0]));
    assert_eq!(report["growth"]["counts"]["total_lpps"], 64);
    let rate = &report["rates"][0];
    assert_eq!(rate["stability"]["report"]["verdict"], "Stable");
    assert_eq!(rate["stability"]["report"]["unit_eigen_count"], 2);
    assert_eq!(rate["stability"]["corollary"]["passed"], true);
    assert_eq!(rate["fixed_points"]["rank_heq"], 58);
    assert_eq!(rate["linearization"]["M"].as_array().unwrap().len(), 16);
}

#[test]
fn analyze_is_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let model = railway(&dir);
    let one = mmps(&["--parallel", "1", "analyze", s(&model)]);
    let four = mmps(&["--parallel", "4", "analyze", s(&model)]);
    let again = mmps(&["--parallel", "4", "analyze", s(&model)]);
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(four.stdout, again.stdout);
}

#[test]
fn simulate_from_fixed_point_is_stationary() {
    let dir = TempDir::new().unwrap();
    let model = railway(&dir);
    let out = mmps(&["simulate", s(&model), "--x0", "fixed-point", "--cycles", "10", "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let traj = stdout_json(&out);
    let states = traj["states"].as_array().unwrap();
    assert_eq!(states.len(), 11);
    let kinds = ["t", "t", "q", "q"].repeat(4);
    for (k, x) in states.iter().enumerate() {
        for (i, v) in x.as_array().unwrap().iter().enumerate() {
            let x0 = states[0][i].as_f64().unwrap();
            let drift = if kinds[i] == "t" { 120.0 * k as f64 } else { 0.0 };
            assert!((v.as_f64().unwrap() - x0 - drift).abs() < 1e-9, "state {i} cycle {k}");
        }
    }

    let csv = mmps(&["simulate", s(&model), "--x0", "fixed-point", "--cycles", "10"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("k,a1,d1,rho1,sigma1,a2"));
    assert_eq!(lines.count(), 11);
}

#[test]
fn simulate_reads_initial_state_file() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "id.json", IDENTITY);
    let x0 = write(&dir, "x0.json", "[0, 5]");
    let out = mmps(&["simulate", s(&model), "--x0", s(&x0), "--cycles", "2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "k,x1,x2\n0,0,5\n1,1,6\n2,2,7\n");
    let bad = write(&dir, "bad.json", "[0]");
    assert_eq!(code(&mmps(&["simulate", s(&model), "--x0", s(&bad), "--cycles", "2"])), 2);
}

#[test]
fn identity_system_analysis() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "id.json", IDENTITY);
    let out = mmps(&["analyze", s(&model)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = stdout_json(&out);
    assert_eq!(report["growth"]["lambdas"], serde_json::json!([1.0]));
    let st = &report["rates"][0]["stability"]["report"];
    assert_eq!(st["verdict"], "Stable");
    assert_eq!(st["unit_eigen_count"], 2);
}

#[test]
fn cyclic_dependency_is_negative() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "loop.json", SELF_LOOP);
    let out = mmps(&["analyze", s(&model)]);
    assert_eq!(code(&out), 1);
    let report = stdout_json(&out);
    assert_eq!(report["solvability"]["status"], "not_solvable");
    assert_eq!(report["solvability"]["cycle"], serde_json::json!([0, 0]));
    assert!(stderr(&out).contains("cycle"));
    assert_eq!(code(&mmps(&["solvability", s(&model)])), 1);
}

#[test]
fn unbounded_programs_are_counted() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "loop.json", SELF_LOOP);
    let out = mmps(&["growth-rates", s(&model)]);
    let report = stdout_json(&out);
    assert!(report["counts"]["unbounded"].as_u64().unwrap() > 0);
    assert_eq!(code(&out), 1);
}

#[test]
fn sentinel_in_wrong_matrix_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let text = IDENTITY.replace(r#"[1,"eps"]"#, r#"[1,"top"]"#);
    let model = write(&dir, "bad.json", &text);
    let out = mmps(&["validate", s(&model)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("illegal sentinel"), "{}", stderr(&out));
}

#[test]
fn syntax_error_reports_location() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "broken.json", "{\n  \"n\": 2,\n  oops\n}");
    let out = mmps(&["validate", s(&model)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
    assert_eq!(code(&mmps(&["validate", "/nonexistent/model.json"])), 2);
}

#[test]
fn time_variant_model_is_negative() {
    let dir = TempDir::new().unwrap();
    let text = IDENTITY.replace(r#""C":[[1,0],[0,1]]"#, r#""C":[[1,0],[0,2]]"#);
    let model = write(&dir, "tv.json", &text);
    let out = mmps(&["validate", s(&model)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("not time-invariant"), "{}", stderr(&out));
    assert_eq!(code(&mmps(&["analyze", s(&model)])), 1);
}

#[test]
fn stage_commands_select_rates() {
    let dir = TempDir::new().unwrap();
    let model = railway(&dir);
    for cmd in ["fixed-points", "normalize", "linearize", "stability"] {
        let out = mmps(&[cmd, s(&model), "--lambda", "120"]);
        assert_eq!(code(&out), 0, "{cmd}: {}", stderr(&out));
        assert_eq!(stdout_json(&out).as_array().unwrap().len(), 1, "{cmd}");
        assert_eq!(code(&mmps(&[cmd, s(&model), "--lambda", "99"])), 2, "{cmd}");
    }
    let out = mmps(&["normalize", s(&model)]);
    assert_eq!(stdout_json(&out)[0]["structure_ok"], true);
}

#[test]
fn railway_parameters_and_usage_errors() {
    let dir = TempDir::new().unwrap();
    let out = mmps(&["railway", "--stations", "3", "--param", "tau_r=50"]);
    assert_eq!(code(&out), 0);
    let model = stdout_json(&out);
    assert_eq!(model["n"], 12);
    let path = write(&dir, "r3.json", &String::from_utf8(out.stdout).unwrap());
    assert_eq!(code(&mmps(&["validate", s(&path)])), 0);

    assert_eq!(code(&mmps(&["railway", "--param", "nonsense=1"])), 2);
    assert_eq!(code(&mmps(&["railway", "--param", "b=abc"])), 2);
    assert_eq!(code(&mmps(&["railway", "--param", "e=100"])), 2);
    assert_eq!(code(&mmps(&["railway", "--stations", "1"])), 2);
    assert_eq!(code(&mmps(&["frobnicate"])), 2);
    assert_eq!(code(&mmps(&["--tol", "-1", "railway"])), 2);
}
