use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

use noisetab::select::{brute_force_selection, SelectionProblem};

fn noisetab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noisetab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn estimate_table_values() {
    let tmp = tempfile::tempdir().unwrap();
    let f = write(
        tmp.path(),
        "vals.txt",
        "# six samples\n328.3654\n329.2947\n328.4099\n\n328.5886\n328.2965\n328.4134\n",
    );
    let out = noisetab(&["estimate", &f]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let expected = [0.4216, 0.4477, 0.4361, 0.4250, 0.4300];
    let per_order = v["per_order"].as_array().unwrap();
    assert_eq!(per_order.len(), 5);
    for (e, want) in per_order.iter().zip(expected) {
        assert!((e["estimate"].as_f64().unwrap() - want).abs() <= 5e-5);
    }
    assert_eq!(v["status"], "Ok");
    assert_eq!(v["selected_order"], 1);
}

#[test]
fn estimate_too_few_values() {
    let tmp = tempfile::tempdir().unwrap();
    let f = write(tmp.path(), "vals.txt", "1\n2\n3\n");
    let out = noisetab(&["estimate", &f]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too few points"));
}

#[test]
fn estimate_constant_declines() {
    let tmp = tempfile::tempdir().unwrap();
    let f = write(tmp.path(), "vals.txt", &"2.5\n".repeat(7));
    let out = noisetab(&["estimate", &f]);
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out);
    assert_eq!(v["status"], "NoAgreement");
    assert_eq!(v["value"].as_f64(), Some(0.0));
}

#[test]
fn estimate_bad_number() {
    let tmp = tempfile::tempdir().unwrap();
    let f = write(tmp.path(), "vals.txt", "1\ntwo\n3\n4\n");
    let out = noisetab(&["estimate", &f]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn estimate_points_and_function() {
    let tmp = tempfile::tempdir().unwrap();
    let points: Vec<Vec<f64>> = (0..8).map(|j| vec![3.0 + j as f64 * 1e-6, -1.0]).collect();
    let input = json!({
        "points": points,
        "function": {"ground_truth": {"kind": "quadratic"},
                     "noise": {"kind": "multiplicative", "sigma": 1e-3}, "dim": 2},
        "seed": 5
    });
    let f = write(tmp.path(), "pts.json", &input.to_string());
    let a = noisetab(&["estimate", &f]);
    let b = noisetab(&["estimate", &f]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let value = stdout_json(&a)["value"].as_f64().unwrap();
    // noise level is 1e-3 * f(y0) = 1e-2
    assert!(value > 2.5e-3 && value < 4e-2, "{value}");
}

#[test]
fn select_collinear_subset() {
    let tmp = tempfile::tempdir().unwrap();
    let base = [0.5, -1.0, 2.0];
    let d = [0.3, -0.1, 0.2];
    let mut pool: Vec<Vec<f64>> = vec![
        vec![0.9, -0.2, 2.7],
        vec![-0.4, -1.6, 1.1],
        vec![1.8, 0.1, 2.2],
        vec![0.0, -2.0, 3.0],
    ];
    // collinear, equally spaced points along d, shuffled into the clutter;
    // only the j = 1 point keeps the first-order term at |d|_inf
    for j in [3.0, 1.0, 4.0, 2.0] {
        pool.push(base.iter().zip(&d).map(|(b, v)| b + j * v).collect());
    }
    let problem = json!({"base": base, "pool": pool, "m": 4, "reuse": 4});
    let f = write(tmp.path(), "p.json", &problem.to_string());
    let out = noisetab(&["select", &f]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["optimal"], true);
    assert!((v["objective"].as_f64().unwrap() - 0.3).abs() < 1e-12);
    let idx: Vec<u64> = v["assignment"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["index"].as_u64().unwrap())
        .collect();
    assert_eq!(idx[0], 5);
    // later slots tie; the lexicographic tie-break must agree with enumeration
    let oracle = brute_force_selection(&serde_json::from_value::<SelectionProblem>(problem).unwrap()).unwrap();
    let want: Vec<u64> = oracle.pool_indices().iter().map(|&i| i as u64).collect();
    assert_eq!(idx, want);
    assert_eq!(v["objective"].as_f64().unwrap(), oracle.objective);
    assert_eq!(v["objective_normalization"], "divided_difference");
    assert!(v["wall_time_secs"].as_f64().unwrap() >= 0.0);
}

#[test]
fn select_fifty_point_pool_finishes() {
    let tmp = tempfile::tempdir().unwrap();
    // fixed pseudo-random pool so the fixture is deterministic
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let base: Vec<f64> = (0..6).map(|_| 10.0 * next()).collect();
    let pool: Vec<Vec<f64>> = (0..50)
        .map(|_| base.iter().map(|b| b + 1e-6 * next()).collect())
        .collect();
    let problem = json!({"base": base, "pool": pool, "m": 6, "reuse": 6, "h": 1e-6,
                         "limits": {"max_nodes": 10_000_000u64, "time_limit_secs": 10.0}});
    let f = write(tmp.path(), "p.json", &problem.to_string());
    let out = noisetab(&["select", &f]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["assignment"].as_array().unwrap().len(), 6);
    assert!(v["wall_time_secs"].as_f64().unwrap() < 10.5);
}

#[test]
fn select_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.json", "{\"base\": [0.0], \"pool\": ");
    assert_eq!(noisetab(&["select", &bad]).status.code(), Some(1));
    let infeasible = write(
        tmp.path(),
        "inf.json",
        &json!({"base": [0.0], "pool": [[1.0]], "m": 3, "reuse": 2, "h": 1.0}).to_string(),
    );
    let out = noisetab(&["select", &infeasible]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

#[test]
fn experiment_grid_smoke() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("fresh/dir");
    let out = noisetab(&[
        "experiment",
        "--preset",
        "grid",
        "--trials",
        "10",
        "--seed",
        "4",
        "--threads",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("ks_p="));
    assert!(text.contains("success="));
    let csv = fs::read_to_string(dir.join("trials.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 10 * 12 * 2);
    let summary: Value = serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 4);
    assert_eq!(summary["config"]["trials"], 10);
    assert_eq!(summary["cells"].as_array().unwrap().len(), 12);

    // the echoed config reruns to identical files
    let again = tmp.path().join("again");
    let out = noisetab(&[
        "experiment",
        dir.join("config.json").to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        fs::read(dir.join("trials.csv")).unwrap(),
        fs::read(again.join("trials.csv")).unwrap()
    );
}

#[test]
fn experiment_geometry_writes_ks() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("geo");
    let out = noisetab(&["experiment", "--preset", "geometry", "--trials", "50", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let summary: Value = serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap();
    for cell in summary["cells"].as_array().unwrap() {
        let p = cell["ks_standard_vs_arbitrary"]["p_value"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert_eq!(cell["modes"][0]["ecdf"].as_array().unwrap().len(), 50);
    }
}

#[test]
fn experiment_unwritable_output() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = write(tmp.path(), "file", "x");
    let target = Path::new(&blocker).join("out");
    let out = noisetab(&["experiment", "--preset", "grid", "--trials", "2", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn experiment_needs_a_source() {
    assert_eq!(noisetab(&["experiment"]).status.code(), Some(1));
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", "{\"kind\": \"grid\"}");
    assert_eq!(noisetab(&["experiment", &cfg]).status.code(), Some(1));
}
