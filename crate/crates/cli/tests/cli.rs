use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const LAYERED: &str = r#"{"generator": "layered-dag", "n": 10, "layers": 3, "edge_prob": 0.4,
    "cost_min": 1, "cost_max": 10, "k": 2, "terminals": 2}"#;

fn kdst(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kdst"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "status {:?}, stderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn generated(dir: &Path, seed: &str) {
    let out = kdst(&["generate", LAYERED, "--seed", seed, "--out", "inst.txt"], dir);
    assert!(out.status.success());
}

#[test]
fn solve_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    generated(dir.path(), "3");
    let solved = kdst(&["solve", "inst.txt", "--seed", "9", "--transcript", "t.json", "--dot", "tree.dot"], dir.path());
    std::fs::write(dir.path().join("sol.json"), &solved.stdout).unwrap();
    let solved = json(&solved);
    assert_eq!(solved["feasible"], true);
    assert!(solved["cost"].as_f64().unwrap() >= solved["lp_value"].as_f64().unwrap() - 1e-9);

    let checked = json(&kdst(&["verify", "inst.txt", "sol.json"], dir.path()));
    assert_eq!(checked["cost"], solved["cost"]);
    assert_eq!(checked["min_lambda"].as_u64().unwrap(), 2);

    let transcript: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.json")).unwrap()).unwrap();
    assert_eq!(transcript["seed"], 9);
    assert_eq!(transcript["rounds"].as_array().unwrap().len(), transcript["iterations"].as_u64().unwrap() as usize);
    assert!(std::fs::read_to_string(dir.path().join("tree.dot")).unwrap().starts_with("digraph"));
}

#[test]
fn solve_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    generated(dir.path(), "11");
    let a = kdst(&["solve", "inst.txt", "--seed", "4", "--threads", "1"], dir.path());
    let b = kdst(&["solve", "inst.txt", "--seed", "4", "--threads", "3"], dir.path());
    assert_eq!(json(&a), json(&b));
}

#[test]
fn lp_then_round() {
    let dir = tempfile::tempdir().unwrap();
    generated(dir.path(), "5");
    let lp = json(&kdst(&["lp", "inst.txt", "--mps", "lp.mps", "--solution", "lp.json"], dir.path()));
    assert_eq!(lp["status"], "optimal");
    let mps = std::fs::read_to_string(dir.path().join("lp.mps")).unwrap();
    assert!(mps.starts_with("NAME") && mps.trim_end().ends_with("ENDATA"));

    let plain = json(&kdst(&["lp", "inst.txt", "--plain"], dir.path()));
    assert!(plain["objective"].as_f64().unwrap() <= lp["objective"].as_f64().unwrap() + 1e-6);

    let rounded = json(&kdst(&["round", "inst.txt", "--lp-solution", "lp.json"], dir.path()));
    assert_eq!(rounded["feasible"], true);
    assert_eq!(rounded["lp_value"], lp["objective"]);
}

#[test]
fn exact_and_baseline_sandwich() {
    let dir = tempfile::tempdir().unwrap();
    generated(dir.path(), "2");
    let exact = json(&kdst(&["exact", "inst.txt"], dir.path()));
    let base = json(&kdst(&["baseline", "inst.txt"], dir.path()));
    let opt = exact["cost"].as_f64().unwrap();
    let b = base["cost"].as_f64().unwrap();
    assert!(opt <= b && b <= 2.0 * opt);
}

#[test]
fn csv_format_is_one_row() {
    let dir = tempfile::tempdir().unwrap();
    generated(dir.path(), "3");
    let out = kdst(&["baseline", "inst.txt", "--format", "csv"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("cost,"));
}

#[test]
fn subgraph_variant() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{"generator": "strong-digraph", "n": 6, "k": 2, "extra_prob": 0.1, "terminals": 3}"#;
    assert!(kdst(&["generate", spec, "--out", "inst.txt"], dir.path()).status.success());
    let out = kdst(&["solve", "inst.txt", "--variant", "subgraph"], dir.path());
    std::fs::write(dir.path().join("sol.json"), &out.stdout).unwrap();
    assert_eq!(json(&out)["feasible"], true);
    let checked = json(&kdst(&["verify", "inst.txt", "sol.json", "--subgraph"], dir.path()));
    assert!(checked["min_lambda"].as_u64().unwrap() >= 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("infeasible.txt"), "kdst 1\nn 3 r 0 k 2 D 2\nT 2\ne 0 1 1\ne 1 2 1\n").unwrap();
    std::fs::write(p.join("garbage.txt"), "not an instance\n").unwrap();
    std::fs::write(p.join("partial.txt"), "0\n").unwrap();
    generated(p, "3");

    assert_eq!(kdst(&["solve", "infeasible.txt"], p).status.code(), Some(2));
    assert_eq!(kdst(&["exact", "infeasible.txt"], p).status.code(), Some(2));
    assert_eq!(kdst(&["solve", "inst.txt", "--path-cap", "2"], p).status.code(), Some(3));
    assert_eq!(kdst(&["exact", "inst.txt", "--max-edges", "3"], p).status.code(), Some(3));
    assert_eq!(kdst(&["exact", "inst.txt", "--node-budget", "1"], p).status.code(), Some(3));
    // An instance with a fractional relaxation, where single rounds often fail.
    let fractional = r#"{"generator": "layered-dag", "n": 12, "layers": 3, "edge_prob": 0.3,
        "cost_min": 1, "cost_max": 10, "k": 2, "terminals": 5}"#;
    assert!(kdst(&["generate", fractional, "--seed", "4", "--out", "frac.txt"], p).status.success());
    let codes: Vec<Option<i32>> = (0..20)
        .map(|seed| {
            let seed = seed.to_string();
            let args = ["solve", "frac.txt", "--iterations", "1", "--max-restarts", "1", "--seed", &seed];
            kdst(&args, p).status.code()
        })
        .collect();
    assert!(codes.iter().all(|&c| c == Some(0) || c == Some(3)));
    assert!(codes.contains(&Some(3)));
    assert_eq!(kdst(&["solve", "garbage.txt"], p).status.code(), Some(4));
    assert_eq!(kdst(&["solve", "missing.txt"], p).status.code(), Some(4));
    assert_eq!(kdst(&["solve", "inst.txt", "--variant", "dst"], p).status.code(), Some(4));
    assert_eq!(kdst(&["solve", "inst.txt", "--repeat-constant", "0"], p).status.code(), Some(4));
    assert_eq!(kdst(&["--format", "xml", "solve", "inst.txt"], p).status.code(), Some(4));
    assert_eq!(kdst(&["verify", "inst.txt", "partial.txt"], p).status.code(), Some(1));
    assert_eq!(kdst(&["--help"], p).status.code(), Some(0));
}

#[test]
fn experiment_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let spec = format!(
        r#"{{"name": "cli", "generator": {}, "seeds": [1, 2, 3], "algorithms": ["kdst", "baseline", "exact"]}}"#,
        LAYERED
    );
    std::fs::write(p.join("spec.json"), spec).unwrap();
    let run = |threads: &str, out: &str| {
        let o = kdst(&["experiment", "spec.json", "--out", out, "--threads", threads, "--format", "csv"], p);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(p.join(out).join("results.csv")).unwrap()
    };
    let strip = |csv: &str| -> Vec<String> {
        csv.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
    };
    let a = run("1", "a");
    let b = run("4", "b");
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(a.lines().count(), 1 + 3 * 3);
    assert!(p.join("a/runs/1_kdst.json").exists());

    let summary = kdst(&["report", "a/results.csv", "--summarize"], p);
    let text = String::from_utf8(summary.stdout).unwrap();
    assert!(text.starts_with("algorithm"));
    assert_eq!(text.lines().count(), 4);
    let rows = json(&kdst(&["report", "a/results.csv"], p));
    assert_eq!(rows.as_array().unwrap().len(), 9);
}
