use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_congestion"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout(&out)
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

const SUBCOMMANDS: &[&[&str]] = &[
    &[],
    &["analyze"],
    &["dynamics"],
    &["generate"],
    &["generate", "thm2"],
    &["generate", "thm5"],
    &["generate", "reduction"],
    &["generate", "thm8"],
    &["generate", "random"],
    &["classify"],
    &["matroid"],
    &["matroid", "validate"],
    &["matroid", "min-basis"],
    &["matroid", "weak-dynamics"],
    &["bounds"],
    &["bounds", "smoothness"],
    &["bounds", "poa-bound"],
    &["bounds", "approx-guarantee"],
    &["table"],
    &["solve"],
];

#[test]
fn every_help_exits_zero_and_lists_global_flags() {
    let dir = TempDir::new().unwrap();
    for sub in SUBCOMMANDS {
        let mut args = sub.to_vec();
        args.push("--help");
        let out = run(dir.path(), &args);
        assert!(out.status.success(), "{args:?}");
        let text = stdout(&out);
        assert!(text.contains("--json <PATH>"), "{args:?}: {text}");
        assert!(text.contains("--threads <INT>"), "{args:?}: {text}");
    }
}

#[test]
fn help_documents_command_flags() {
    let dir = TempDir::new().unwrap();
    let cases: &[(&[&str], &[&str])] = &[
        (
            &["analyze"],
            &["--game", "--is-pne", "--find-pne", "--min-beta", "--exact-poa", "--certify", "--budget"],
        ),
        (&["dynamics"], &["--game", "--beta", "--max-steps", "--start", "--trace"]),
        (&["generate", "thm5"], &["--p", "--q", "--d", "--out"]),
        (&["generate", "random"], &["--seed", "--p", "--q", "--d"]),
        (&["matroid", "validate"], &["--matroid"]),
        (&["matroid", "weak-dynamics"], &["--game", "--max-steps"]),
        (&["bounds", "approx-guarantee"], &["--p", "--q", "--d", "--epsilon"]),
    ];
    for (sub, flags) in cases {
        let mut args = sub.to_vec();
        args.push("--help");
        let text = ok(dir.path(), &args);
        for flag in *flags {
            assert!(text.contains(flag), "{args:?} lacks {flag}");
        }
    }
}

#[test]
fn table_prints_every_reference_cell() {
    let dir = TempDir::new().unwrap();
    let text = ok(dir.path(), &["table"]);
    let rows: Vec<Vec<String>> = text
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().filter(|t| *t != "|").map(String::from).collect())
        .collect();
    let expected = [
        ["1", "2", "2.83", "6.32", "1.59", "2.37"],
        ["2", "3", "3.17", "9.28", "2.54", "2.91"],
        ["1", "inf", "4", "20", "2.83", "6.32"],
        ["2", "inf", "4", "20", "4.76", "7.11"],
        ["10", "inf", "4", "20", "20.71", "22.44"],
    ];
    assert_eq!(rows.len(), expected.len());
    for (row, want) in rows.iter().zip(expected) {
        assert_eq!(row, &want);
    }
    let csv = ok(dir.path(), &["table", "--csv"]);
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.contains("10,inf,4,20,20.71,22.44"));
}

#[test]
fn two_exponent_game_has_no_equilibrium() {
    let dir = TempDir::new().unwrap();
    for (p, q) in [(1, 2), (1, 3), (2, 5)] {
        let (p, q) = (p.to_string(), q.to_string());
        ok(dir.path(), &["generate", "thm2", "--p", &p, "--q", &q, "--out", "g.json"]);
        let text = ok(dir.path(), &["analyze", "--game", "g.json", "--find-pne"]);
        assert_eq!(text.lines().next(), Some("0 pure Nash equilibria"));
    }
}

#[test]
fn dynamics_reports_termination() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["generate", "random", "--seed", "7", "--out", "g.json"]);
    let text = ok(
        dir.path(),
        &["dynamics", "--game", "g.json", "--beta", "1.2", "--max-steps", "1000", "--trace", "t.jsonl"],
    );
    assert!(text.contains("termination: equilibrium after"), "{text}");
    let steps = text.lines().filter(|l| l.starts_with("step ")).count();
    let trace = std::fs::read_to_string(dir.path().join("t.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), steps);
    for line in trace.lines() {
        let step: Value = serde_json::from_str(line).unwrap();
        let factor = step["factor"].as_f64().unwrap_or_else(|| {
            assert_eq!(step["factor"], "inf");
            f64::INFINITY
        });
        assert!(factor > 1.2);
    }
}

#[test]
fn dynamics_step_budget_is_reported() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["generate", "thm2", "--p", "1", "--q", "2", "--out", "g.json"]);
    let text = ok(dir.path(), &["dynamics", "--game", "g.json", "--max-steps", "3", "--json", "r.json"]);
    assert!(text.contains("termination: "), "{text}");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let term = report["results"]["trace"]["termination"].as_str().unwrap();
    assert!(term == "step_budget" || term == "cycle", "{term}");
}

#[test]
fn json_report_is_byte_identical() {
    let dirs = [TempDir::new().unwrap(), TempDir::new().unwrap()];
    let args = |threads: &'static str| {
        vec![
            "--threads", threads, "analyze", "--game", "g.json", "--find-pne", "--min-beta", "--exact-poa",
            "--json", "r.json",
        ]
    };
    let mut reports = Vec::new();
    for dir in &dirs {
        ok(dir.path(), &["generate", "random", "--players", "3", "--seed", "11", "--out", "g.json"]);
        ok(dir.path(), &args("1"));
        reports.push(std::fs::read(dir.path().join("r.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);

    ok(dirs[1].path(), &args("4"));
    let a: Value = serde_json::from_slice(&reports[0]).unwrap();
    let c: Value = serde_json::from_slice(&std::fs::read(dirs[1].path().join("r.json")).unwrap()).unwrap();
    assert_eq!(a["results"], c["results"]);
    assert_eq!(a["input_digest"], c["input_digest"]);
    assert!(a["input_digest"].as_str().unwrap().starts_with("sha256:"));
}

#[test]
fn input_digest_tracks_file_contents() {
    let dir = TempDir::new().unwrap();
    let digest = |seed: &str| {
        ok(dir.path(), &["generate", "random", "--seed", seed, "--out", "g.json"]);
        ok(dir.path(), &["analyze", "--game", "g.json", "--find-pne", "--json", "r.json"]);
        let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
        r["input_digest"].as_str().unwrap().to_string()
    };
    assert_eq!(digest("1"), digest("1"));
    assert_ne!(digest("1"), digest("2"));
}

#[test]
fn random_generation_is_seeded() {
    let dir = TempDir::new().unwrap();
    let a = ok(dir.path(), &["generate", "random", "--seed", "5"]);
    let b = ok(dir.path(), &["generate", "random", "--seed", "5"]);
    let c = ok(dir.path(), &["generate", "random", "--seed", "6"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(run(d, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(d, &["analyze", "--game", "g.json"]).status.code(), Some(2));
    assert_eq!(run(d, &["bounds", "poa-bound", "--d", "2", "--q", "0.5"]).status.code(), Some(2));
    assert_eq!(run(d, &["--threads", "0", "table"]).status.code(), Some(2));

    let missing = run(d, &["analyze", "--game", "missing.json", "--find-pne"]);
    assert_eq!(missing.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&missing.stderr).lines().count(), 1);

    write(d, "bad.json", "{\"players\": 3}");
    assert_eq!(run(d, &["analyze", "--game", "bad.json", "--find-pne"]).status.code(), Some(1));

    let decreasing = r#"{"players":[{"strategies":[[0]],"aggregation":{"lp":1}}],"resources":[{"costs":[2,1]}]}"#;
    write(d, "dec.json", decreasing);
    let out = run(d, &["analyze", "--game", "dec.json", "--find-pne"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("decreasing cost table"));

    ok(d, &["generate", "thm5", "--p", "1", "--q", "2", "--d", "3", "--out", "g.json"]);
    let out = run(d, &["analyze", "--game", "g.json", "--find-pne", "--budget", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));

    assert_eq!(run(d, &["generate", "thm2", "--p", "3", "--q", "2"]).status.code(), Some(1));
}

#[test]
fn analyze_actions_agree() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["generate", "thm5", "--p", "1", "--q", "inf", "--d", "4", "--out", "g.json"]);
    ok(
        dir.path(),
        &["analyze", "--game", "g.json", "--min-beta", "--certify", "1,0", "--is-pne", "0,0", "--json", "r.json"],
    );
    let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let beta = r["results"]["min_beta"]["beta"].as_f64().unwrap();
    assert!((beta - 2.0).abs() < 1e-9, "{beta}");
    assert_eq!(r["results"]["is_pne"]["pne"], Value::Bool(false));
    assert!(r["results"]["certify"]["beta"].as_f64().unwrap() >= beta);
}

#[test]
fn reduction_from_graph_file() {
    let dir = TempDir::new().unwrap();
    // Triangle: no independent set of size 2.
    write(dir.path(), "tri.json", r#"{"nodes":3,"edges":[[0,1],[1,2],[0,2]]}"#);
    write(dir.path(), "path.json", r#"{"nodes":3,"edges":[[0,1],[1,2]]}"#);
    let threshold = 3f64.powf(0.25);
    let min_beta = |graph: &str| {
        ok(
            dir.path(),
            &["generate", "reduction", "--graph", graph, "--k", "2", "--p", "1", "--q", "2", "--d", "3", "--out", "g.json"],
        );
        ok(dir.path(), &["analyze", "--game", "g.json", "--min-beta", "--json", "r.json"]);
        let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
        r["results"]["min_beta"]["beta"].as_f64().unwrap()
    };
    assert!(min_beta("path.json") < threshold);
    assert!(min_beta("tri.json") >= threshold * (1.0 - 1e-9));

    write(dir.path(), "loop.json", r#"{"nodes":2,"edges":[[0,0]]}"#);
    let out = run(
        dir.path(),
        &["generate", "reduction", "--graph", "loop.json", "--k", "1", "--p", "1", "--q", "2", "--d", "3"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reversal_table_gives_game_without_equilibrium() {
    let dir = TempDir::new().unwrap();
    // f(0,1) > f(1,2) but f(0,0) < f(0,2): the swap 0 -> 2 reverses.
    write(
        dir.path(),
        "f.json",
        r#"{"arity":2,"domain":[0,1,2],"table":{"0,0":0,"0,1":5,"0,2":1,"1,1":6,"1,2":2,"2,2":3}}"#,
    );
    let text = ok(dir.path(), &["classify", "--function", "f.json"]);
    assert!(text.contains("strongly non-monotone"), "{text}");
    ok(dir.path(), &["generate", "thm8", "--function", "f.json", "--out", "g.json"]);
    let text = ok(dir.path(), &["analyze", "--game", "g.json", "--find-pne"]);
    assert!(text.starts_with("0 pure Nash equilibria"));
    assert_eq!(run(dir.path(), &["matroid", "weak-dynamics", "--game", "g.json"]).status.code(), Some(1));

    // A monotone table has no witness.
    write(
        dir.path(),
        "sum.json",
        r#"{"arity":2,"domain":[0,1],"table":{"0,0":0,"0,1":1,"1,1":2}}"#,
    );
    assert_eq!(run(dir.path(), &["generate", "thm8", "--function", "sum.json"]).status.code(), Some(1));
}

#[test]
fn classify_registered_functions() {
    let dir = TempDir::new().unwrap();
    let text = ok(dir.path(), &["classify", "--registered", "max", "--domain", "0,1,2", "--d", "2"]);
    assert!(text.contains("max (d = 2): weakly monotone") || text.contains("max (d = 2): strongly monotone"));
    let text = ok(dir.path(), &["classify", "--registered", "lp:2", "--domain", "1,2,3", "--d", "3"]);
    assert!(text.contains("strongly monotone"));
    assert_eq!(run(dir.path(), &["classify", "--registered", "lp:2"]).status.code(), Some(1));
    assert_eq!(
        run(dir.path(), &["classify", "--registered", "median", "--domain", "1", "--d", "1"]).status.code(),
        Some(1)
    );
}

#[test]
fn matroid_subcommands() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "u.json", r#"{"uniform":{"d":2,"m":4}}"#);
    let text = ok(dir.path(), &["matroid", "validate", "--matroid", "u.json"]);
    assert!(text.contains("rank 2, 4 elements, 6 bases"), "{text}");
    let text = ok(dir.path(), &["matroid", "min-basis", "--matroid", "u.json", "--weights", "4,1,3,2"]);
    assert!(text.contains("minimum basis: [1, 3] (weight 3)"), "{text}");
    assert!(text.contains("holds"));
    assert_eq!(
        run(dir.path(), &["matroid", "min-basis", "--matroid", "u.json", "--weights", "1,2"]).status.code(),
        Some(1)
    );

    write(dir.path(), "bad.json", r#"{"ground":[0,1,2,3],"bases":[[0,1],[2,3]]}"#);
    let out = run(dir.path(), &["matroid", "validate", "--matroid", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));

    // Two players on a uniform rank-1 matroid over two links.
    let game = r#"{"players":[
        {"strategies":[[0],[1]],"aggregation":{"lp":1}},
        {"strategies":[[0],[1]],"aggregation":{"lp":1}}],
        "resources":[{"costs":[1,4]},{"costs":[2,3]}]}"#;
    write(dir.path(), "g.json", game);
    let text = ok(dir.path(), &["matroid", "weak-dynamics", "--game", "g.json", "--start", "0,0"]);
    assert!(text.contains("termination: equilibrium"), "{text}");
    let text = ok(dir.path(), &["analyze", "--game", "g.json", "--find-pne"]);
    assert!(!text.starts_with("0 "));
}

#[test]
fn bounds_values() {
    let dir = TempDir::new().unwrap();
    let text = ok(dir.path(), &["bounds", "poa-bound", "--d", "1", "--q", "3"]);
    assert_eq!(text.trim(), "price of anarchy <= 2.5");
    let text = ok(dir.path(), &["bounds", "smoothness", "--d", "2", "--q", "2"]);
    assert!(text.starts_with("z = 2,"), "{text}");
    let text = ok(dir.path(), &["bounds", "approx-guarantee", "--p", "1", "--q", "inf", "--d", "4"]);
    assert!(text.contains("guarantee d^(1/2 (1/p - 1/q)) = 2\n"), "{text}");
    assert!(text.contains("first approach factor = 8\n"), "{text}");
    assert_eq!(
        run(dir.path(), &["bounds", "approx-guarantee", "--p", "3", "--q", "2", "--d", "4"]).status.code(),
        Some(1)
    );
}

#[test]
fn solvers_certify_within_bounds() {
    let dir = TempDir::new().unwrap();
    for seed in ["1", "2", "3"] {
        ok(dir.path(), &["generate", "random", "--seed", seed, "--p", "1", "--q", "3", "--out", "g.json"]);
        for approach in ["first", "second"] {
            ok(dir.path(), &["solve", approach, "--game", "g.json", "--json", "r.json"]);
            let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
            let s = &r["results"]["solve"];
            assert!(s["beta"].as_f64().unwrap() <= s["bound"].as_f64().unwrap() * (1.0 + 1e-9), "{s}");
        }
    }
}
