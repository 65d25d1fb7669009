use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const TRIANGLE: &str = r#"{"kind":"ec","n":3,
"edges":[{"u":0,"v":1,"cost":1},{"u":1,"v":2,"cost":1},{"u":0,"v":2,"cost":1}],
"requirements":[{"u":0,"v":1,"r":1},{"u":1,"v":2,"r":1},{"u":0,"v":2,"r":1}]}"#;

fn sndp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sndp"))
        .args(args)
        .output()
        .unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

fn read_json(p: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["ec", "elem", "hyper"] {
        let a = path(dir.path(), "a.json");
        let b = path(dir.path(), "b.json");
        let args = [
            "gen", "--kind", kind, "--n", "7", "--m", "10", "--rmax", "2", "--seed", "11",
        ];
        assert!(sndp(&[&args[..], &["--out", &a]].concat()).status.success());
        assert!(sndp(&[&args[..], &["--out", &b]].concat()).status.success());
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }
}

#[test]
fn triangle_report_has_ratio_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = path(dir.path(), "tri.json");
    let report = path(dir.path(), "report.json");
    fs::write(&input, TRIANGLE).unwrap();
    let out = sndp(&[
        "solve",
        "--input",
        &input,
        "--check-invariants",
        "--report",
        &report,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let sol: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(sol["cost"], 3);
    let r = read_json(&report);
    assert_eq!(r["ratio"], "2");
    assert_eq!(r["lp_lower_bound"], "3/2");
    for (name, verdict) in r["checks"].as_object().unwrap() {
        assert_eq!(verdict, "pass", "{name}");
    }
}

#[test]
fn tampered_solution_fails_verify() {
    let dir = tempfile::tempdir().unwrap();
    let input = path(dir.path(), "tri.json");
    let good = path(dir.path(), "good.json");
    let bad = path(dir.path(), "bad.json");
    fs::write(&input, TRIANGLE).unwrap();
    assert!(sndp(&["solve", "--input", &input, "--out", &good])
        .status
        .success());
    assert!(sndp(&["verify", "--input", &input, "--solution", &good])
        .status
        .success());
    let mut sol = read_json(&good);
    sol["edges"] = serde_json::json!([0]);
    sol["cost"] = serde_json::json!(1);
    fs::write(&bad, sol.to_string()).unwrap();
    let out = sndp(&["verify", "--input", &input, "--solution", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("feasibility"));
    let body: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(body["checks"]["feasibility"], false);
}

#[test]
fn usage_and_schema_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(sndp(&["frobnicate"]).status.code(), Some(2));
    let input = path(dir.path(), "bad.json");
    fs::write(&input, r#"{"kind":"ec","n":3,"edges":[]}"#).unwrap();
    assert_eq!(sndp(&["solve", "--input", &input]).status.code(), Some(2));
}

#[test]
fn infeasible_instance_exits_one_with_dump() {
    let dir = tempfile::tempdir().unwrap();
    let input = path(dir.path(), "inf.json");
    fs::write(
        &input,
        r#"{"kind":"ec","n":3,"edges":[{"u":0,"v":1,"cost":1}],"requirements":[{"u":0,"v":2,"r":1}]}"#,
    )
    .unwrap();
    let out = sndp(&["solve", "--input", &input]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dump"), "{err}");
    assert!(dir.path().join("inf.dump.json").exists());
}

#[test]
fn reductions_chain_and_solve() {
    let dir = tempfile::tempdir().unwrap();
    let h = path(dir.path(), "h.json");
    let e = path(dir.path(), "e.json");
    let ew = path(dir.path(), "ew.json");
    let back = path(dir.path(), "back.json");
    assert!(sndp(&[
        "gen", "--kind", "hyper", "--n", "6", "--m", "7", "--d", "3", "--seed", "3", "--out", &h
    ])
    .status
    .success());
    assert!(sndp(&[
        "reduce",
        "--input",
        &h,
        "--to",
        "hyper-to-nw-elem",
        "--out",
        &e
    ])
    .status
    .success());
    assert!(dir.path().join("e.map.json").exists());
    assert!(sndp(&[
        "reduce",
        "--input",
        &e,
        "--to",
        "nw-elem-to-ew-elem",
        "--out",
        &ew
    ])
    .status
    .success());
    assert!(sndp(&[
        "reduce",
        "--input",
        &ew,
        "--to",
        "elem-to-hyper",
        "--out",
        &back
    ])
    .status
    .success());
    for f in [&h, &e, &ew, &back] {
        assert!(sndp(&["verify", "--input", f]).status.success(), "{f}");
    }
    assert_eq!(
        sndp(&[
            "reduce",
            "--input",
            &h,
            "--to",
            "elem-to-hyper",
            "--out",
            &back
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn bench_and_explore_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir(&corpus).unwrap();
    for (i, kind) in ["ec", "elem", "hyper"].iter().enumerate() {
        let out = path(&corpus, &format!("{kind}.json"));
        let seed = (i + 1).to_string();
        assert!(sndp(&[
            "gen", "--kind", kind, "--n", "6", "--m", "8", "--seed", &seed, "--out", &out
        ])
        .status
        .success());
    }
    let rows = path(dir.path(), "rows.json");
    let out = sndp(&["bench", "--dir", corpus.to_str().unwrap(), "--out", &rows]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert_eq!(read_json(&rows).as_array().unwrap().len(), 3);

    let ex = path(dir.path(), "explore");
    assert!(sndp(&[
        "explore",
        "--d",
        "2",
        "--trials",
        "10",
        "--seed",
        "4",
        "--out-dir",
        &ex
    ])
    .status
    .success());
    let summary = read_json(&format!("{ex}/summary.json"));
    assert_eq!(summary["d"], 2);
    assert_eq!(summary["candidate_files"].as_array().unwrap().len(), 0);
}
