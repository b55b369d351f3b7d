use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn modae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modae"))
        .args(args)
        .env_remove("MODAE_WORKERS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = modae(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn oracle_prints_the_known_front() {
    let text = ok(&["oracle", "--passengers", "3", "--mode", "risk"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v, serde_json::json!([[8, 30], [16, 20], [24, 10]]));
    assert_eq!(ok(&["zeno", "oracle", "--passengers", "3", "--mode", "risk"]), text);
}

#[test]
fn generated_files_solve_like_the_builtin_instance() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    ok(&["generate", "--passengers", "2", "--out-dir", dir]);
    let domain = tmp.path().join("domain.pddl");
    let problem = tmp.path().join("problem.pddl");
    let from_files = ok(&[
        "solve",
        "--domain",
        domain.to_str().unwrap(),
        "--problem",
        problem.to_str().unwrap(),
        "--budget",
        "50000",
    ]);
    let builtin = ok(&["plan", "solve", "--passengers", "2", "--budget", "50000"]);
    assert_eq!(from_files, builtin);
    let v: serde_json::Value = serde_json::from_str(&builtin).unwrap();
    assert_eq!(v["solved"], true);
    assert!(!v["plan"].as_array().unwrap().is_empty());
}

#[test]
fn evolution_is_reproducible_across_workers_and_from_its_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |out: &Path, workers: &str| {
        ok(&[
            "evolve",
            "--workers",
            workers,
            "--mode",
            "risk",
            "--budget",
            "20000",
            "--per-call",
            "2000",
            "--repetitions",
            "3",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ])
    };
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run(&a, "1");
    run(&b, "3");
    assert_eq!(files(&a), files(&b));

    let c = tmp.path().join("c");
    let manifest = a.join("manifest.json");
    ok(&["evolve", "--workers", "2", "--manifest", manifest.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(files(&c), files(&a));

    let front = tmp.path().join("front.json");
    ok(&["oracle", "--passengers", "3", "--mode", "risk", "--out", front.to_str().unwrap()]);
    let report = tmp.path().join("report");
    ok(&["report", "--front", front.to_str().unwrap(), "--out", report.to_str().unwrap(), a.to_str().unwrap()]);
    for name in ["hv.csv", "hv_mean.csv", "hitting.csv", "final.csv", "summary.json"] {
        assert!(report.join(name).is_file(), "{name}");
    }
    let hitting = ok(&["assess", "hitting", "--front", front.to_str().unwrap(), a.to_str().unwrap()]);
    assert!(serde_json::from_str::<serde_json::Value>(&hitting).is_ok());
}

#[test]
fn hv_gap_of_the_front_itself_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let front = tmp.path().join("front.json");
    ok(&["oracle", "--passengers", "3", "--out", front.to_str().unwrap()]);
    let v: serde_json::Value =
        serde_json::from_str(&ok(&["assess", "hv", "--front", front.to_str().unwrap(), "--points", front.to_str().unwrap()])).unwrap();
    assert_eq!(v["hv_gap"], 0.0);
}

#[test]
fn bad_invocations_fail() {
    assert!(!modae(&["evolve", "--budget", "100"]).status.success());
    assert!(!modae(&["oracle", "--variant", "spiral"]).status.success());
    assert!(!modae(&["solve", "--budget", "0"]).status.success());
    assert!(!modae(&["evolve", "--seed", "1", "--alpha", "2", "--out", "/nonexistent/x"]).status.success());
}
