use std::path::Path;
use std::process::{Command, Output};

use cq_problems::{expected_answers, GradeResult, ProblemInstance};

fn cq(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cq"));
    cmd.args(args).env_remove("CQ_STORAGE").env_remove("CQ_TOKEN_SECRET");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("cq runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn gen_is_deterministic() {
    let a = cq(&["gen", "--template", "appliances.l1.t1", "--seed", "7"], &[]);
    let b = cq(&["gen", "--template", "appliances.l1.t1", "--seed", "7"], &[]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let instance: ProblemInstance = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(instance.seed, 7);
    let view = cq(&["gen", "--template", "appliances.l1.t1", "--seed", "7", "--view"], &[]);
    assert!(!text(&view.stdout).contains("\"expected\""));
}

#[test]
fn validate_accepts_shipped_data() {
    let out = cq(&["validate"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert_eq!(text(&out.stdout).trim(), "ok: 4 campaigns, 101 templates, 50/50 topics covered");
    let repo_data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let out = cq(&["validate", "--data", repo_data.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
}

#[test]
fn validate_names_the_broken_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = cq(&["validate", "--data", dir.path().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("taxonomy.json"), "{}", text(&out.stderr));
}

#[test]
fn grade_round_trip_and_arity() {
    let dir = tempfile::tempdir().unwrap();
    let gen = cq(&["gen", "--template", "mars.l3.t1", "--seed", "3"], &[]);
    let instance_path = dir.path().join("instance.json");
    std::fs::write(&instance_path, &gen.stdout).unwrap();
    let instance: ProblemInstance = serde_json::from_slice(&gen.stdout).unwrap();
    let answers = expected_answers(&instance);
    let answers_path = dir.path().join("answers.json");
    std::fs::write(&answers_path, serde_json::to_string(&answers).unwrap()).unwrap();
    let out = cq(&["grade", "--instance", instance_path.to_str().unwrap(), "--answers", answers_path.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let result: GradeResult = serde_json::from_slice(&out.stdout).unwrap();
    assert!(result.solved);

    std::fs::write(&answers_path, serde_json::to_string(&answers[..answers.len() - 1]).unwrap()).unwrap();
    let out = cq(&["grade", "--instance", instance_path.to_str().unwrap(), "--answers", answers_path.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("ArityMismatch"), "{}", text(&out.stderr));
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    for args in [&["frobnicate"][..], &["gen"], &["gen", "--template", "x", "--all"], &["gen", "--all", "--count", "0"], &["grade"]] {
        let out = cq(args, &[]);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(cq(&["--help"], &[]).status.code(), Some(0));
    assert_eq!(cq(&[], &[]).status.code(), Some(2));
}

#[test]
fn simulate_finishes_a_campaign() {
    let out = cq(&["simulate", "--campaign", "power-plant", "--seed", "5"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["completed"], true);
    assert_eq!(report["level"], 5);
    assert_eq!(cq(&["simulate", "--campaign", "venus"], &[]).status.code(), Some(1));
}

#[test]
fn simulate_runs_a_script() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("script.json");
    std::fs::write(&script, r#"[{"action":"solve","pool_index":0,"seed":1},{"action":"advance"}]"#).unwrap();
    let out = cq(&["simulate", "--campaign", "mars", "--script", script.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["level"], 1);
    assert_eq!(report["events"], 1);
}

#[test]
fn roster_then_gradebook() {
    let dir = tempfile::tempdir().unwrap();
    let storage = dir.path().join("store");
    let config = dir.path().join("cq.json");
    std::fs::write(&config, format!(r#"{{"storage": {:?}, "token_secret": "from-the-file-0123"}}"#, storage.display().to_string())).unwrap();
    let roster = dir.path().join("roster.csv");
    std::fs::write(&roster, "player,campaign\nana,appliances\nbo,appliances\ncy,mars\n").unwrap();
    let cfg = config.to_str().unwrap();
    let out = cq(&["roster", "--config", cfg, roster.to_str().unwrap(), "--instructor", "teacher"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let lines: Vec<String> = text(&out.stdout).lines().map(String::from).collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("teacher,,instructor,"));
    // Re-importing the same roster is harmless.
    assert_eq!(cq(&["roster", "--config", cfg, roster.to_str().unwrap()], &[]).status.code(), Some(0));

    let out = cq(&["gradebook", "--config", cfg, "--campaign", "appliances", "--today", "2027-03-01"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let csv = text(&out.stdout);
    assert_eq!(csv.lines().count(), 3, "{csv}");
    assert!(csv.lines().nth(1).unwrap().starts_with("ana,appliances,1,false,0,0,0,0"));

    // The environment wins over the file.
    let elsewhere = dir.path().join("other");
    let out = cq(&["gradebook", "--config", cfg, "--campaign", "appliances"], &[("CQ_STORAGE", elsewhere.to_str().unwrap())]);
    assert_eq!(text(&out.stdout).lines().count(), 1);
    let out = cq(&["gradebook", "--campaign", "appliances"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("Config"));
}
