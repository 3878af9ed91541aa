//! End-to-end tests of the `suspan` binary: every subcommand, both output
//! formats, the documented exit codes, and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

/// One higher-priority task (C=2, T=D=4) plus a two-segment suspending
/// task (segments 2+2, suspension 8, D=T=40). Exact worst case is 16,
/// the per-window model without bounds reaches 20.
const TWO_WINDOW: &str = r#"{
  "hp_tasks": [{"id": 1, "C": "2", "T": "4", "D": "4"}],
  "ss_task": {"C": ["2", "2"], "S": ["8"], "D": "40", "T": "40"}
}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_suspan"))
}

fn write_file(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json_of(out: &Output) -> Value {
    let doc: Value = serde_json::from_str(&stdout_of(out)).expect("stdout is a JSON document");
    assert_eq!(doc["schema"], 1, "every JSON report is versioned");
    doc
}

#[test]
fn exact_reports_the_two_window_worst_case() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = write_file(dir.path(), "tasks.json", TWO_WINDOW);
    let out = bin().arg("exact").arg(&tasks).args(["--output", "json"]).output().unwrap();
    let v = json_of(&out);
    assert_eq!(v["verdict"], "schedulable");
    assert_eq!(v["response"], "16");
    assert_eq!(v["exact"], true);
    assert_eq!(v["witness"]["suspensions"][0], "8");
    assert_eq!(v["witness"]["hp_releases"][0]["releases"].as_array().unwrap().len(), 2);
}

#[test]
fn exact_flags_do_not_change_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = write_file(dir.path(), "tasks.json", TWO_WINDOW);
    let out = bin()
        .arg("exact")
        .arg(&tasks)
        .args(["--no-prune", "--grid", "1/2", "--cap", "100000", "--output", "json"])
        .output()
        .unwrap();
    let v = json_of(&out);
    assert_eq!(v["response"], "16");
}

#[test]
fn rta_reports_the_ordinary_task() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = write_file(dir.path(), "tasks.json", TWO_WINDOW);
    let out = bin().arg("rta").arg(&tasks).args(["--output", "json"]).output().unwrap();
    let v = json_of(&out);
    assert_eq!(v["tasks"][0]["id"], 1);
    assert_eq!(v["tasks"][0]["response"], "2");
    assert_eq!(v["tasks"][0]["verdict"], "ok");
    assert_eq!(v["all_ordinary_schedulable"], true);

    let text = stdout_of(&bin().arg("rta").arg(&tasks).output().unwrap());
    assert!(text.contains("all schedulable"));
}

#[test]
fn milp_solves_the_unbounded_variant_to_twenty() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = write_file(dir.path(), "tasks.json", TWO_WINDOW);
    let out = bin()
        .arg("milp")
        .arg(&tasks)
        .args(["--variant", "no-bounds", "--output", "json"])
        .output()
        .unwrap();
    let v = json_of(&out);
    assert_eq!(v["variant"], "no-bounds");
    assert_eq!(v["objective"], "20");
    assert_eq!(v["status"], "optimal");
    assert_eq!(v["best"]["R"][0], "6");
}

#[test]
fn milp_checks_a_hand_written_assignment() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = write_file(dir.path(), "tasks.json", TWO_WINDOW);
    let assign = write_file(
        dir.path(),
        "assign.json",
        r#"{"N": [{"id": 1, "counts": [0, 0]}],
            "O": [{"id": 1, "offsets": ["0", "0"]}],
            "R": ["2", "2"]}"#,
    );
    let out = bin()
        .arg("milp")
        .arg(&tasks)
        .arg("--check")
        .arg(&assign)
        .args(["--output", "json"])
        .output()
        .unwrap();
    let v = json_of(&out);
    assert_eq!(v["feasible"], true);
    assert_eq!(v["objective"], "12");

    // an infeasible point still exits 0; the verdict lives in the report
    let bad = write_file(
        dir.path(),
        "bad_assign.json",
        r#"{"N": [{"id": 1, "counts": [0, 0]}],
            "O": [{"id": 1, "offsets": ["0", "0"]}],
            "R": ["1", "2"]}"#,
    );
    let out = bin()
        .arg("milp")
        .arg(&tasks)
        .arg("--check")
        .arg(&bad)
        .args(["--output", "json"])
        .output()
        .unwrap();
    let v = json_of(&out);
    assert_eq!(v["feasible"], false);
}

#[test]
fn milp_exports_an_lp_file() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = write_file(dir.path(), "tasks.json", TWO_WINDOW);
    let lp_path = dir.path().join("model.lp");
    let out = bin().arg("milp").arg(&tasks).arg("--export-lp").arg(&lp_path).output().unwrap();
    stdout_of(&out);
    let lp = std::fs::read_to_string(&lp_path).unwrap();
    assert!(lp.starts_with("\\ response-time upper-bound model"));
    assert!(lp.contains("Maximize"));
    assert!(lp.contains("Subject To"));
    assert!(lp.contains("Generals"));
    assert!(lp.contains("End"));
}

#[test]
fn reduce_emits_a_task_system_other_subcommands_can_load() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["reduce", "--M", "3", "--V", "7", "--values", "2,2,3,2,2,3,2,2,3"])
        .output()
        .unwrap();
    let tasks = write_file(dir.path(), "red.json", &stdout_of(&out));

    // a yes-instance misses its deadline once encoded
    let out = bin().arg("exact").arg(&tasks).args(["--output", "json"]).output().unwrap();
    let v = json_of(&out);
    assert_eq!(v["verdict"], "deadline-miss");

    // --out with a .toml extension round-trips through the TOML loader
    let toml_path = dir.path().join("red.toml");
    let out = bin()
        .args(["reduce", "--M", "3", "--V", "7", "--values", "2,2,3,2,2,3,2,2,3", "--out"])
        .arg(&toml_path)
        .output()
        .unwrap();
    stdout_of(&out);
    let out = bin().arg("rta").arg(&toml_path).args(["--output", "json"]).output().unwrap();
    let v = json_of(&out);
    assert_eq!(v["tasks"].as_array().unwrap().len(), 10);
    assert_eq!(v["all_ordinary_schedulable"], true);
}

#[test]
fn verify_theorem1_agrees_on_planted_instances() {
    let out = bin()
        .args(["verify-theorem1", "--plant", "yes", "--M", "3", "--V", "7", "--seed", "1"])
        .output()
        .unwrap();
    let text = stdout_of(&out);
    assert!(text.contains("partition yes"));
    assert!(text.contains("all verdicts agree"));

    let out = bin()
        .args([
            "verify-theorem1",
            "--plant",
            "no",
            "--M",
            "3",
            "--V",
            "7",
            "--count",
            "3",
            "--threads",
            "2",
            "--seed",
            "5",
            "--output",
            "json",
        ])
        .output()
        .unwrap();
    let v = json_of(&out);
    let items = v["instances"].as_array().unwrap();
    assert_eq!(items.len(), 3);
    for item in items {
        assert_eq!(item["has_partition"], false);
        assert_eq!(item["exhaustive_miss"], false);
        assert_eq!(item["constrained_miss"], false);
        assert_eq!(item["implicit_miss"], false);
    }
    assert_eq!(v["agree"], true);
}

#[test]
fn gap_reports_the_known_ratio_point() {
    let out = bin().args(["gap", "--q", "2", "--m", "2", "--output", "json"]).output().unwrap();
    let v = json_of(&out);
    let r = &v["reports"][0];
    assert_eq!(r["exact"], "67");
    assert_eq!(r["milp_lb"], "94");
    assert_eq!(r["ratio"], "94/67");
    assert_eq!(r["threshold"], "4/3");
    assert_eq!(r["full_model_feasible"], true);
}

#[test]
fn gap_sweep_covers_the_requested_range() {
    let out = bin().args(["gap", "--sweep", "m=2..4", "--output", "json"]).output().unwrap();
    let v = json_of(&out);
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 3);
    for (i, r) in reports.iter().enumerate() {
        assert_eq!(r["m"], (i + 2) as u64);
        assert_eq!(r["q"], (i + 2) as u64, "q defaults to m in a sweep");
    }

    let text = stdout_of(&bin().args(["gap", "--sweep", "m=2..4"]).output().unwrap());
    assert_eq!(text.lines().count(), 4, "header plus one row per family");
}

#[test]
fn sim_prints_the_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = write_file(dir.path(), "tasks.json", TWO_WINDOW);
    let pattern =
        write_file(dir.path(), "pattern.json", r#"{"hp_releases": [], "suspensions": ["8"]}"#);
    let out = bin().arg("sim").arg(&tasks).arg("--pattern").arg(&pattern).output().unwrap();
    let text = stdout_of(&out);
    assert!(text.starts_with("time\tevent\ttask\tsegment\tinfo\n"));
    assert!(text.ends_with("# response\t12\n"));

    let out = bin()
        .arg("sim")
        .arg(&tasks)
        .arg("--pattern")
        .arg(&pattern)
        .args(["--output", "json"])
        .output()
        .unwrap();
    let v = json_of(&out);
    assert_eq!(v["outcome"]["finished"]["response"], "12");
}

#[test]
fn analyze_combines_every_report() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = write_file(dir.path(), "tasks.json", TWO_WINDOW);
    let out = bin().arg("analyze").arg(&tasks).args(["--output", "json"]).output().unwrap();
    let v = json_of(&out);
    assert_eq!(v["tasks"][0]["response"], "2");
    assert_eq!(v["suspending"]["verdict"], "schedulable");
    assert_eq!(v["suspending"]["response"], "16");
    assert_eq!(v["split_bound"], "16");
    assert_eq!(v["joint_bound"], "24");
}

#[test]
fn malformed_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_file(dir.path(), "bad.json", r#"{"bogus": true}"#);
    let out = bin().arg("exact").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let missing = dir.path().join("does_not_exist.json");
    let out = bin().arg("rta").arg(&missing).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let run = || {
        let out = bin()
            .args([
                "verify-theorem1",
                "--plant",
                "yes",
                "--M",
                "3",
                "--V",
                "10",
                "--seed",
                "42",
                "--output",
                "json",
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn help_documents_every_subcommand() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["analyze", "sim", "rta", "exact", "milp", "reduce", "verify-theorem1", "gap"] {
        assert!(text.contains(sub), "--help must mention {sub}");
    }
    for flag in ["--output", "--seed", "--threads"] {
        assert!(text.contains(flag), "--help must mention {flag}");
    }
}
