use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const RUNNING: &str = "0 0 1 0\n1 0 0 1\n0 0 0 1\n1 2 0 0\n";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_endperiodic"));
    c.env_remove("ENDPERIODIC_OUT_DIR");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("running.txt"), RUNNING).unwrap();
    fs::write(dir.path().join("two.txt"), "2\n").unwrap();
    dir
}

#[test]
fn running_example_constructs_and_verifies() {
    let dir = workspace();
    let o = run(dir.path(), &["construct", "--matrix", "running.txt", "--corner-selection", "--verify", "--out", "out"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("lambda: 1.785"), "{text}");
    assert!(text.contains("verification: pass"));
    assert!(dir.path().join("out/record.json").exists());
    assert!(dir.path().join("out/verification.json").exists());
}

#[test]
fn integer_case_with_figure() {
    let dir = workspace();
    let o = run(dir.path(), &["construct", "--integer", "3", "--fig", "complex", "--out", "d3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("stretch factor (exact): 3"));
    let svg = fs::read_to_string(dir.path().join("d3/complex.svg")).unwrap();
    assert!(svg.contains("<svg"));
}

#[test]
fn lift_reports_square_root_of_two() {
    let dir = workspace();
    let o = run(dir.path(), &["construct", "--matrix", "two.txt", "--lift", "2", "--verify", "--out", "lift"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("stretch factor: 1.414213562373"));
}

#[test]
fn output_directory_from_environment() {
    let dir = workspace();
    let target = dir.path().join("from-env");
    let o = bin()
        .current_dir(dir.path())
        .env("ENDPERIODIC_OUT_DIR", &target)
        .args(["construct", "--integer", "2"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(target.join("record.json").exists());
}

#[test]
fn records_are_byte_identical_without_timestamp() {
    let dir = workspace();
    for out in ["a", "b"] {
        let o = run(dir.path(), &["construct", "--matrix", "running.txt", "--no-timestamp", "--out", out]);
        assert_eq!(o.status.code(), Some(0));
    }
    let a = fs::read(dir.path().join("a/record.json")).unwrap();
    let b = fs::read(dir.path().join("b/record.json")).unwrap();
    assert!(a == b);
}

#[test]
fn timestamped_records_differ_only_in_created_at() {
    let dir = workspace();
    for out in ["a", "b"] {
        run(dir.path(), &["construct", "--integer", "2", "--out", out]);
    }
    let load = |p: &str| -> serde_json::Value {
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join(p)).unwrap()).unwrap();
        assert!(v["created_at"].is_string());
        v["created_at"] = serde_json::Value::Null;
        v
    };
    assert_eq!(load("a/record.json"), load("b/record.json"));
}

fn stored_record(dir: &Path) -> serde_json::Value {
    let o = run(dir, &["construct", "--matrix", "running.txt", "--out", "rec"]);
    assert_eq!(o.status.code(), Some(0));
    serde_json::from_str(&fs::read_to_string(dir.join("rec/record.json")).unwrap()).unwrap()
}

#[test]
fn verify_passes_on_a_fresh_record() {
    let dir = workspace();
    stored_record(dir.path());
    let o = run(dir.path(), &["verify", "rec/record.json", "--report", "rec/report.json"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("rec/report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
}

#[test]
fn verify_names_the_mutated_invariant() {
    let dir = workspace();
    let mut r = stored_record(dir.path());
    r["incidence"]["incidence"][2][0] = 1.into();
    fs::write(dir.path().join("bad.json"), r.to_string()).unwrap();
    let o = run(dir.path(), &["verify", "bad.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("verification:stretch-factor"), "{}", stdout(&o));
}

#[test]
fn verify_rejects_truncated_depth() {
    let dir = workspace();
    let mut r = stored_record(dir.path());
    r["schema"]["depth_cap"] = 3.into();
    fs::write(dir.path().join("short.json"), r.to_string()).unwrap();
    let o = run(dir.path(), &["verify", "short.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("precondition"), "{}", stdout(&o));
}

#[test]
fn verify_rejects_stale_version() {
    let dir = workspace();
    let mut r = stored_record(dir.path());
    r["schema_version"] = "endperiodic-record/0".into();
    fs::write(dir.path().join("old.json"), r.to_string()).unwrap();
    let o = run(dir.path(), &["verify", "old.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("endperiodic-record/0"), "{}", stderr(&o));
}

#[test]
fn render_writes_the_requested_figure() {
    let dir = workspace();
    stored_record(dir.path());
    let o = run(dir.path(), &["render", "rec/record.json", "--fig", "digraphs", "--out", "figs/d.svg"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = fs::read_to_string(dir.path().join("figs/d.svg")).unwrap();
    assert_eq!(svg.matches("class=\"panel\"").count(), 4);
}

#[test]
fn spectral_prints_exact_data() {
    let dir = workspace();
    let o = run(dir.path(), &["spectral", "--matrix", "running.txt"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["char_poly"], "x^4 - 2x^2 - x - 2");
    assert_eq!(v["determinant"], "-2");
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = workspace();
    fs::write(dir.path().join("reducible.txt"), "1 1\n0 1\n").unwrap();
    fs::write(dir.path().join("ragged.txt"), "1 1\n0\n").unwrap();
    for args in [
        vec!["construct"],
        vec!["construct", "--integer", "3", "--matrix", "running.txt"],
        vec!["construct", "--matrix", "missing.txt"],
        vec!["construct", "--matrix", "ragged.txt"],
        vec!["construct", "--matrix", "reducible.txt"],
        vec!["construct", "--integer", "3", "--fig", "raster"],
        vec!["frobnicate"],
    ] {
        let o = run(dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}
