use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn quantsym(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quantsym")).arg("--out").arg(out).args(args).output().unwrap()
}

#[test]
fn constants_run_writes_table() {
    let out = scratch("constants");
    let run = quantsym(&out, &["constants", "eps=0.1,0.2"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = std::fs::read_to_string(out.join("constants.csv")).unwrap();
    assert!(csv.starts_with("name,value,inputs,provenance\n"));
    assert!(csv.lines().any(|l| l.starts_with("ellipse_morrey_domain")));
    assert_eq!(csv.lines().filter(|l| l.contains("gradient_bound_m")).count(), 2);
}

#[test]
fn unknown_key_is_a_config_error() {
    let out = scratch("unknown_key");
    let run = quantsym(&out, &["sbt-run", "colour=blue"]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("colour"));
}

#[test]
fn malformed_values_are_config_errors() {
    let out = scratch("malformed");
    for pair in ["eps=0.2,0.1", "grid.h=-1", "p=abc", "noequals"] {
        assert_eq!(quantsym(&out, &["constants", pair]).status.code(), Some(2), "{pair}");
    }
    let missing = quantsym(&out, &["--config", "/nonexistent/run.cfg", "constants"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_pairs() {
    let out = scratch("override");
    let cfg = out.join("run.cfg");
    std::fs::write(&cfg, "# fast run\neps = 0.05, 0.1\ngrid.h = 0.05\n").unwrap();
    let run = quantsym(&out, &["--config", cfg.to_str().unwrap(), "constants", "eps=0.05,0.1,0.15"]);
    assert_eq!(run.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("constants.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.contains("gradient_bound_m")).count(), 3);
}

#[test]
fn sbt_run_then_report() {
    let out = scratch("sbt");
    let pairs = ["grid.h=0.04", "eps=0.05,0.1,0.15,0.2", "grid.refinements=0"];
    let run = quantsym(&out, &[&["sbt-run"][..], &pairs].concat());
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stdout));
    let records = std::fs::read_to_string(out.join("sbt_records.csv")).unwrap();
    assert_eq!(records.lines().count(), 5);
    let report = quantsym(&out, &["report"]);
    assert_eq!(report.status.code(), Some(0));
    assert!(out.join("report.csv").exists());
}
