use std::path::Path;
use std::process::{Command, Output};

fn eva(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eva"))
        .args(args)
        .current_dir(dir)
        .env_remove("EVA_WORKERS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn synth_then_fit_from_store_and_csv_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for out in ["cells.eva", "cells.csv"] {
        let o = eva(&["synth", "--spec", "precip-homogeneous", "--cells", "3", "--years", "60", "--seed", "4", "--out", out], d);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let from_store = eva(&["fit-gev", "--store", "cells.eva", "--period", "10,50"], d);
    let from_csv = eva(&["fit-gev", "--csv", "cells.csv", "--period", "10,50"], d);
    assert!(from_store.status.success() && from_csv.status.success());
    let text = stdout(&from_store);
    assert_eq!(text, stdout(&from_csv));
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("cell,method,tail_probability"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn pot_json_output_parses() {
    let dir = tempfile::tempdir().unwrap();
    let o = eva(
        &["fit-pot", "--synthetic", "precip-homogeneous", "--cells", "2", "--years", "80", "--tail-probability", "1e-2", "--json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = eva_core::report::rows_from_json(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.converged && r.tail_probability == Some(1e-2)));
}

#[test]
fn desk_scale_report_writes_all_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("run.toml"),
        "periods = [100.0, 1000.0]\noutput_dir = \"report\"\nseed = 2\n\n[input]\nsynthetic = \"precip-mixture\"\ncells = 20\nyears = 1000\n",
    )
    .unwrap();
    let o = eva(&["report", "--config", "run.toml", "--workers", "2"], d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(files.len(), 6);
    for f in &files {
        // relative paths are resolved against the config file's directory
        let path = d.join(f);
        assert!(path.starts_with(d.join("report")), "{f}");
        assert!(std::fs::metadata(&path).unwrap().len() > 0);
    }
    let rows = eva_core::report::rows_from_json(&std::fs::read_to_string(d.join("report/report.json")).unwrap()).unwrap();
    let cells: std::collections::BTreeSet<_> = rows.iter().map(|r| r.cell.clone()).collect();
    assert_eq!(cells.len(), 20);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(eva(&["--help"], d).status.code(), Some(0));
    assert_eq!(eva(&["--version"], d).status.code(), Some(0));
    assert_eq!(eva(&["fit-gev", "--bogus"], d).status.code(), Some(1));
    assert_eq!(eva(&["fit-gev"], d).status.code(), Some(1), "no input configured");
    assert_eq!(eva(&["fit-gev", "--synthetic", "no-such-preset"], d).status.code(), Some(1));
    assert_eq!(eva(&["fit-gev", "--store", "missing.eva"], d).status.code(), Some(2));
    std::fs::write(d.join("junk.eva"), b"not a store").unwrap();
    let o = eva(&["fit-gev", "--store", "junk.eva"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("magic"));
}

#[test]
fn print_spec_roundtrips_through_a_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = eva(&["synth", "--spec", "precip-mixture", "--print-spec", "--out", "unused"], d);
    assert!(o.status.success());
    std::fs::write(d.join("spec.toml"), stdout(&o)).unwrap();
    let a = eva(&["fit-gev", "--synthetic", "precip-mixture", "--years", "50"], d);
    let b = eva(&["fit-gev", "--synthetic", "spec.toml", "--years", "50"], d);
    assert!(a.status.success() && b.status.success());
    assert_eq!(stdout(&a), stdout(&b));
}
