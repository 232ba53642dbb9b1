//! Command-line behaviour: exit codes, presets and written files.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use optomech::io::output::summary_jump_powers;
use optomech::io::parse_config;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optomech")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_config(dir: &TempDir, text: &str) -> String {
    let path = dir.path().join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn csv_files(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    v.sort();
    v
}

const POINT: &str = "system = \"hill2012\"\n[drive]\ndelta1_hz = 4e9\ndelta2_hz = 4e9\npower_l_w = 2e-6\npower_r_w = 1e-7\n";

#[test]
fn preset_succeeds_and_writes_records() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("fig2b.csv");
    let o = run(&["preset", "fig2b", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!csv_files(dir.path()).is_empty());
}

#[test]
fn every_preset_emits_records() {
    for name in ["fig2a", "fig2b", "fig3", "fig4a", "fig4b", "fig5a", "fig5b"] {
        let dir = TempDir::new().unwrap();
        let out = dir.path().join(format!("{name}.csv"));
        let o = run(&["preset", name, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let files = csv_files(dir.path());
        assert!(!files.is_empty(), "{name}");
        for f in files {
            assert!(!csv_rows(&f).is_empty(), "{}", f.display());
        }
    }
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "system = \"hill2012\"\n[overrides]\nkapa1_hz = 5e8\n");
    let o = run(&["--config", &cfg, "solve"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("kapa1_hz"));
}

#[test]
fn sweep_without_stable_branch_fails_at_runtime() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        &format!("{POINT}[sweep]\naxis = \"power_l\"\nstart_w = 1e-6\nstop_w = 1e-3\npoints = 20\ndirection = \"up\"\n"),
    );
    let o = run(&["--config", &cfg, "--rule", "jacobian", "sweep"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let o = run(&["preset", "fig2b", "--out", "/nonexistent/dir/x.csv"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn left_coupling_off_freezes_right_cavity() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "system = \"hill2012\"\n[overrides]\ng1_hz = 0.0\n");
    let out = dir.path().join("fig3.csv");
    let o = run(&["--config", &cfg, "preset", "fig3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in csv_files(dir.path()) {
        let rows = csv_rows(&f);
        assert!(rows.len() > 1);
        assert!(rows.iter().all(|r| r[4] == rows[0][4]), "{}", f.display());
    }
}

#[test]
fn flux_power_sweep_summary_orders_jumps() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("fig2b.csv");
    let o = run(&["--amplitude", "flux", "preset", "fig2b", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summaries: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_str().unwrap().ends_with(".summary.txt"))
        .collect();
    assert!(!summaries.is_empty());
    let mut found = false;
    for s in summaries {
        if let (Some(up), Some(down)) = summary_jump_powers(&fs::read_to_string(&s).unwrap()) {
            assert!(up >= down, "{up:e} < {down:e}");
            found = true;
        }
    }
    assert!(found);
}

#[test]
fn single_point_solve_writes_one_record_per_branch() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, POINT);
    let out = dir.path().join("point.csv");
    let o = run(&["--config", &cfg, "solve", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("axis,branch,q_s,n_p1,n_p2"));
}

#[test]
fn json_lines_format() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, POINT);
    let out = dir.path().join("point.jsonl");
    let o = run(&["--config", &cfg, "--format", "jsonlines", "solve", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("q_s").is_some(), "{line}");
    }
}

#[test]
fn config_document_round_trips() {
    let text = "system = \"hill2012\"\nsign = \"minus\"\namplitude = \"flux\"\n\
        [overrides]\ng2_hz = 1e6\n\
        [drive]\ndelta1_hz = 4e9\ndelta2_hz = -4e9\npower_l_w = 2e-6\npower_r_w = 1e-7\n\
        [sweep]\naxis = \"delta1\"\nstart_hz = 0.0\nstop_hz = 8e9\npoints = 50\ndirection = \"up\"\n";
    let a = parse_config(text).unwrap();
    let doc = a.to_document();
    let b = parse_config(&doc).unwrap();
    assert_eq!(doc, b.to_document());
    let (pa, pb) = (a.system_params().unwrap(), b.system_params().unwrap());
    assert_eq!(format!("{pa:?}"), format!("{pb:?}"));
    assert_eq!(format!("{:?}", a.drive_point(&pa).unwrap()), format!("{:?}", b.drive_point(&pb).unwrap()));
    assert_eq!(format!("{:?}", a.sweep_spec(&pa).unwrap()), format!("{:?}", b.sweep_spec(&pb).unwrap()));
}
