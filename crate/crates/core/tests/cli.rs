//! The `flatnormal` binary: subcommands, files written and exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flatnormal"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

#[test]
fn catalog_list_names_every_entry() {
    let o = run(&["catalog", "list"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    for name in ["pseudosphere", "dini", "clifford_torus_s3", "sphere", "veronese", "sine_gordon_soliton"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing from\n{text}");
    }
}

#[test]
fn verify_pseudosphere_passes_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.ini", "[chart]\nname = pseudosphere\n[grid]\nresolution = 65\n");
    let out = dir.path().join("out");
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let summary = fs::read_to_string(out.join("verify_summary.txt")).unwrap();
    let lines: Vec<&str> = summary.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines.len(), 5);
    assert!(lines.iter().all(|l| l.starts_with("PASS ")), "{summary}");
    for key in ["# engine ad", "# seed 20240917", "# grid 65x65", "# tolerances gauss=1e-8"] {
        assert!(summary.contains(key), "{key} missing");
    }
    let gauss = fs::read_to_string(out.join("gauss.csv")).unwrap();
    assert!(gauss.starts_with("u1,u2,residual\n"));
    assert_eq!(gauss.lines().count(), 1 + 65 * 65);
    assert!(!gauss.contains('\r'));
}

#[test]
fn engine_and_seed_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.ini", "[chart]\nname = dini\n[grid]\nresolution = 33\nseed = 5\n");
    let out = dir.path().join("out");
    let o = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--engine",
        "fd",
        "--seed",
        "11",
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let s = stdout(&o);
    assert!(s.contains("# engine fd"), "{s}");
    assert!(s.contains("# seed 11"));
}

#[test]
fn sphere_is_skipped_by_hypothesis_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--chart", "sphere", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert_eq!(s.lines().filter(|l| l.starts_with("SKIPPED ")).count(), 5, "{s}");
    assert!(s.contains("multiplicities"));
}

#[test]
fn failing_identity_exits_one() {
    // ps3 is not of constant curvature, so the Gauss relation fails
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.ini", "[chart]\nname = ps3\n[grid]\nresolution = 17\n");
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL gauss"));
}

#[test]
fn corrupted_chart_expression_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let good = fs::read_to_string(data("tractroid.chart")).unwrap();
    write(dir.path(), "bad.chart", &good.replace("tanh(u1)", "tanh(u1"));
    let cfg = write(dir.path(), "run.ini", "[chart]\nfile = bad.chart\n");
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).starts_with("ERROR line 10"), "{}", stdout(&o));
}

#[test]
fn user_chart_file_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.ini",
        &format!("[chart]\nfile = {}\n[grid]\nresolution = 33\n", data("tractroid.chart")),
    );
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("# verify user_tractroid"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&run(&["verify", "--config", "/nonexistent/run.ini"])), 2);
    assert_eq!(code(&run(&["verify", "--engine", "spectral"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.ini", "[chart]\nname = pseudosphere\n[growth]\nradii = 1.5, 1.0\n");
    let o = run(&["growth", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
}

#[test]
fn coords_zero_box_is_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.ini", "[chart]\nname = pseudosphere\n[coords]\nbox = 0 0, 0 0\n");
    let out = dir.path().join("o");
    let o = run(&["coords", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let csv = fs::read_to_string(out.join("coords.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], "t1,t2,u1,u2");
    assert_eq!(rows[1], "0.0000000000000000e0,0.0000000000000000e0,8.8137358701954305e-1,3.1415926535897931e0");
}

#[test]
fn coords_domain_exit_warns_and_strict_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.ini", "[chart]\nname = pseudosphere\n[growth]\nanchor = 0.5, 3.0\n");
    let out = dir.path().join("o");
    let args = ["coords", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("WARN trajectories leave the chart domain"));
    assert!(stdout(&o).contains("PASS pullback_g0"));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(code(&run(&strict)), 1);
}

#[test]
fn growth_guard_for_product_torus() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["growth", "--chart", "product_torus_r4", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("SKIPPED le (hypothesis: C = 0 <= 0"), "{}", stdout(&o));
    let csv = fs::read_to_string(dir.path().join("growth.csv")).unwrap();
    assert_eq!(csv, "r,S,psi,vol,bound,ref_vol\n");
}
