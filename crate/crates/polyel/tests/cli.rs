use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn polyel() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_polyel"));
    c.env_remove("POLYEL_OUT").env_remove("POLYEL_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    polyel().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Value of `column` in the single data row of a CSV table.
fn csv_value(text: &str, column: &str) -> String {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let idx = r.headers().unwrap().iter().position(|h| h == column).unwrap();
    r.records().next().unwrap().unwrap()[idx].to_string()
}

#[test]
fn sample_is_reproducible() {
    let a = run(&["sample", "--T", "1", "--n", "4", "--seed", "7"]);
    let b = run(&["sample", "--T", "1", "--n", "4", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().next(), Some("i,t,x,y,z"));
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().nth(1).unwrap().starts_with("0,0.0000000000000000e0,0.0000000000000000e0"));
    assert_ne!(a.stdout, run(&["sample", "--T", "1", "--n", "4", "--seed", "8"]).stdout);
}

#[test]
fn energy_of_fixture_path() {
    let o = run(&["energy", "--input", fixture("straight_line.csv").to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    let coulomb: f64 = csv_value(&text, "coulomb").parse().unwrap();
    let rg: f64 = csv_value(&text, "rg").parse().unwrap();
    assert_eq!(coulomb, 5.0);
    assert!((rg - (4.0f64 / 3.0).sqrt()).abs() < 1e-14);
    assert_eq!(csv_value(&text, "clamped"), "0");
}

#[test]
fn energy_json_parses() {
    let o = run(&["energy", "--input", fixture("straight_line.csv").to_str().unwrap(), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"][0]["coulomb"], 5.0);
    assert_eq!(v["name"], "energy");
}

#[test]
fn verify_bounds_reports_window() {
    let o = run(&["verify-bounds", "--T", "100", "--beta", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let value = |q: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(&format!("{q},"))).unwrap();
        line.split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!((value("window_low") - 7.2382).abs() < 1e-4);
    assert!((value("window_high") - 1502.17).abs() < 1e-2);
    assert_eq!(value("window_valid"), 1.0);
}

#[test]
fn degenerate_path_exits_2() {
    let o = run(&["energy", "--input", fixture("collapsed.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate"));
}

#[test]
fn bad_arguments_exit_1() {
    assert_eq!(run(&["energy", "--T=-1"]).status.code(), Some(1));
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["sample", "--threads", "0"]).status.code(), Some(1));
    assert_eq!(run(&["energy", "--input", "/nonexistent.csv"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn threads_from_environment() {
    let args = ["energy", "--T", "2", "--n", "1500", "--seed", "4"];
    let base = run(&args);
    let env = polyel().args(args).env("POLYEL_THREADS", "3").output().unwrap();
    assert!(env.status.success());
    assert_eq!(base.stdout, env.stdout);
    let bad = polyel().args(args).env("POLYEL_THREADS", "0").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn output_file_via_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let o = run(&["sample", "--T", "1", "--n", "8", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let written = std::fs::read(&out).unwrap();
    assert_eq!(written, run(&["sample", "--T", "1", "--n", "8", "--seed", "3"]).stdout);
}

#[test]
fn mcmc_trace_columns() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let o = run(&[
        "mcmc", "--T", "1", "--n", "16", "--beta", "1", "--sweeps", "50", "--burn-in", "10", "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let mut r = csv::Reader::from_path(&trace).unwrap();
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["sweep", "coulomb", "rg", "endpoint_x1", "move", "accepted"]);
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert!(!rows.is_empty());
    for row in &rows {
        assert!(["pivot", "global_ar", "block"].contains(&&row[4]));
        assert!(["0", "1"].contains(&&row[5]));
    }
    assert_eq!(csv_value(&stdout(&o), "sweeps"), "50");
}

#[test]
fn estimate_z_at_zero_beta_is_one() {
    let o = run(&["estimate-z", "--T", "1", "--n", "32", "--beta", "0", "--m", "200", "--sweeps", "200", "--burn-in", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let h = r.headers().unwrap().clone();
    let method = h.iter().position(|c| c == "method").unwrap();
    let value = h.iter().position(|c| c == "value").unwrap();
    let mut methods = Vec::new();
    for row in r.records() {
        let row = row.unwrap();
        methods.push(row[method].to_string());
        if &row[method] == "naive" {
            assert_eq!(row[value].parse::<f64>().unwrap(), 1.0);
        }
    }
    assert_eq!(methods, ["naive", "girsanov", "thermo"]);
}

#[test]
fn sweep_writes_outputs_and_overrides_format() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("configs/kernel_check.json");
    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("kernel_check.json")).unwrap()).unwrap();
    assert_eq!(v["kind"], "kernel_check");
    assert!(dir.path().join("kernel_check-kernel.dat").exists());
    assert!(dir.path().join("kernel_check.meta.json").exists());
    assert!(stdout(&o).contains("wrote "));
}

#[test]
fn sweep_rejects_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"kind":"scaling","t_list":[8,4],"beta_list":[1]}"#).unwrap();
    assert_eq!(run(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}
