use std::path::Path;

use polyel::config::{ExperimentConfig, ExperimentKind, NRule};
use polyel::{harness, Pool};
use polyel_core::Serial;

fn fixture_config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/configs").join(name)).unwrap()
}

#[test]
fn every_fixture_config_runs_clean() {
    for name in ["kernel_check.json", "tail_check.json", "bound_check.json", "z_compare.json", "scaling.json"] {
        let cfg = fixture_config(name);
        let report = harness::run(&cfg, &Serial).unwrap();
        assert!(report.failures.is_empty(), "{name}: {:?}", report.failures);
        assert_eq!(report.kind, cfg.kind);
        assert!(!report.tables.is_empty());
    }
}

#[test]
fn payload_is_independent_of_worker_count() {
    let cfg = fixture_config("z_compare.json");
    let a = harness::run(&cfg, &Serial).unwrap().payload();
    let b = harness::run(&cfg, &Pool::new(3).unwrap()).unwrap().payload();
    assert_eq!(a, b);
}

#[test]
fn z_compare_at_zero_beta() {
    let mut cfg = fixture_config("z_compare.json");
    cfg.beta_list = vec![0.0];
    let report = harness::run_z_compare(&cfg, &Serial).unwrap();
    let t = report.table("estimates").unwrap();
    let naive = t.find("method", "naive").unwrap();
    assert_eq!(t.num(naive, "z_value"), Some(1.0));
    assert_eq!(t.num(naive, "std_error"), Some(0.0));
}

#[test]
fn kernel_rows_agree_with_closed_form() {
    let report = harness::run_kernel_check(&fixture_config("kernel_check.json"), &Serial).unwrap();
    let t = report.table("kernel").unwrap();
    for r in 0..t.rows.len() {
        assert!(t.num(r, "z").unwrap().abs() <= 3.0, "row {r}");
        assert!(t.num(r, "phi").unwrap() <= t.num(r, "phi_bound").unwrap());
    }
    let u1 = (0..t.rows.len()).find(|&r| t.num(r, "u") == Some(1.0)).unwrap();
    assert!((t.num(u1, "phi").unwrap() - 0.6826894921370859).abs() < 1e-12);
}

#[test]
fn bound_check_values() {
    let report = harness::run_bound_check(&fixture_config("bound_check.json"), &Serial).unwrap();
    let b = report.table("bounds").unwrap();
    let row = (0..b.rows.len()).find(|&r| b.num(r, "T") == Some(10.0) && b.num(r, "beta") == Some(1.0)).unwrap();
    let want = -10.0 * 10f64.ln();
    assert!((b.num(row, "log_q_less").unwrap() - want).abs() < 1e-10 * want.abs());
    let audit = report.table("i1_audit").unwrap();
    for r in 0..audit.rows.len() {
        assert!(audit.num(r, "i1_exact").unwrap() <= audit.num(r, "i1_audited_chain").unwrap());
    }
    assert!(report.table("monte_carlo").is_some());
}

#[test]
fn scaling_control_matches_prior() {
    let report = harness::run_scaling(&fixture_config("scaling.json"), &Serial).unwrap();
    let cells = report.table("cells").unwrap();
    for r in 0..cells.rows.len() {
        let status = cells.get(r, "status").unwrap().as_str().unwrap();
        assert_ne!(status, "control_mismatch");
        if cells.num(r, "beta") == Some(0.0) {
            assert!(cells.num(r, "window_low").unwrap().is_nan());
            assert_eq!(cells.get(r, "window_valid").unwrap().as_bool(), Some(false));
        }
    }
    assert_eq!(report.table("steps").unwrap().rows.len(), 2);
}

#[test]
fn reports_write_csv_dat_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let report = harness::run_tail_check(&fixture_config("tail_check.json"), &Serial).unwrap();
    let files = report.write(dir.path()).unwrap();
    let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert!(names.contains(&"tail_check.csv".to_string()));
    assert!(names.contains(&"tail_check-tail.dat".to_string()));
    assert!(names.contains(&"tail_check.meta.json".to_string()));
    let dat = std::fs::read_to_string(dir.path().join("tail_check-tail.dat")).unwrap();
    assert!(dat.starts_with('#'));
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("tail_check.meta.json")).unwrap()).unwrap();
    assert!(meta["wall_clock_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn wrong_kind_is_rejected() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::TailCheck);
    cfg.t_list = vec![1.0];
    cfg.lambda_list = vec![1.0];
    cfg.n_rule = NRule::FixedN(16);
    assert!(harness::run_scaling(&cfg, &Serial).is_err());
    assert!(harness::run_tail_check(&cfg, &Serial).is_ok());
}
