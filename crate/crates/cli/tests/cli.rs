use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use vrrjump::config::{load_config, parse_config};
use vrrjump::report::{emit_report, ComparisonReport, Metadata, TRAJECTORY_HEADER};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_vrrjump"));
    c.env_remove("VRRJUMP_LOG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

/// Reference setup with a 3 x 3 x 1 search box and five fixed ratios.
const SMALL: &str = r#"{
  "search": {
    "r_mm": {"min": 43, "max": 51, "step": 4},
    "s0_mm": {"min": 130, "max": 170, "step": 20},
    "delta_theta_deg": {"min": 0, "max": 0, "step": 1},
    "k_fixed": {"min": 20, "max": 24, "step": 1},
    "dump_grid": true
  },
  "angles": [-1.9199, -2.618]
}"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn csv_payloads(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn simulate_prints_summary_and_writes_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"angles": [-2.618]}"#);
    let out = tmp.path().join("sim");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let summary: Value = serde_json::from_str(stdout.trim()).unwrap();
    for key in ["w_takeoff", "h_jump", "t_takeoff", "terminated_by"] {
        assert!(summary.get(key).is_some(), "missing {key}");
    }
    assert_eq!(summary["terminated_by"], "angle_cap");
    let traj = out.join("trajectory_q2_m2.6180.csv");
    assert_eq!(header(&traj), TRAJECTORY_HEADER.join(","));
    assert_eq!(
        header(&traj),
        "t_s,q2_rad,dq2_rads,theta_rad,k,lambda_radpm,tau_m_nm,tau_j_nm,omega_m_rpm,p_m_w,p_j_w,y_com_m,dy_com_mps,f_contact_n,w_motor_j"
    );
    assert!(out.join("metadata.json").exists());
}

#[test]
fn fixed_ratio_trajectory_leaves_crank_angle_blank() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"mechanism": {"type": "fixed", "k_fixed": 22}, "angles": [-2.618]}"#);
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(tmp.path().join("trajectory_q2_m2.6180.csv")).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row.len(), 15);
    assert_eq!(row[3], "");
    assert_eq!(row[4], "22");
}

#[test]
fn envelope_and_ratio_sweep_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert!(run(&["envelope", "--out", out, "--samples", "11"]).status.success());
    let env = tmp.path().join("envelope.csv");
    assert_eq!(header(&env), "omega_rpm,tau_max_nm,p_out_w,p_loss_w");
    let text = fs::read_to_string(&env).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.lines().nth(1).unwrap().starts_with("0,9.37,0,"));
    assert!(text.lines().last().unwrap().starts_with("4800,0,0,"));

    assert!(run(&["sweep-ratio", "--out", out, "--samples", "64"]).status.success());
    let ratio = tmp.path().join("ratio_curve.csv");
    assert_eq!(header(&ratio), "q2_rad,theta_rad,k");
    assert_eq!(fs::read_to_string(&ratio).unwrap().lines().count(), 65);
}

#[test]
fn compare_writes_table_and_is_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["compare", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "2"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let summary = fs::read_to_string(a.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("-2.618,EVRR-K,"));
    assert!(rows[1].starts_with("-2.618,FRR-K,"));
    assert!(rows[2].starts_with("-1.9199,EVRR-K,"));
    for stem in ["q2_m2.6180_evrr", "q2_m2.6180_frr", "q2_m1.9199_evrr", "q2_m1.9199_frr"] {
        for kind in ["trajectory", "fig7", "grid"] {
            assert!(a.join(format!("{kind}_{stem}.csv")).exists(), "{kind}_{stem}");
        }
    }
    assert!(a.join("ratio_curve_q2_m2.6180_evrr.csv").exists());
    assert!(!a.join("ratio_curve_q2_m2.6180_frr.csv").exists());
    assert_eq!(header(&a.join("grid_q2_m2.6180_evrr.csv")), "r_mm,s0_mm,dtheta_deg,k_fixed,feasible,w_takeoff_j,h_jump_m");

    // identical payloads, identical metadata apart from timing and the output path
    let (pa, pb) = (csv_payloads(&a), csv_payloads(&b));
    assert_eq!(pa.len(), 15);
    assert_eq!(pa, pb);
    assert_eq!(fs::read(a.join("summary.txt")).unwrap(), fs::read(b.join("summary.txt")).unwrap());
    let meta = |d: &Path| {
        let mut v: Value = serde_json::from_str(&fs::read_to_string(d.join("metadata.json")).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timing");
        v["config"].as_object_mut().unwrap().remove("output_dir");
        v.as_object_mut().unwrap().remove("config_hash");
        v
    };
    assert_eq!(meta(&a), meta(&b));
}

#[test]
fn metadata_config_reloads_to_the_same_run_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"motor": {"eta_j": 0.85}, "angles": [-2.2689]}"#);
    let out = tmp.path().join("o");
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--jacobian-mode",
        "paper",
    ]);
    assert!(o.status.success());
    let meta: Value = serde_json::from_str(&fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["leg"]["jacobian_mode"], "paper_literal");
    assert_eq!(meta["tool"], "vrrjump");
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert!(meta["timing"]["timestamp"].is_string());
    let echoed = serde_json::to_string(&meta["config"]).unwrap();
    let reloaded = parse_config(&echoed, Path::new("metadata.json")).unwrap();
    let mut original = load_config(&cfg).unwrap();
    original.set_jacobian_mode(vrrjump_core::JacobianMode::PaperLiteral);
    original.output_dir = out.clone();
    original.source.output_dir = out.clone();
    assert_eq!(reloaded, original);
}

#[test]
fn config_errors_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    for (text, needle) in [
        (r#"{"legs": {}}"#, "legs"),
        (r#"{"mechanism": {"type": "variable", "r_mm": -5, "s0_mm": 150}}"#, "VrrParams"),
        (r#"{"angles": []}"#, "at least one"),
        ("{\n  \"sim\": {\"dt_s\": \"small\"}\n}", "sim.dt_s"),
    ] {
        let cfg = write_config(tmp.path(), text);
        let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(needle), "{text}: {err}");
    }
    let o = run(&["simulate", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["envelope", "--out", tmp.path().to_str().unwrap(), "--workers", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seedless_flag_takes_no_value() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert!(run(&["envelope", "--out", out, "--seedless"]).status.success());
    assert_eq!(run(&["envelope", "--out", out, "--seedless=true"]).status.code(), Some(2));
    assert_eq!(run(&["envelope", "--out", out, "--jacobian-mode", "other"]).status.code(), Some(2));
}

#[test]
fn infeasible_search_exits_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"search": {"delta_theta_deg": {"min": -3.5, "max": -3.5, "step": 1},
            "r_mm": {"min": 45, "max": 47, "step": 2}, "s0_mm": {"min": 150, "max": 150, "step": 5}}, "angles": [-2.618]}"#,
    );
    let o = run(&["optimize", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn working_range_violation_exits_with_code_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"mechanism": {"type": "variable", "r_mm": 47, "s0_mm": 150, "delta_theta_deg": -3.5}, "angles": [-2.618]}"#,
    );
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    let cfg = write_config(tmp.path(), r#"{"mechanism": {"type": "fixed", "k_fixed": 20}}"#);
    let o = run(&["sweep-ratio", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn optimize_dumps_grid_for_configured_joint() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"mechanism": {"type": "fixed", "k_fixed": 20}, "search": {"k_fixed": {"min": 20, "max": 24, "step": 2}}, "angles": [-2.618]}"#,
    );
    let o = run(&["optimize", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    let grid = fs::read_to_string(tmp.path().join("grid_q2_m2.6180_frr.csv")).unwrap();
    let rows: Vec<&str> = grid.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with(",,,20,true,"));
    let json: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("optimize_frr.json")).unwrap()).unwrap();
    assert_eq!(json[0]["best_params"]["type"], "fixed");
}

#[test]
fn bundled_configs_load() {
    let c = load_config(&configs().join("paper_iv_b.json")).unwrap();
    assert_eq!((c.leg.l1, c.leg.l2, c.leg.m1, c.leg.m2, c.leg.m3), (0.45, 0.45, 2.5, 5.0, 20.0));
    assert_eq!(c.angles, vec![-2.618, -2.2689, -1.9199]);
    assert_eq!(c.search, vrrjump_core::SearchBox::reference());
    let p = load_config(&configs().join("platform_v_a.json")).unwrap();
    assert!((p.leg.total_mass() - 24.93).abs() < 1e-12);
    assert_eq!(p.mechanism, vrrjump_core::VrrParams::new(0.047, 0.259, 0.0).into());
}

#[test]
fn empty_report_writes_only_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = load_config(&configs().join("paper_iv_b.json")).unwrap();
    let report = ComparisonReport {
        comparisons: Vec::new(),
        dump_grid: false,
        metadata: Metadata::new("compare", &cfg.source, 0.0),
    };
    let manifest = emit_report(&report, tmp.path()).unwrap();
    assert_eq!(manifest, vec![tmp.path().join("metadata.json")]);
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 1);
}

#[test]
fn unwritable_output_reports_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let o = run(&["envelope", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("file"));
}
