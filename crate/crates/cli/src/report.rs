//! CSV / text / JSON emission.
//!
//! Numbers are written with 9 significant digits in a `%g`-like style with
//! `.` as decimal separator regardless of locale.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;
use vrrjump_core::units::{m_to_mm, rad_s_to_rpm};
use vrrjump_core::{
    AngleComparison, DesignOutcome, EnvelopePoint, Evaluation, RatioCurve, SimState, TakeoffResult,
    Transmission,
};

use crate::config::ConfigFile;

pub const TRAJECTORY_HEADER: [&str; 15] = [
    "t_s",
    "q2_rad",
    "dq2_rads",
    "theta_rad",
    "k",
    "lambda_radpm",
    "tau_m_nm",
    "tau_j_nm",
    "omega_m_rpm",
    "p_m_w",
    "p_j_w",
    "y_com_m",
    "dy_com_mps",
    "f_contact_n",
    "w_motor_j",
];
pub const RATIO_HEADER: [&str; 3] = ["q2_rad", "theta_rad", "k"];
pub const ENVELOPE_HEADER: [&str; 4] = ["omega_rpm", "tau_max_nm", "p_out_w", "p_loss_w"];
pub const GRID_HEADER: [&str; 7] = ["r_mm", "s0_mm", "dtheta_deg", "k_fixed", "feasible", "w_takeoff_j", "h_jump_m"];
pub const FIG7_HEADER: [&str; 8] = [
    "q2_rad",
    "k",
    "overall_ratio_radpm",
    "omega_m_rpm",
    "tau_m_nm",
    "p_m_w",
    "p_j_w",
    "w_motor_j",
];
pub const SUMMARY_HEADER: [&str; 14] = [
    "q2_init_rad",
    "joint",
    "r_mm",
    "s0_mm",
    "dtheta_deg",
    "k_fixed",
    "w_takeoff_j",
    "h_jump_m",
    "t_takeoff_s",
    "terminated_by",
    "max_motor_speed_rpm",
    "improvement_pct",
    "n_infeasible",
    "error",
];

#[derive(Debug, Error)]
#[error("cannot write {}: {source}", path.display())]
pub struct ReportError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

/// Formats with 9 significant digits, trailing zeros trimmed, switching to
/// exponent notation outside `[1e-5, 1e9)`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_fraction(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa.to_string()), exp.abs())
    }
}

fn trim_fraction(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn opt_num(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<PathBuf, ReportError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| ReportError {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| ReportError {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(path.to_path_buf())
}

pub fn trajectory_csv(transmission: &Transmission, trajectory: &[SimState]) -> String {
    let rows = trajectory.iter().map(|s| {
        vec![
            fmt_num(s.t),
            fmt_num(s.q2),
            fmt_num(s.dq2),
            opt_num(transmission.crank_angle(s.q2)),
            fmt_num(s.k),
            fmt_num(s.lambda),
            fmt_num(s.tau_m),
            fmt_num(s.tau_j),
            fmt_num(rad_s_to_rpm(s.omega_m)),
            fmt_num(s.p_m),
            fmt_num(s.p_j),
            fmt_num(s.y_com),
            fmt_num(s.dy_com),
            fmt_num(s.f_contact),
            fmt_num(s.w_motor),
        ]
    });
    csv_table(&TRAJECTORY_HEADER, rows)
}

/// Motor and joint channels of a takeoff, indexed by knee angle.
pub fn fig7_csv(trajectory: &[SimState]) -> String {
    let rows = trajectory.iter().map(|s| {
        vec![
            fmt_num(s.q2),
            fmt_num(s.k),
            fmt_num(s.k * s.lambda),
            fmt_num(rad_s_to_rpm(s.omega_m)),
            fmt_num(s.tau_m),
            fmt_num(s.p_m),
            fmt_num(s.p_j),
            fmt_num(s.w_motor),
        ]
    });
    csv_table(&FIG7_HEADER, rows)
}

pub fn ratio_curve_csv(transmission: &Transmission, curve: &RatioCurve) -> String {
    let rows = curve
        .samples
        .iter()
        .map(|&(q2, k)| vec![fmt_num(q2), opt_num(transmission.crank_angle(q2)), fmt_num(k)]);
    csv_table(&RATIO_HEADER, rows)
}

pub fn envelope_csv(points: &[EnvelopePoint]) -> String {
    let rows = points.iter().map(|p| {
        vec![
            fmt_num(rad_s_to_rpm(p.omega)),
            fmt_num(p.tau_max),
            fmt_num(p.p_out),
            fmt_num(p.p_loss),
        ]
    });
    csv_table(&ENVELOPE_HEADER, rows)
}

/// `(r_mm, s0_mm, dtheta_deg, k_fixed)` cells, blank where not applicable.
fn param_cells(p: &Transmission) -> [String; 4] {
    match p {
        Transmission::Variable(v) => [
            fmt_num(m_to_mm(v.r)),
            fmt_num(m_to_mm(v.s0)),
            fmt_num(v.delta_theta.to_degrees()),
            String::new(),
        ],
        Transmission::Fixed(f) => [String::new(), String::new(), String::new(), fmt_num(f.k_fixed)],
    }
}

pub fn grid_csv(evaluations: &[Evaluation]) -> String {
    let rows = evaluations.iter().map(|e| {
        let mut row = param_cells(&e.params).to_vec();
        row.push(e.feasible.to_string());
        row.push(opt_num(e.w_takeoff));
        row.push(opt_num(e.h_jump));
        row
    });
    csv_table(&GRID_HEADER, rows)
}

/// Angle tag used in file names, e.g. `q2_m2.6180`.
pub fn angle_tag(q2: f64) -> String {
    let s = format!("{q2:.4}");
    format!("q2_{}", s.replace('-', "m"))
}

/// Run provenance with the resolved configuration echoed in full.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub config: ConfigFile,
    /// The only part that differs between identical runs.
    pub timing: Timing,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub timestamp: String,
    pub wall_time_s: f64,
}

impl Metadata {
    pub fn new(command: &str, config: &ConfigFile, wall_time_s: f64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_hash: config_hash(config),
            config: config.clone(),
            timing: Timing {
                timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
                wall_time_s,
            },
        }
    }
}

/// SHA-256 of the compact JSON form of the resolved configuration.
pub fn config_hash(config: &ConfigFile) -> String {
    let bytes = serde_json::to_vec(config).expect("config serialises");
    hex::encode(Sha256::digest(&bytes))
}

pub fn write_metadata(dir: &Path, meta: &Metadata) -> Result<PathBuf, ReportError> {
    let mut text = serde_json::to_string_pretty(meta).expect("metadata serialises");
    text.push('\n');
    write_file(&dir.join("metadata.json"), &text)
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub q2_init_rad: f64,
    pub joint: &'static str,
    pub params: Option<Transmission>,
    pub w_takeoff_j: Option<f64>,
    pub h_jump_m: Option<f64>,
    pub t_takeoff_s: Option<f64>,
    pub terminated_by: Option<&'static str>,
    pub max_motor_speed_rpm: Option<f64>,
    pub improvement_pct: Option<f64>,
    pub n_evaluated: Option<usize>,
    pub n_infeasible: Option<usize>,
    pub error: Option<String>,
}

/// Per-angle comparison of the two optimised joints plus run metadata.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    /// Deepest crouch first.
    pub comparisons: Vec<AngleComparison>,
    pub dump_grid: bool,
    pub metadata: Metadata,
}

impl ComparisonReport {
    /// Two rows per angle, variable ratio first.
    pub fn rows(&self) -> Vec<SummaryRow> {
        let mut rows = Vec::with_capacity(2 * self.comparisons.len());
        for c in &self.comparisons {
            rows.push(summary_row(c.q2_init, "EVRR-K", &c.vrr, c.improvement_pct()));
            rows.push(summary_row(c.q2_init, "FRR-K", &c.frr, None));
        }
        rows
    }

    pub fn summary_csv(&self) -> String {
        let rows = self.rows().into_iter().map(|r| {
            let params = r.params.as_ref().map(param_cells).unwrap_or_default();
            let mut row = vec![fmt_num(r.q2_init_rad), r.joint.to_string()];
            row.extend(params);
            row.extend([
                opt_num(r.w_takeoff_j),
                opt_num(r.h_jump_m),
                opt_num(r.t_takeoff_s),
                r.terminated_by.unwrap_or_default().to_string(),
                opt_num(r.max_motor_speed_rpm),
                opt_num(r.improvement_pct),
                r.n_infeasible.map(|n| n.to_string()).unwrap_or_default(),
                quote(r.error.as_deref().unwrap_or_default()),
            ]);
            row
        });
        csv_table(&SUMMARY_HEADER, rows)
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>10}  {:<7} {:>20}  {:>9}  {:>10}  {:>12}",
            "q2_init", "joint", "parameters", "H (m)", "max rpm", "improvement"
        );
        for r in self.rows() {
            let params = match r.params {
                Some(Transmission::Variable(v)) => format!(
                    "({:.0}, {:.0}, {:.0})",
                    m_to_mm(v.r),
                    m_to_mm(v.s0),
                    v.delta_theta.to_degrees()
                ),
                Some(Transmission::Fixed(f)) => format!("k = {}", fmt_num(f.k_fixed)),
                None => "-".into(),
            };
            match &r.error {
                Some(e) => {
                    let _ = writeln!(out, "{:>10.4}  {:<7} error: {e}", r.q2_init_rad, r.joint);
                }
                None => {
                    let _ = writeln!(
                        out,
                        "{:>10.4}  {:<7} {:>20}  {:>9.4}  {:>10.0}  {:>12}",
                        r.q2_init_rad,
                        r.joint,
                        params,
                        r.h_jump_m.unwrap_or(f64::NAN),
                        r.max_motor_speed_rpm.unwrap_or(f64::NAN),
                        r.improvement_pct.map(|p| format!("{p:.1}%")).unwrap_or_default(),
                    );
                }
            }
        }
        out
    }

    pub fn summary_json(&self) -> String {
        let doc = json!({
            "rows": self.rows(),
            "config_hash": self.metadata.config_hash,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("summary serialises");
        s.push('\n');
        s
    }
}

fn summary_row(
    q2_init: f64,
    joint: &'static str,
    outcome: &Result<DesignOutcome, String>,
    improvement: Option<f64>,
) -> SummaryRow {
    match outcome {
        Ok(o) => SummaryRow {
            q2_init_rad: q2_init,
            joint,
            params: Some(o.opt.best_params),
            w_takeoff_j: Some(o.opt.w_takeoff),
            h_jump_m: Some(o.opt.h_jump),
            t_takeoff_s: Some(o.takeoff.t_takeoff),
            terminated_by: Some(o.takeoff.terminated_by.as_str()),
            max_motor_speed_rpm: Some(rad_s_to_rpm(o.takeoff.max_motor_speed)),
            improvement_pct: improvement,
            n_evaluated: Some(o.opt.evaluations.len()),
            n_infeasible: Some(o.opt.n_infeasible),
            error: None,
        },
        Err(e) => SummaryRow {
            q2_init_rad: q2_init,
            joint,
            params: None,
            w_takeoff_j: None,
            h_jump_m: None,
            t_takeoff_s: None,
            terminated_by: None,
            max_motor_speed_rpm: None,
            improvement_pct: None,
            n_evaluated: None,
            n_infeasible: None,
            error: Some(e.clone()),
        },
    }
}

/// Writes the full comparison into `dir` and returns the written paths.
/// A report without angles produces only the metadata file.
pub fn emit_report(report: &ComparisonReport, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let mut manifest = Vec::new();
    if !report.comparisons.is_empty() {
        manifest.push(write_file(&dir.join("summary.csv"), &report.summary_csv())?);
        manifest.push(write_file(&dir.join("summary.txt"), &report.summary_text())?);
        manifest.push(write_file(&dir.join("summary.json"), &report.summary_json())?);
        for c in &report.comparisons {
            let tag = angle_tag(c.q2_init);
            for (joint, outcome) in [("evrr", &c.vrr), ("frr", &c.frr)] {
                let Ok(o) = outcome else { continue };
                manifest.extend(emit_outcome(report, dir, &format!("{tag}_{joint}"), o)?);
            }
        }
    }
    manifest.push(write_metadata(dir, &report.metadata)?);
    Ok(manifest)
}

fn emit_outcome(
    report: &ComparisonReport,
    dir: &Path,
    stem: &str,
    o: &DesignOutcome,
) -> Result<Vec<PathBuf>, ReportError> {
    let params = &o.opt.best_params;
    let mut files = vec![
        write_file(
            &dir.join(format!("trajectory_{stem}.csv")),
            &trajectory_csv(params, &o.takeoff.trajectory),
        )?,
        write_file(&dir.join(format!("fig7_{stem}.csv")), &fig7_csv(&o.takeoff.trajectory))?,
    ];
    if let Some(curve) = &o.ratio_curve {
        files.push(write_file(&dir.join(format!("ratio_curve_{stem}.csv")), &ratio_curve_csv(params, curve))?);
    }
    if report.dump_grid {
        files.push(write_file(&dir.join(format!("grid_{stem}.csv")), &grid_csv(&o.opt.evaluations))?);
    }
    Ok(files)
}

/// Writes text to `dir/name`, creating `dir` when needed.
pub fn write_named(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, ReportError> {
    write_file(&dir.join(name), contents)
}

/// The stdout summary of a single takeoff.
pub fn takeoff_summary(q2_init: f64, transmission: &Transmission, res: &TakeoffResult) -> serde_json::Value {
    json!({
        "q2_init_rad": q2_init,
        "joint": transmission.label(),
        "w_takeoff": res.w_takeoff,
        "h_jump": res.h_jump,
        "t_takeoff": res.t_takeoff,
        "terminated_by": res.terminated_by.as_str(),
        "q2_at_takeoff": res.q2_at_takeoff,
        "w_motor": res.w_motor,
        "max_motor_speed_rpm": rad_s_to_rpm(res.max_motor_speed),
    })
}
