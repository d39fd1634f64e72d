//! Subcommand bodies. Each writes into an output directory and returns the
//! manifest of written files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use thiserror::Error;
use vrrjump_core::{
    compare_designs, optimize_frr, optimize_vrr, ratio_curve, simulate_jump, LegModel, MotorParams, OptError,
    OptResult, SearchBox, SimConfig, SimError, TakeoffResult, Transmission, Workers,
};

use crate::config::{ConfigError, RunConfig};
use crate::report::{
    angle_tag, emit_report, envelope_csv, grid_csv, ratio_curve_csv, takeoff_summary, trajectory_csv,
    write_metadata, write_named, ComparisonReport, Metadata, ReportError,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{0}")]
    Usage(String),

    #[error("search failed: {0}")]
    Infeasible(String),

    #[error("simulation failed: {0}")]
    Simulation(String),

    #[error(transparent)]
    Io(#[from] ReportError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Simulation(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

/// Files written by a subcommand plus anything it reports on stdout.
#[derive(Debug, Default)]
pub struct Outcome {
    pub manifest: Vec<PathBuf>,
    pub stdout: Vec<String>,
}

fn elapsed(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

/// Simulates the configured mechanism from every configured angle.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let mut outcome = Outcome::default();
    for &q2 in &cfg.angles {
        let res = simulate_jump(&cfg.leg, &cfg.motor, &cfg.mechanism, &cfg.sim_at(q2))
            .map_err(|e| CliError::Simulation(format!("q2_init = {q2}: {e}")))?;
        info!(
            "q2_init {q2}: H = {:.4} m, {} at t = {:.4} s",
            res.h_jump,
            res.terminated_by.as_str(),
            res.t_takeoff
        );
        let name = format!("trajectory_{}.csv", angle_tag(q2));
        outcome
            .manifest
            .push(write_named(out, &name, &trajectory_csv(&cfg.mechanism, &res.trajectory))?);
        outcome
            .stdout
            .push(takeoff_summary(q2, &cfg.mechanism, &res).to_string());
    }
    let meta = Metadata::new("simulate", &cfg.source, elapsed(start));
    outcome.manifest.push(write_metadata(out, &meta)?);
    Ok(outcome)
}

type OptFn = fn(&LegModel, &MotorParams, &SimConfig, &SearchBox, Workers) -> Result<OptResult, OptError>;

/// Grid search for the configured joint type at every angle.
pub fn optimize(cfg: &RunConfig, out: &Path, workers: Workers) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let (label, run): (&str, OptFn) = match cfg.mechanism {
        Transmission::Variable(_) => ("evrr", optimize_vrr),
        Transmission::Fixed(_) => ("frr", optimize_frr),
    };
    let mut outcome = Outcome::default();
    let mut rows = Vec::new();
    for &q2 in &cfg.angles {
        let opt = run(&cfg.leg, &cfg.motor, &cfg.sim_at(q2), &cfg.search, workers).map_err(|e| match e {
            OptError::NoFeasibleDesign { .. } => CliError::Infeasible(format!("q2_init = {q2}: {e}")),
            other => CliError::Usage(format!("q2_init = {q2}: {other}")),
        })?;
        info!(
            "q2_init {q2}: best {:?}, H = {:.4} m, {} of {} infeasible",
            opt.best_params,
            opt.h_jump,
            opt.n_infeasible,
            opt.evaluations.len()
        );
        let res = best_takeoff(cfg, q2, &opt)?;
        let stem = format!("{}_{label}", angle_tag(q2));
        outcome
            .manifest
            .push(write_named(out, &format!("grid_{stem}.csv"), &grid_csv(&opt.evaluations))?);
        outcome.manifest.push(write_named(
            out,
            &format!("trajectory_{stem}.csv"),
            &trajectory_csv(&opt.best_params, &res.trajectory),
        )?);
        let mut row = takeoff_summary(q2, &opt.best_params, &res);
        row["best_params"] = serde_json::to_value(opt.best_params).expect("params serialise");
        row["n_evaluated"] = opt.evaluations.len().into();
        row["n_infeasible"] = opt.n_infeasible.into();
        rows.push(row);
    }
    let mut text = serde_json::to_string_pretty(&rows).expect("rows serialise");
    text.push('\n');
    outcome
        .manifest
        .push(write_named(out, &format!("optimize_{label}.json"), &text)?);
    let meta = Metadata::new("optimize", &cfg.source, elapsed(start));
    outcome.manifest.push(write_metadata(out, &meta)?);
    Ok(outcome)
}

fn best_takeoff(cfg: &RunConfig, q2: f64, opt: &OptResult) -> Result<TakeoffResult, CliError> {
    simulate_jump(&cfg.leg, &cfg.motor, &opt.best_params, &cfg.sim_at(q2))
        .map_err(|e: SimError| CliError::Simulation(format!("q2_init = {q2}: {e}")))
}

/// Runs both optimisers per angle and assembles the report without writing it.
pub fn build_comparison(cfg: &RunConfig, workers: Workers) -> ComparisonReport {
    let start = Instant::now();
    let comparisons = compare_designs(&cfg.leg, &cfg.motor, &cfg.sim, &cfg.search, &cfg.angles, workers);
    for c in &comparisons {
        for (joint, r) in [("EVRR-K", &c.vrr), ("FRR-K", &c.frr)] {
            if let Err(e) = r {
                warn!("q2_init {}: {joint} failed: {e}", c.q2_init);
            }
        }
    }
    ComparisonReport {
        comparisons,
        dump_grid: cfg.dump_grid,
        metadata: Metadata::new("compare", &cfg.source, elapsed(start)),
    }
}

/// Full comparison. The report is written even when some angles fail; the
/// failure is then reported through the returned error.
pub fn compare(cfg: &RunConfig, out: &Path, workers: Workers) -> Result<(ComparisonReport, Outcome), CliError> {
    let report = build_comparison(cfg, workers);
    let manifest = emit_report(&report, out)?;
    let stdout = vec![report.summary_text()];
    let failures: Vec<String> = report
        .comparisons
        .iter()
        .flat_map(|c| {
            [&c.vrr, &c.frr]
                .into_iter()
                .filter_map(move |r| r.as_ref().err().map(|e| format!("q2_init = {}: {e}", c.q2_init)))
        })
        .collect();
    if !failures.is_empty() {
        let msg = failures.join("; ");
        return Err(if msg.contains("no feasible design") {
            CliError::Infeasible(msg)
        } else {
            CliError::Simulation(msg)
        });
    }
    Ok((report, Outcome { manifest, stdout }))
}

/// Reduction ratio of the configured variable-ratio mechanism from the
/// deepest configured angle to the extension cap.
pub fn sweep_ratio(cfg: &RunConfig, out: &Path, samples: usize) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let Transmission::Variable(p) = cfg.mechanism else {
        return Err(CliError::Usage("sweep-ratio needs a variable-ratio mechanism".into()));
    };
    let lo = cfg.angles.iter().copied().fold(f64::INFINITY, f64::min);
    let curve = ratio_curve(&p, lo, cfg.sim.q2_takeoff_cap, samples)
        .map_err(|e| CliError::Simulation(format!("ratio sweep: {e}")))?;
    info!("k_max = {:.4} at q2 = {:.4} rad", curve.k_max, curve.argmax_q2);
    let mut outcome = Outcome::default();
    outcome
        .manifest
        .push(write_named(out, "ratio_curve.csv", &ratio_curve_csv(&cfg.mechanism, &curve))?);
    let meta = Metadata::new("sweep-ratio", &cfg.source, elapsed(start));
    outcome.manifest.push(write_metadata(out, &meta)?);
    Ok(outcome)
}

pub fn envelope(cfg: &RunConfig, out: &Path, samples: usize) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let points = cfg
        .motor
        .envelope_table(samples)
        .map_err(|e| CliError::Usage(format!("envelope: {e}")))?;
    let mut outcome = Outcome::default();
    outcome
        .manifest
        .push(write_named(out, "envelope.csv", &envelope_csv(&points))?);
    let meta = Metadata::new("envelope", &cfg.source, elapsed(start));
    outcome.manifest.push(write_metadata(out, &meta)?);
    Ok(outcome)
}
