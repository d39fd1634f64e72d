//! Exhaustive grid search over knee transmission parameters, maximising
//! takeoff energy, plus the variable-vs-fixed comparison built on top of it.
//!
//! Candidates are independent, so they may be evaluated on a worker pool.
//! Results are always collected in grid order before the argmax, which keeps
//! the outcome identical for any pool width.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ModelError;
use crate::leg::LegModel;
use crate::mechanism::{ratio_curve, FrrParams, RatioCurve, Transmission, VrrParams};
use crate::motor::MotorParams;
use crate::sim::{simulate_jump, simulate_takeoff, SimConfig, SimError, TakeoffResult};

/// Samples in the ratio curve exported with an optimum.
pub const CURVE_SAMPLES: usize = 256;

/// Inclusive `(min, max, step)` grid axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl AxisRange {
    pub fn new(min: f64, max: f64, step: f64) -> Self {
        Self { min, max, step }
    }

    /// A single-value axis.
    pub fn point(value: f64) -> Self {
        Self::new(value, value, 1.0)
    }

    pub fn validate(&self, name: &'static str) -> Result<(), ModelError> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return Err(ModelError::invalid(name, format!("min {} must not exceed max {}", self.min, self.max)));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(ModelError::invalid(name, format!("step must be > 0, got {}", self.step)));
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        // tolerate round-off so that e.g. 25..=75 step 1 yields 51 points
        ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
    }

    /// Grid values `min + i * step`; the last one never exceeds `max`.
    pub fn values(&self) -> Vec<f64> {
        (0..self.count())
            .map(|i| (self.min + i as f64 * self.step).min(self.max))
            .collect()
    }
}

/// Search box for both joint types, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    /// Crank length (m).
    pub r: AxisRange,
    /// Frame length (m).
    pub s0: AxisRange,
    /// Assembly offset (rad).
    pub delta_theta: AxisRange,
    /// Fixed reduction ratio.
    pub k_fixed: AxisRange,
    /// Ball-screw lead applied to every variable-ratio candidate (m/rev).
    pub lead: f64,
}

impl SearchBox {
    /// r 25..75 mm step 1 mm, S0 100..250 mm step 5 mm, offset -3..3 deg step
    /// 1 deg, fixed ratio 10..40 step 1.
    pub fn reference() -> Self {
        Self {
            r: AxisRange::new(0.025, 0.075, 0.001),
            s0: AxisRange::new(0.100, 0.250, 0.005),
            delta_theta: AxisRange::new(-3f64.to_radians(), 3f64.to_radians(), 1f64.to_radians()),
            k_fixed: AxisRange::new(10.0, 40.0, 1.0),
            lead: crate::mechanism::DEFAULT_LEAD,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.r.validate("r_range")?;
        self.s0.validate("s0_range")?;
        self.delta_theta.validate("dtheta_range")?;
        self.k_fixed.validate("frr_range")?;
        if !(self.lead > 0.0) {
            return Err(ModelError::invalid("lead", format!("must be > 0, got {}", self.lead)));
        }
        Ok(())
    }

    /// Variable-ratio grid in index order: r outermost, offset innermost.
    pub fn vrr_grid(&self) -> Vec<VrrParams> {
        let (rs, s0s, dts) = (self.r.values(), self.s0.values(), self.delta_theta.values());
        let mut grid = Vec::with_capacity(rs.len() * s0s.len() * dts.len());
        for &r in &rs {
            for &s0 in &s0s {
                for &dt in &dts {
                    grid.push(VrrParams {
                        r,
                        s0,
                        delta_theta: dt,
                        lead: self.lead,
                    });
                }
            }
        }
        grid
    }

    pub fn frr_grid(&self) -> Vec<FrrParams> {
        self.k_fixed.values().into_iter().map(FrrParams::new).collect()
    }
}

impl Default for SearchBox {
    fn default() -> Self {
        Self::reference()
    }
}

/// One grid candidate. `w_takeoff` and `h_jump` are `None` when infeasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub params: Transmission,
    pub w_takeoff: Option<f64>,
    pub h_jump: Option<f64>,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub best_params: Transmission,
    pub w_takeoff: f64,
    pub h_jump: f64,
    pub evaluations: Vec<Evaluation>,
    pub n_infeasible: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptError {
    #[error("invalid optimisation input: {0}")]
    InvalidInput(#[from] ModelError),

    #[error("no feasible design among {evaluated} candidates")]
    NoFeasibleDesign { evaluated: usize },

    #[error("could not build worker pool: {0}")]
    Pool(String),
}

/// Width of the candidate-evaluation pool. `1` evaluates on the calling thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Workers(pub usize);

impl Default for Workers {
    fn default() -> Self {
        Workers(std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

pub fn optimize_vrr(
    leg: &LegModel,
    motor: &MotorParams,
    cfg: &SimConfig,
    search: &SearchBox,
    workers: Workers,
) -> Result<OptResult, OptError> {
    search.validate()?;
    let grid: Vec<Transmission> = search.vrr_grid().into_iter().map(Transmission::from).collect();
    run_grid(leg, motor, cfg, grid, workers)
}

pub fn optimize_frr(
    leg: &LegModel,
    motor: &MotorParams,
    cfg: &SimConfig,
    search: &SearchBox,
    workers: Workers,
) -> Result<OptResult, OptError> {
    search.validate()?;
    let grid: Vec<Transmission> = search.frr_grid().into_iter().map(Transmission::from).collect();
    run_grid(leg, motor, cfg, grid, workers)
}

/// Simulates one candidate; any simulation failure marks it infeasible.
pub fn evaluate_candidate(leg: &LegModel, motor: &MotorParams, cfg: &SimConfig, params: Transmission) -> Evaluation {
    match simulate_takeoff(leg, motor, &params, cfg) {
        Ok(res) => Evaluation {
            params,
            w_takeoff: Some(res.w_takeoff),
            h_jump: Some(res.h_jump),
            feasible: true,
        },
        Err(_) => Evaluation {
            params,
            w_takeoff: None,
            h_jump: None,
            feasible: false,
        },
    }
}

fn run_grid(
    leg: &LegModel,
    motor: &MotorParams,
    cfg: &SimConfig,
    grid: Vec<Transmission>,
    workers: Workers,
) -> Result<OptResult, OptError> {
    leg.validate()?;
    cfg.validate()?;
    let evaluations: Vec<Evaluation> = if workers.0 <= 1 {
        grid.into_iter().map(|p| evaluate_candidate(leg, motor, cfg, p)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.0)
            .build()
            .map_err(|e| OptError::Pool(e.to_string()))?;
        pool.install(|| {
            grid.into_par_iter()
                .map(|p| evaluate_candidate(leg, motor, cfg, p))
                .collect()
        })
    };
    let n_infeasible = evaluations.iter().filter(|e| !e.feasible).count();
    let best = select_best(&evaluations).ok_or(OptError::NoFeasibleDesign {
        evaluated: evaluations.len(),
    })?;
    let chosen = &evaluations[best];
    Ok(OptResult {
        best_params: chosen.params,
        w_takeoff: chosen.w_takeoff.expect("feasible"),
        h_jump: chosen.h_jump.expect("feasible"),
        n_infeasible,
        evaluations,
    })
}

/// Index of the feasible evaluation with the largest takeoff energy. Exact
/// ties go to the lexicographically smallest `(r, S0, |offset|)`, or the
/// smallest ratio for fixed-ratio candidates.
pub fn select_best(evaluations: &[Evaluation]) -> Option<usize> {
    evaluations
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.w_takeoff.filter(|_| e.feasible).map(|w| (i, w)))
        .max_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then_with(|| tie_key(&evaluations[b.0].params).cmp_key(&tie_key(&evaluations[a.0].params)))
        })
        .map(|(i, _)| i)
}

struct TieKey([f64; 4]);

impl TieKey {
    fn cmp_key(&self, other: &TieKey) -> Ordering {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

fn tie_key(p: &Transmission) -> TieKey {
    match p {
        Transmission::Variable(v) => TieKey([v.r, v.s0, v.delta_theta.abs(), v.delta_theta]),
        Transmission::Fixed(f) => TieKey([f.k_fixed, 0.0, 0.0, 0.0]),
    }
}

/// The optimum of one joint type together with its recorded takeoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignOutcome {
    pub opt: OptResult,
    pub takeoff: TakeoffResult,
    /// Reduction ratio over the working range; `None` for fixed ratios.
    pub ratio_curve: Option<RatioCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleComparison {
    pub q2_init: f64,
    pub vrr: Result<DesignOutcome, String>,
    pub frr: Result<DesignOutcome, String>,
}

impl AngleComparison {
    /// `(h_vrr / h_frr - 1) * 100` when both optimisations succeeded.
    pub fn improvement_pct(&self) -> Option<f64> {
        match (&self.vrr, &self.frr) {
            (Ok(v), Ok(f)) => Some((v.opt.h_jump / f.opt.h_jump - 1.0) * 100.0),
            _ => None,
        }
    }
}

/// Runs both optimisers for each initial angle. A failing angle is reported
/// in its row without aborting the others. Rows are ordered from the deepest
/// crouch to the shallowest.
pub fn compare_designs(
    leg: &LegModel,
    motor: &MotorParams,
    cfg: &SimConfig,
    search: &SearchBox,
    angles: &[f64],
    workers: Workers,
) -> Vec<AngleComparison> {
    let mut angles = angles.to_vec();
    angles.sort_by(|a, b| a.total_cmp(b));
    angles
        .into_iter()
        .map(|q2_init| {
            let cfg = SimConfig { q2_init, ..*cfg };
            let vrr = optimize_vrr(leg, motor, &cfg, search, workers)
                .map_err(|e| e.to_string())
                .and_then(|opt| outcome(leg, motor, &cfg, opt).map_err(|e| e.to_string()));
            let frr = optimize_frr(leg, motor, &cfg, search, workers)
                .map_err(|e| e.to_string())
                .and_then(|opt| outcome(leg, motor, &cfg, opt).map_err(|e| e.to_string()));
            AngleComparison { q2_init, vrr, frr }
        })
        .collect()
}

fn outcome(leg: &LegModel, motor: &MotorParams, cfg: &SimConfig, opt: OptResult) -> Result<DesignOutcome, SimError> {
    let takeoff = simulate_jump(leg, motor, &opt.best_params, cfg)?;
    let ratio_curve = match &opt.best_params {
        Transmission::Variable(p) => Some(
            ratio_curve(p, cfg.q2_init, cfg.q2_takeoff_cap, CURVE_SAMPLES).map_err(SimError::WorkingRange)?,
        ),
        Transmission::Fixed(_) => None,
    };
    Ok(DesignOutcome {
        opt,
        takeoff,
        ratio_curve,
    })
}
