//! Knee transmissions: the linear-actuator guide-rod linkage with an
//! angle-dependent reduction ratio, and the fixed-ratio baseline.
//!
//! The linkage is a triangle with sides `S0 + r` (frame plus crank hinge
//! offset) and `r` (crank) enclosing the crank angle `theta`. The rod length
//! follows from the law of cosines and the reduction ratio is the rod's
//! extension rate per joint radian converted to screw radians through the
//! ball-screw lead.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::leg::LegModel;

/// Ball-screw lead of the reference actuator (m/rev).
pub const DEFAULT_LEAD: f64 = 0.010;

/// Crank angles accepted by the working-range guard used by the simulator.
/// Linkage dead points sit at 0 and pi.
pub const THETA_GUARD_MIN: f64 = 0.01;
pub const THETA_GUARD_MAX: f64 = PI - 0.001;

/// Bound on the assembly offset accepted by [`VrrParams::validate`].
pub const DELTA_THETA_LIMIT: f64 = PI / 6.0;

const GOLDEN_TOL: f64 = 1e-6;

/// Design variables of the variable-ratio guide-rod knee, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VrrParams {
    /// Crank length (m).
    pub r: f64,
    /// Frame length (m).
    pub s0: f64,
    /// Assembly angular offset (rad).
    pub delta_theta: f64,
    /// Ball-screw lead (m/rev).
    pub lead: f64,
}

impl VrrParams {
    pub fn new(r: f64, s0: f64, delta_theta: f64) -> Self {
        Self {
            r,
            s0,
            delta_theta,
            lead: DEFAULT_LEAD,
        }
    }

    /// Build from the design units used in tables: millimetres and degrees.
    pub fn from_mm_deg(r_mm: f64, s0_mm: f64, delta_theta_deg: f64) -> Self {
        Self::new(r_mm / 1000.0, s0_mm / 1000.0, delta_theta_deg.to_radians())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(ModelError::invalid("r", format!("crank length must be > 0, got {} m", self.r)));
        }
        if !(self.s0.is_finite() && self.s0 > self.r) {
            return Err(ModelError::invalid(
                "S0",
                format!("frame length must exceed the crank length r = {} m, got {} m", self.r, self.s0),
            ));
        }
        if !(self.lead.is_finite() && self.lead > 0.0) {
            return Err(ModelError::invalid("Q", format!("screw lead must be > 0, got {} m", self.lead)));
        }
        if !(self.delta_theta.abs() <= DELTA_THETA_LIMIT) {
            return Err(ModelError::invalid(
                "delta_theta",
                format!("must lie in [-pi/6, pi/6], got {} rad", self.delta_theta),
            ));
        }
        Ok(())
    }

    /// Crank angle for a knee angle: `theta = q2 + pi - delta_theta`.
    pub fn crank_angle(&self, q2: f64) -> f64 {
        q2 + PI - self.delta_theta
    }

    /// Knee angle for a crank angle: `q2 = theta - pi + delta_theta`.
    pub fn joint_angle(&self, theta: f64) -> f64 {
        theta - PI + self.delta_theta
    }

    fn radicand(&self, theta: f64) -> f64 {
        let (r, s0) = (self.r, self.s0);
        let c = theta.cos();
        2.0 * s0 * r - 2.0 * r * r * c + s0 * s0 + 2.0 * r * r - 2.0 * s0 * r * c
    }

    /// Actuator rod length at a crank angle (m).
    pub fn rod_length(&self, theta: f64) -> Result<f64> {
        let radicand = self.radicand(theta);
        if !(radicand > 0.0) {
            return Err(ModelError::DegenerateGeometry {
                r: self.r,
                s0: self.s0,
                theta,
                radicand,
            });
        }
        Ok(radicand.sqrt())
    }

    /// Motor radians per knee radian. Defined on crank angles `[0, pi]`; the
    /// ratio vanishes at both dead points.
    pub fn reduction_ratio(&self, q2: f64) -> Result<f64> {
        let theta = self.crank_angle(q2);
        if !(0.0..=PI).contains(&theta) {
            return Err(ModelError::CrankRange {
                q2,
                theta,
                range: "[0, pi]".to_string(),
            });
        }
        let rod = self.rod_length(theta)?;
        Ok(2.0 * PI * self.r * (self.s0 + self.r) * theta.sin() / (self.lead * rod))
    }

    /// Rejects knee intervals whose crank angles leave
    /// `(THETA_GUARD_MIN, THETA_GUARD_MAX)`.
    pub fn check_working_range(&self, q2_lo: f64, q2_hi: f64) -> Result<()> {
        for q2 in [q2_lo, q2_hi] {
            let theta = self.crank_angle(q2);
            if !(theta > THETA_GUARD_MIN && theta < THETA_GUARD_MAX) {
                return Err(ModelError::CrankRange {
                    q2,
                    theta,
                    range: format!("({THETA_GUARD_MIN}, pi - 0.001)"),
                });
            }
        }
        Ok(())
    }
}

/// Constant-ratio baseline knee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrrParams {
    /// Motor radians per joint radian.
    pub k_fixed: f64,
}

impl FrrParams {
    pub fn new(k_fixed: f64) -> Self {
        Self { k_fixed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_fixed.is_finite() && self.k_fixed > 0.0) {
            return Err(ModelError::invalid("k_fixed", format!("must be > 0, got {}", self.k_fixed)));
        }
        Ok(())
    }
}

/// Either knee transmission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Transmission {
    Variable(VrrParams),
    Fixed(FrrParams),
}

impl Transmission {
    pub fn ratio(&self, q2: f64) -> Result<f64> {
        match self {
            Transmission::Variable(p) => p.reduction_ratio(q2),
            Transmission::Fixed(p) => Ok(p.k_fixed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Transmission::Variable(p) => p.validate(),
            Transmission::Fixed(p) => p.validate(),
        }
    }

    pub fn check_working_range(&self, q2_lo: f64, q2_hi: f64) -> Result<()> {
        match self {
            Transmission::Variable(p) => p.check_working_range(q2_lo, q2_hi),
            Transmission::Fixed(_) => Ok(()),
        }
    }

    pub fn crank_angle(&self, q2: f64) -> Option<f64> {
        match self {
            Transmission::Variable(p) => Some(p.crank_angle(q2)),
            Transmission::Fixed(_) => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Transmission::Variable(_) => "EVRR-K",
            Transmission::Fixed(_) => "FRR-K",
        }
    }
}

impl From<VrrParams> for Transmission {
    fn from(p: VrrParams) -> Self {
        Transmission::Variable(p)
    }
}

impl From<FrrParams> for Transmission {
    fn from(p: FrrParams) -> Self {
        Transmission::Fixed(p)
    }
}

/// Sampled reduction ratio over a knee interval, with its refined peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCurve {
    /// `(q2, k)` pairs with strictly increasing `q2`.
    pub samples: Vec<(f64, f64)>,
    pub argmax_q2: f64,
    pub k_max: f64,
}

/// Uniformly samples `n` points of the reduction ratio on `[q2_lo, q2_hi]`,
/// then refines the peak with a golden-section search around the best sample.
pub fn ratio_curve(params: &VrrParams, q2_lo: f64, q2_hi: f64, n: usize) -> Result<RatioCurve> {
    if n < 2 {
        return Err(ModelError::invalid("n", format!("at least 2 samples required, got {n}")));
    }
    if !(q2_lo < q2_hi) {
        return Err(ModelError::invalid(
            "q2_lo",
            format!("must be below q2_hi ({q2_lo} >= {q2_hi})"),
        ));
    }
    let step = (q2_hi - q2_lo) / (n - 1) as f64;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let q2 = if i == n - 1 { q2_hi } else { q2_lo + step * i as f64 };
        let k = params.reduction_ratio(q2).map_err(|e| ModelError::Sample {
            index: i,
            source: Box::new(e),
        })?;
        samples.push((q2, k));
    }

    let best = samples
        .iter()
        .enumerate()
        .fold(0, |best, (i, s)| if s.1 > samples[best].1 { i } else { best });
    let lo = samples[best.saturating_sub(1)].0;
    let hi = samples[(best + 1).min(n - 1)].0;
    let (mut argmax_q2, mut k_max) = samples[best];
    let refined = golden_section_max(|q| params.reduction_ratio(q).unwrap_or(f64::NEG_INFINITY), lo, hi);
    let k_refined = params.reduction_ratio(refined)?;
    if k_refined > k_max {
        argmax_q2 = refined;
        k_max = k_refined;
    }
    Ok(RatioCurve {
        samples,
        argmax_q2,
        k_max,
    })
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > GOLDEN_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Motor-to-CoM ratio `k(q2) * lambda(q2)` (rad/m).
pub fn effective_overall_ratio(transmission: &Transmission, leg: &LegModel, q2: f64, cap: f64) -> Result<f64> {
    let lambda = leg.knee_to_com_ratio(q2, cap)?;
    Ok(transmission.ratio(q2)? * lambda)
}
