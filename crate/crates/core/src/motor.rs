//! Parametric PMSM output model.
//!
//! The torque envelope has three regions: constant peak torque up to
//! `omega_break` (current limited), constant power `p_peak / omega` above it,
//! and a linear derating of that power-limited torque to zero between
//! `omega_hpl` and `omega_max` where losses dominate.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::units::rpm_to_rad_s;

/// Relative tolerance of the corner-speed and torque-constant consistency checks.
const CONSISTENCY_TOL: f64 = 0.02;

/// Fraction of `omega_max` at which high-speed derating starts by default.
pub const DEFAULT_HPL_FRACTION: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorParams {
    /// Peak torque (Nm).
    pub tau_peak: f64,
    /// Peak q-axis current (A).
    pub i_q_peak: f64,
    /// Torque constant (Nm/A).
    pub k_t: f64,
    /// Peak mechanical output power (W).
    pub p_peak: f64,
    /// Onset of the power-limited region (rad/s).
    pub omega_break: f64,
    /// Onset of the high-speed derating (rad/s).
    pub omega_hpl: f64,
    /// Zero-torque speed (rad/s).
    pub omega_max: f64,
    /// Effective winding resistance for copper loss (ohm).
    pub r_phase: f64,
    /// Speed-proportional iron/mechanical loss coefficient (W s/rad).
    pub c_iron1: f64,
    /// Speed-squared iron/mechanical loss coefficient (W s^2/rad^2).
    pub c_iron2: f64,
    /// Transmission efficiency from motor to joint.
    pub eta_j: f64,
}

impl MotorParams {
    /// 72 V TQ-ILM8526 knee motor: 9.37 Nm peak torque, 1.5 kW peak power,
    /// 92 A peak q-axis current, no-load speed taken as 4800 rpm.
    ///
    /// The loss coefficients are chosen so that the loss at peak current and
    /// `omega_max` equals `p_peak`, i.e. the whole power budget is consumed and
    /// no output remains at the zero-torque speed.
    pub fn tq_ilm8526() -> Self {
        let tau_peak = 9.37;
        let i_q_peak = 92.0;
        let p_peak = 1500.0;
        let omega_max = rpm_to_rad_s(4800.0);
        Self {
            tau_peak,
            i_q_peak,
            k_t: tau_peak / i_q_peak,
            p_peak,
            omega_break: p_peak / tau_peak,
            omega_hpl: DEFAULT_HPL_FRACTION * omega_max,
            omega_max,
            r_phase: 0.05,
            c_iron1: 0.5738,
            c_iron2: 0.002283,
            eta_j: 0.90,
        }
    }

    /// Same motor with a different peak torque; the corner speed and peak
    /// current follow so the envelope stays consistent.
    pub fn with_peak_torque(mut self, tau_peak: f64) -> Self {
        self.tau_peak = tau_peak;
        self.omega_break = self.p_peak / tau_peak;
        self.i_q_peak = tau_peak / self.k_t;
        self
    }

    /// Same motor with a different peak power; the corner speed follows.
    pub fn with_peak_power(mut self, p_peak: f64) -> Self {
        self.p_peak = p_peak;
        self.omega_break = p_peak / self.tau_peak;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tau_peak", self.tau_peak),
            ("i_q_peak", self.i_q_peak),
            ("k_t", self.k_t),
            ("p_peak", self.p_peak),
            ("omega_break", self.omega_break),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModelError::invalid(name, format!("must be > 0, got {v}")));
            }
        }
        for (name, v) in [("r_phase", self.r_phase), ("c_iron1", self.c_iron1), ("c_iron2", self.c_iron2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ModelError::invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        if !(self.omega_break < self.omega_max && self.omega_max.is_finite()) {
            return Err(ModelError::invalid(
                "omega_max",
                format!("must exceed omega_break = {}, got {}", self.omega_break, self.omega_max),
            ));
        }
        if !(self.omega_hpl >= self.omega_break && self.omega_hpl < self.omega_max) {
            return Err(ModelError::invalid(
                "omega_hpl",
                format!(
                    "must lie in [omega_break, omega_max) = [{}, {}), got {}",
                    self.omega_break, self.omega_max, self.omega_hpl
                ),
            ));
        }
        if !(self.eta_j > 0.0 && self.eta_j <= 1.0) {
            return Err(ModelError::invalid("eta_j", format!("must lie in (0, 1], got {}", self.eta_j)));
        }
        let corner = self.tau_peak * self.omega_break;
        if (corner - self.p_peak).abs() > CONSISTENCY_TOL * self.p_peak {
            return Err(ModelError::invalid(
                "omega_break",
                format!("tau_peak * omega_break = {corner} W must match p_peak = {} W within 2%", self.p_peak),
            ));
        }
        let rated = self.k_t * self.i_q_peak;
        if (rated - self.tau_peak).abs() > CONSISTENCY_TOL * self.tau_peak {
            return Err(ModelError::invalid(
                "k_t",
                format!("k_t * i_q_peak = {rated} Nm must match tau_peak = {} Nm within 2%", self.tau_peak),
            ));
        }
        Ok(())
    }

    /// Maximum deliverable torque at a non-negative motor speed (Nm).
    pub fn max_torque(&self, omega: f64) -> Result<f64> {
        if !(omega.is_finite() && omega >= 0.0) {
            return Err(ModelError::Domain {
                quantity: "omega",
                value: omega,
                domain: "[0, inf)".to_string(),
            });
        }
        Ok(self.torque_available(omega))
    }

    /// Envelope evaluation without the domain check; `speed` is a magnitude.
    pub(crate) fn torque_available(&self, speed: f64) -> f64 {
        if speed >= self.omega_max {
            return 0.0;
        }
        if speed <= self.omega_break {
            return self.tau_peak;
        }
        let limited = self.tau_peak.min(self.p_peak / speed);
        if speed > self.omega_hpl {
            let derate = ((self.omega_max - speed) / (self.omega_max - self.omega_hpl)).clamp(0.0, 1.0);
            limited * derate
        } else {
            limited
        }
    }

    /// Copper plus lumped iron/mechanical loss (W).
    pub fn power_loss(&self, i_q: f64, omega: f64) -> f64 {
        1.5 * self.r_phase * i_q * i_q + self.c_iron1 * omega.abs() + self.c_iron2 * omega * omega
    }

    /// Joint torque through a transmission of ratio `k` (Nm).
    pub fn joint_torque(&self, tau_m: f64, k: f64) -> f64 {
        tau_m * k * self.eta_j
    }

    /// Uniform samples of the envelope on `[0, omega_max]`. Losses are
    /// evaluated at the current needed for the envelope torque.
    pub fn envelope_table(&self, n: usize) -> Result<Vec<EnvelopePoint>> {
        if n < 2 {
            return Err(ModelError::invalid("n", format!("at least 2 samples required, got {n}")));
        }
        let points = (0..n)
            .map(|i| {
                let omega = if i == n - 1 {
                    self.omega_max
                } else {
                    self.omega_max * i as f64 / (n - 1) as f64
                };
                let tau_max = self.torque_available(omega);
                EnvelopePoint {
                    omega,
                    tau_max,
                    p_out: tau_max * omega,
                    p_loss: self.power_loss(tau_max / self.k_t, omega),
                }
            })
            .collect();
        Ok(points)
    }
}

impl Default for MotorParams {
    fn default() -> Self {
        Self::tq_ilm8526()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    /// rad/s
    pub omega: f64,
    /// Nm
    pub tau_max: f64,
    /// W
    pub p_out: f64,
    /// W
    pub p_loss: f64,
}
