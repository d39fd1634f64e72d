//! Simplified one-DOF leg: the knee is the only actuated joint, the hip and
//! ankle are passive and the torso is constrained to vertical motion.
//!
//! Every quantity here is a closed-form function of the knee angle `q2`
//! (0 = fully extended, negative = flexed). The CoM height is
//! `y(q2) = y_s * cos(q2 / 2)` and its Jacobian magnitude is
//! `J(q2) = (y_s / 2) * |sin(q2 / 2)|`, where the standing height `y_s`
//! depends on the [`JacobianMode`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Default guard on the knee-to-CoM ratio, which diverges at full extension.
pub const DEFAULT_Q2_CAP: f64 = -0.05;

/// Standard gravity used by the reference configurations (m/s^2).
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Scaling of the CoM Jacobian.
///
/// Both modes share the mass-weighted lever
/// `C = [a1*m1 + (l1 + a2)*m2 + (l1 + l2)*m3] / (m1 + m2 + m3)`.
/// `PaperLiteral` uses `C * |sin(q2/2)|` verbatim, which implies a standing
/// CoM height of `2C`. `Geometric` uses `(C/2) * |sin(q2/2)|`, consistent
/// with a hip height of `(l1 + l2) * cos(q2/2)` and a standing height of `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    PaperLiteral,
    #[default]
    Geometric,
}

impl JacobianMode {
    fn factor(self) -> f64 {
        match self {
            JacobianMode::PaperLiteral => 1.0,
            JacobianMode::Geometric => 0.5,
        }
    }
}

/// Link lengths, CoM offsets and masses of the simplified leg, in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegModel {
    /// Shank length (m).
    pub l1: f64,
    /// Thigh length (m).
    pub l2: f64,
    /// Shank CoM distance from the ankle (m).
    pub a1: f64,
    /// Thigh CoM distance from the knee (m).
    pub a2: f64,
    /// Shank mass (kg).
    pub m1: f64,
    /// Thigh mass (kg).
    pub m2: f64,
    /// Torso mass (kg).
    pub m3: f64,
    /// Gravitational acceleration (m/s^2).
    pub g: f64,
    pub jacobian_mode: JacobianMode,
}

impl LegModel {
    /// Full-scale humanoid leg: 0.45 m links with uniform mass distribution,
    /// 2.5 / 5 / 20 kg shank / thigh / torso.
    pub fn full_scale_humanoid() -> Self {
        Self {
            l1: 0.45,
            l2: 0.45,
            a1: 0.225,
            a2: 0.225,
            m1: 2.5,
            m2: 5.0,
            m3: 20.0,
            g: STANDARD_GRAVITY,
            jacobian_mode: JacobianMode::default(),
        }
    }

    /// Single-joint test platform: 0.42 m links, 3.16 / 1.77 / 20 kg.
    pub fn single_joint_platform() -> Self {
        Self {
            l1: 0.42,
            l2: 0.42,
            a1: 0.21,
            a2: 0.21,
            m1: 3.16,
            m2: 1.77,
            m3: 20.0,
            g: STANDARD_GRAVITY,
            jacobian_mode: JacobianMode::default(),
        }
    }

    pub fn with_mode(mut self, mode: JacobianMode) -> Self {
        self.jacobian_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("l1", self.l1),
            ("l2", self.l2),
            ("m1", self.m1),
            ("m2", self.m2),
            ("m3", self.m3),
            ("g", self.g),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::invalid(name, format!("must be > 0, got {value}")));
            }
        }
        if !(0.0..=self.l1).contains(&self.a1) {
            return Err(ModelError::invalid(
                "a1",
                format!("must lie in [0, l1 = {}], got {}", self.l1, self.a1),
            ));
        }
        if !(0.0..=self.l2).contains(&self.a2) {
            return Err(ModelError::invalid(
                "a2",
                format!("must lie in [0, l2 = {}], got {}", self.l2, self.a2),
            ));
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.m1 + self.m2 + self.m3
    }

    /// Mass-weighted CoM lever `C` shared by both Jacobian modes (m).
    pub fn com_lever(&self) -> f64 {
        (self.a1 * self.m1 + (self.l1 + self.a2) * self.m2 + (self.l1 + self.l2) * self.m3)
            / self.total_mass()
    }

    /// CoM height with the leg fully extended, `y_CoM,s` (m).
    pub fn standing_height(&self) -> f64 {
        2.0 * self.jacobian_mode.factor() * self.com_lever()
    }

    /// Magnitude of `d y_CoM / d q2` (m/rad).
    pub fn com_jacobian(&self, q2: f64) -> Result<f64> {
        check_knee_domain(q2)?;
        Ok(self.jacobian_unchecked(q2))
    }

    /// Derivative of [`LegModel::com_jacobian`] with respect to `q2`, so that
    /// the Jacobian's time derivative is `jacobian_slope(q2) * dq2`.
    pub fn jacobian_slope(&self, q2: f64) -> Result<f64> {
        check_knee_domain(q2)?;
        Ok(-0.25 * self.standing_height() * (0.5 * q2).cos())
    }

    /// CoM height above the ankle (m); the antiderivative of the Jacobian,
    /// maximal at full extension.
    pub fn com_height(&self, q2: f64) -> Result<f64> {
        check_knee_domain(q2)?;
        Ok(self.standing_height() * (0.5 * q2).cos())
    }

    /// Inverse of [`LegModel::com_height`] on `[-pi, 0]`.
    pub fn knee_angle_at_height(&self, y_com: f64) -> Result<f64> {
        let ys = self.standing_height();
        if !(0.0..=ys).contains(&y_com) {
            return Err(ModelError::Domain {
                quantity: "y_com",
                value: y_com,
                domain: format!("[0, {ys}]"),
            });
        }
        Ok(-2.0 * (y_com / ys).acos())
    }

    /// Knee-to-CoM transmission ratio `lambda = 1 / J` (rad/m). The cap is
    /// inclusive: `q2 == cap` is accepted, anything above it is singular.
    pub fn knee_to_com_ratio(&self, q2: f64, cap: f64) -> Result<f64> {
        check_knee_domain(q2)?;
        if q2 > cap {
            return Err(ModelError::Singularity { q2, cap });
        }
        let j = self.jacobian_unchecked(q2);
        if j <= 0.0 {
            return Err(ModelError::Singularity { q2, cap });
        }
        Ok(1.0 / j)
    }

    /// Signed vertical CoM velocity (m/s); positive for extension.
    pub fn com_velocity(&self, state: &KneeState) -> Result<f64> {
        Ok(self.com_jacobian(state.q2)? * state.dq2)
    }

    /// Upward force on the CoM produced by a knee torque, before gravity (N).
    pub fn com_force(&self, q2: f64, tau_joint: f64, cap: f64) -> Result<f64> {
        Ok(tau_joint * self.knee_to_com_ratio(q2, cap)?)
    }

    pub(crate) fn jacobian_unchecked(&self, q2: f64) -> f64 {
        0.5 * self.standing_height() * (0.5 * q2).sin().abs()
    }
}

/// Knee angle and angular velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KneeState {
    /// rad, 0 = fully extended, negative = flexed.
    pub q2: f64,
    /// rad/s, positive toward extension.
    pub dq2: f64,
}

impl KneeState {
    pub fn new(q2: f64, dq2: f64) -> Result<Self> {
        check_knee_domain(q2)?;
        if !dq2.is_finite() {
            return Err(ModelError::invalid("dq2", "must be finite"));
        }
        Ok(Self { q2, dq2 })
    }
}

fn check_knee_domain(q2: f64) -> Result<()> {
    if (-PI..=0.0).contains(&q2) {
        Ok(())
    } else {
        Err(ModelError::Domain {
            quantity: "q2",
            value: q2,
            domain: "[-pi, 0]".to_string(),
        })
    }
}
