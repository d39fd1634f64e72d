//! Explosive vertical takeoff under a maximum-effort torque command.
//!
//! The leg is reduced to a point mass `m_tot` at the CoM, pushed by
//! `F = tau_J * lambda(q2)` against gravity. Link and reflected actuator
//! inertia are neglected. The knee cannot flex past its initial angle (a hard
//! stop), so an actuator too weak to lift the body leaves it at rest.
//!
//! Integration runs in CoM coordinates `(y, dy, w_motor)` with fixed-step
//! RK4; the knee state is recovered as `q2 = -2 acos(y / y_s)` and
//! `dq2 = dy * lambda(q2)`. Near full extension `dq2` grows without bound
//! while `k * lambda` stays finite, so the CoM form is the well-conditioned
//! one. Takeoff events are located inside the last step by bisection on the
//! sub-step length.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ModelError;
use crate::integrator::rk4_step;
use crate::leg::{KneeState, LegModel, DEFAULT_Q2_CAP};
use crate::mechanism::Transmission;
use crate::motor::MotorParams;

const EVENT_BISECTIONS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TakeoffRule {
    ContactForceZero,
    AngleCap,
    #[default]
    Either,
}

impl TakeoffRule {
    fn watches_contact(self) -> bool {
        matches!(self, TakeoffRule::ContactForceZero | TakeoffRule::Either)
    }

    fn watches_cap(self) -> bool {
        matches!(self, TakeoffRule::AngleCap | TakeoffRule::Either)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Initial knee angle (rad); the leg starts at rest here.
    pub q2_init: f64,
    /// Integration step (s).
    pub dt: f64,
    /// Horizon (s).
    pub t_max: f64,
    /// Extension cap (rad).
    pub q2_takeoff_cap: f64,
    pub takeoff_rule: TakeoffRule,
}

impl SimConfig {
    pub fn new(q2_init: f64) -> Self {
        Self {
            q2_init,
            dt: 1e-4,
            t_max: 1.0,
            q2_takeoff_cap: DEFAULT_Q2_CAP,
            takeoff_rule: TakeoffRule::Either,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(ModelError::invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.t_max.is_finite() && self.t_max >= 10.0 * self.dt) {
            return Err(ModelError::invalid(
                "t_max",
                format!("must be at least 10 * dt = {}, got {}", 10.0 * self.dt, self.t_max),
            ));
        }
        if !(self.q2_takeoff_cap <= -0.01) {
            return Err(ModelError::invalid(
                "q2_takeoff_cap",
                format!("must be <= -0.01 rad, got {}", self.q2_takeoff_cap),
            ));
        }
        if !(self.q2_init >= -std::f64::consts::PI && self.q2_init < self.q2_takeoff_cap) {
            return Err(ModelError::invalid(
                "q2_init",
                format!(
                    "must lie in [-pi, q2_takeoff_cap = {}), got {}",
                    self.q2_takeoff_cap, self.q2_init
                ),
            ));
        }
        Ok(())
    }
}

/// One recorded sample of the takeoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub t: f64,
    pub q2: f64,
    pub dq2: f64,
    pub y_com: f64,
    pub dy_com: f64,
    /// Reduction ratio at `q2`.
    pub k: f64,
    /// Knee-to-CoM ratio at `q2` (rad/m).
    pub lambda: f64,
    pub tau_m: f64,
    pub tau_j: f64,
    /// Motor speed (rad/s).
    pub omega_m: f64,
    pub p_m: f64,
    pub p_j: f64,
    pub f_contact: f64,
    /// Cumulative motor work (J).
    pub w_motor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ContactForceZero,
    AngleCap,
    Timeout,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ContactForceZero => "contact_force_zero",
            Termination::AngleCap => "angle_cap",
            Termination::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TakeoffResult {
    pub w_takeoff: f64,
    pub h_jump: f64,
    pub t_takeoff: f64,
    pub q2_at_takeoff: f64,
    pub terminated_by: Termination,
    /// Motor work delivered up to takeoff (J).
    pub w_motor: f64,
    /// Largest motor speed magnitude seen during the run (rad/s).
    pub max_motor_speed: f64,
    /// Empty when the run was not recorded.
    pub trajectory: Vec<SimState>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation input: {0}")]
    InvalidInput(#[source] ModelError),

    #[error("mechanism working range violated: {0}")]
    WorkingRange(#[source] ModelError),

    #[error("simulation left the valid state space at t = {:.6} s (q2 = {:.6} rad): {reason}", last_state.t, last_state.q2)]
    Diverged {
        reason: String,
        last_state: Box<SimState>,
    },
}

/// Ground reaction needed for a CoM acceleration (N).
pub fn contact_force(leg: &LegModel, ddy_com: f64) -> f64 {
    leg.total_mass() * (ddy_com + leg.g)
}

/// Kinetic plus potential energy of the CoM (J).
pub fn takeoff_energy(leg: &LegModel, q2: f64, dy_com: f64) -> Result<f64, ModelError> {
    let m = leg.total_mass();
    Ok(0.5 * m * dy_com * dy_com + m * leg.g * leg.com_height(q2)?)
}

/// Rise of the CoM above its fully-extended standing height for a takeoff
/// energy (m). Negative when the energy cannot even reach standing height.
pub fn jump_height(leg: &LegModel, w_takeoff: f64) -> f64 {
    w_takeoff / (leg.total_mass() * leg.g) - leg.standing_height()
}

/// Forward-simulates the takeoff and records every step.
pub fn simulate_jump(
    leg: &LegModel,
    motor: &MotorParams,
    transmission: &Transmission,
    cfg: &SimConfig,
) -> Result<TakeoffResult, SimError> {
    JumpModel::new(leg, motor, transmission, cfg)?.run(true)
}

/// Same integration as [`simulate_jump`] without storing the trajectory.
pub fn simulate_takeoff(
    leg: &LegModel,
    motor: &MotorParams,
    transmission: &Transmission,
    cfg: &SimConfig,
) -> Result<TakeoffResult, SimError> {
    JumpModel::new(leg, motor, transmission, cfg)?.run(false)
}

/// Instantaneous channels at a CoM state.
#[derive(Debug, Clone, Copy)]
struct Channels {
    q2: f64,
    dq2: f64,
    k: f64,
    lambda: f64,
    omega_m: f64,
    tau_m: f64,
    tau_j: f64,
    /// Acceleration with the drive force and gravity only.
    ddy_free: f64,
}

struct JumpModel<'a> {
    leg: &'a LegModel,
    motor: &'a MotorParams,
    transmission: &'a Transmission,
    cfg: &'a SimConfig,
    mass: f64,
    y_init: f64,
    y_cap: f64,
}

impl<'a> JumpModel<'a> {
    fn new(
        leg: &'a LegModel,
        motor: &'a MotorParams,
        transmission: &'a Transmission,
        cfg: &'a SimConfig,
    ) -> Result<Self, SimError> {
        leg.validate().map_err(SimError::InvalidInput)?;
        cfg.validate().map_err(SimError::InvalidInput)?;
        transmission.validate().map_err(SimError::InvalidInput)?;
        transmission
            .check_working_range(cfg.q2_init, cfg.q2_takeoff_cap)
            .map_err(SimError::WorkingRange)?;
        let y_init = leg.com_height(cfg.q2_init).map_err(SimError::InvalidInput)?;
        let y_cap = leg.com_height(cfg.q2_takeoff_cap).map_err(SimError::InvalidInput)?;
        Ok(Self {
            leg,
            motor,
            transmission,
            cfg,
            mass: leg.total_mass(),
            y_init,
            y_cap,
        })
    }

    fn channels(&self, y: f64, dy: f64) -> Result<Channels, ModelError> {
        let q2 = self.leg.knee_angle_at_height(y)?;
        let jac = self.leg.jacobian_unchecked(q2);
        if !(jac > 0.0) {
            return Err(ModelError::Singularity {
                q2,
                cap: self.cfg.q2_takeoff_cap,
            });
        }
        let lambda = 1.0 / jac;
        let dq2 = dy * lambda;
        let k = self.transmission.ratio(q2)?;
        let omega_m = k * dq2;
        let tau_m = self.motor.torque_available(omega_m.abs());
        let tau_j = self.motor.joint_torque(tau_m, k);
        Ok(Channels {
            q2,
            dq2,
            k,
            lambda,
            omega_m,
            tau_m,
            tau_j,
            ddy_free: tau_j * lambda / self.mass - self.leg.g,
        })
    }

    fn derivative(&self, x: &[f64; 3]) -> Option<[f64; 3]> {
        let c = self.channels(x[0], x[1]).ok()?;
        Some([x[1], c.ddy_free, c.tau_m * c.omega_m])
    }

    /// Sits on the hard stop with no net upward drive.
    fn resting(&self, x: &[f64; 3], c: &Channels) -> bool {
        x[0] <= self.y_init && x[1] <= 0.0 && c.ddy_free <= 0.0
    }

    fn sample(&self, t: f64, x: &[f64; 3]) -> Result<SimState, ModelError> {
        let c = self.channels(x[0], x[1])?;
        let ddy = if self.resting(x, &c) { 0.0 } else { c.ddy_free };
        let p_m = c.tau_m * c.omega_m;
        Ok(SimState {
            t,
            q2: c.q2,
            dq2: c.dq2,
            y_com: x[0],
            dy_com: x[1],
            k: c.k,
            lambda: c.lambda,
            tau_m: c.tau_m,
            tau_j: c.tau_j,
            omega_m: c.omega_m,
            p_m,
            p_j: c.tau_j * c.dq2,
            f_contact: contact_force(self.leg, ddy),
            w_motor: x[2],
        })
    }

    /// Which event, if any, a trial end state has crossed.
    fn crossing(&self, x: &Option<[f64; 3]>) -> Crossing {
        let Some(x) = x else { return Crossing::Invalid };
        let Ok(c) = self.channels(x[0], x[1]) else {
            return Crossing::Invalid;
        };
        let rule = self.cfg.takeoff_rule;
        if rule.watches_contact() && contact_force(self.leg, c.ddy_free) <= 0.0 {
            return Crossing::Event(Termination::ContactForceZero);
        }
        if x[0] >= self.y_cap {
            return if rule.watches_cap() {
                Crossing::Event(Termination::AngleCap)
            } else {
                Crossing::Invalid
            };
        }
        if x[0] < self.y_init {
            return Crossing::Stop;
        }
        Crossing::None
    }

    fn run(&self, record: bool) -> Result<TakeoffResult, SimError> {
        let f = |x: &[f64; 3]| self.derivative(x);
        let dt = self.cfg.dt;
        let n_steps = (self.cfg.t_max / dt).ceil() as usize;
        let mut x = [self.y_init, 0.0, 0.0];
        let mut t = 0.0;
        let mut trajectory = Vec::new();
        let mut max_speed: f64 = 0.0;
        let mut terminated_by = Termination::Timeout;

        let push = |t: f64, x: &[f64; 3], traj: &mut Vec<SimState>, max_speed: &mut f64| {
            let s = self.sample(t, x).map_err(|e| SimError::Diverged {
                reason: e.to_string(),
                last_state: Box::new(traj.last().copied().unwrap_or_else(|| self.rest_state())),
            })?;
            *max_speed = max_speed.max(s.omega_m.abs());
            if record {
                traj.push(s);
            }
            Ok::<SimState, SimError>(s)
        };

        let mut last = push(t, &x, &mut trajectory, &mut max_speed)?;
        for i in 1..=n_steps {
            let c = self.channels(x[0], x[1]).map_err(|e| self.diverged(e.to_string(), &last))?;
            if self.resting(&x, &c) {
                x = [self.y_init, 0.0, x[2]];
                t = i as f64 * dt;
                last = push(t, &x, &mut trajectory, &mut max_speed)?;
                continue;
            }

            let trial = rk4_step(&f, &x, dt);
            match self.crossing(&trial) {
                Crossing::None => {
                    x = trial.expect("valid trial step");
                    t = i as f64 * dt;
                    last = push(t, &x, &mut trajectory, &mut max_speed)?;
                }
                _ => {
                    let (h, end, kind) = self.locate_event(&f, &x, dt);
                    t += h;
                    match kind {
                        Crossing::Event(term) => {
                            x = end;
                            terminated_by = term;
                            last = push(t, &x, &mut trajectory, &mut max_speed)?;
                            break;
                        }
                        Crossing::Stop => {
                            // inelastic landing back on the stop
                            x = [self.y_init, 0.0, end[2]];
                            last = push(t, &x, &mut trajectory, &mut max_speed)?;
                            let remaining = i as f64 * dt - t;
                            if remaining > 0.0 {
                                t = i as f64 * dt;
                                last = push(t, &x, &mut trajectory, &mut max_speed)?;
                            }
                        }
                        Crossing::Invalid | Crossing::None => {
                            let state = self.sample(t, &end).unwrap_or(last);
                            let reason = match self.channels(end[0], end[1]) {
                                Err(e) => e.to_string(),
                                Ok(_) if end[0] >= self.y_cap => {
                                    "passed the extension cap while still in contact".to_string()
                                }
                                Ok(_) => "integration step became undefined".to_string(),
                            };
                            return Err(SimError::Diverged {
                                reason,
                                last_state: Box::new(state),
                            });
                        }
                    }
                }
            }
        }

        let q2 = last.q2;
        let w_takeoff = 0.5 * self.mass * last.dy_com * last.dy_com + self.mass * self.leg.g * last.y_com;
        Ok(TakeoffResult {
            w_takeoff,
            h_jump: jump_height(self.leg, w_takeoff),
            t_takeoff: last.t,
            q2_at_takeoff: q2,
            terminated_by,
            w_motor: last.w_motor,
            max_motor_speed: max_speed,
            trajectory,
        })
    }

    /// Bisects the sub-step length for the first crossing inside `(0, dt]`.
    /// Returns the sub-step, the state at the crossing and its kind. For an
    /// invalid crossing the returned state is the last valid one.
    fn locate_event<F>(&self, f: &F, x: &[f64; 3], dt: f64) -> (f64, [f64; 3], Crossing)
    where
        F: Fn(&[f64; 3]) -> Option<[f64; 3]>,
    {
        let (mut lo, mut hi) = (0.0, dt);
        let mut lo_state = *x;
        for _ in 0..EVENT_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let trial = rk4_step(f, x, mid);
            match self.crossing(&trial) {
                Crossing::None => {
                    lo = mid;
                    lo_state = trial.expect("valid trial step");
                }
                _ => hi = mid,
            }
        }
        let end = rk4_step(f, x, hi);
        match self.crossing(&end) {
            Crossing::Invalid | Crossing::None => (lo, lo_state, Crossing::Invalid),
            kind => (hi, end.expect("valid event state"), kind),
        }
    }

    fn rest_state(&self) -> SimState {
        SimState {
            t: 0.0,
            q2: self.cfg.q2_init,
            dq2: 0.0,
            y_com: self.y_init,
            dy_com: 0.0,
            k: f64::NAN,
            lambda: f64::NAN,
            tau_m: 0.0,
            tau_j: 0.0,
            omega_m: 0.0,
            p_m: 0.0,
            p_j: 0.0,
            f_contact: self.mass * self.leg.g,
            w_motor: 0.0,
        }
    }

    fn diverged(&self, reason: String, last: &SimState) -> SimError {
        SimError::Diverged {
            reason,
            last_state: Box::new(*last),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Crossing {
    None,
    Event(Termination),
    Stop,
    Invalid,
}

/// Outcome of [`ballistic_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallisticReport {
    /// Largest `|E(t) - E(0)| / E(0)` over the integrated window.
    pub max_rel_drift: f64,
    /// Portion of the requested window actually integrated (s).
    pub integrated: f64,
}

/// Integrates the unpowered leg in joint coordinates, recovering the knee
/// acceleration from the free-fall CoM acceleration (`ddy = -g`) through
/// `ddq2 = (ddy - J' dq2^2) / J`, and reports the energy drift.
///
/// The knee rests on a hard stop at the starting angle, as in
/// [`simulate_jump`]: a state at rest stays pinned with zero drift. The
/// window ends early if the flight returns to the stop or reaches the
/// default extension cap.
pub fn ballistic_check(
    leg: &LegModel,
    state: &KneeState,
    duration: f64,
    dt: f64,
) -> Result<BallisticReport, ModelError> {
    leg.validate()?;
    let start = KneeState::new(state.q2, state.dq2)?;
    if !(dt > 0.0 && duration >= 0.0) {
        return Err(ModelError::invalid("dt", "dt must be > 0 and duration >= 0"));
    }
    let energy = |x: &[f64; 2]| -> Option<f64> {
        let dy = leg.com_jacobian(x[0]).ok()? * x[1];
        takeoff_energy(leg, x[0], dy).ok()
    };
    let e0 = energy(&[start.q2, start.dq2]).expect("validated state");
    if start.dq2 <= 0.0 {
        return Ok(BallisticReport {
            max_rel_drift: 0.0,
            integrated: duration,
        });
    }
    let f = |x: &[f64; 2]| -> Option<[f64; 2]> {
        if !(x[0] < 0.0 && x[0] >= -std::f64::consts::PI) {
            return None;
        }
        let jac = leg.jacobian_unchecked(x[0]);
        let slope = leg.jacobian_slope(x[0]).ok()?;
        Some([x[1], (-leg.g - slope * x[1] * x[1]) / jac])
    };
    let n = (duration / dt).round() as usize;
    let mut x = [start.q2, start.dq2];
    let mut drift: f64 = 0.0;
    let mut integrated = 0.0;
    for i in 1..=n {
        let Some(next) = rk4_step(&f, &x, dt) else { break };
        if next[0] < start.q2 || next[0] > DEFAULT_Q2_CAP {
            break;
        }
        x = next;
        integrated = i as f64 * dt;
        let e = energy(&x).expect("state inside the domain");
        drift = drift.max(((e - e0) / e0).abs());
    }
    Ok(BallisticReport {
        max_rel_drift: drift,
        integrated,
    })
}
