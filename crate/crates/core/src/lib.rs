//! Modelling and design optimisation of a humanoid knee whose reduction ratio
//! varies with joint angle.
//!
//! The crate is organised bottom-up:
//!
//! - [`leg`]: simplified one-DOF leg kinematics (CoM Jacobian, knee-to-CoM ratio)
//! - [`mechanism`]: guide-rod linkage reduction ratio and the fixed-ratio baseline
//! - [`motor`]: PMSM torque/power envelope, losses and transmission efficiency
//! - [`sim`]: maximum-effort takeoff simulation and takeoff energy / jump height
//! - [`optimizer`]: exhaustive parameter search and the variable-vs-fixed comparison

pub mod error;
pub mod integrator;
pub mod leg;
pub mod mechanism;
pub mod motor;
pub mod optimizer;
pub mod sim;
pub mod units;

pub use error::ModelError;
pub use leg::{JacobianMode, KneeState, LegModel, DEFAULT_Q2_CAP};
pub use mechanism::{effective_overall_ratio, ratio_curve, FrrParams, RatioCurve, Transmission, VrrParams};
pub use motor::{EnvelopePoint, MotorParams};
pub use optimizer::{
    compare_designs, optimize_frr, optimize_vrr, select_best, AngleComparison, AxisRange, DesignOutcome,
    Evaluation, OptError, OptResult, SearchBox, Workers,
};
pub use sim::{
    ballistic_check, contact_force, jump_height, simulate_jump, simulate_takeoff, takeoff_energy,
    BallisticReport, SimConfig, SimError, SimState, TakeoffResult, TakeoffRule, Termination,
};
