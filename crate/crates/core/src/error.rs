use thiserror::Error;

/// Errors raised by the kinematic, mechanism, motor and simulation models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{quantity} = {value} is outside the valid domain {domain}")]
    Domain {
        quantity: &'static str,
        value: f64,
        domain: String,
    },

    #[error("knee-to-CoM ratio is singular at q2 = {q2} rad (guard cap is {cap} rad)")]
    Singularity { q2: f64, cap: f64 },

    #[error("crank angle theta = {theta} rad (q2 = {q2} rad) is outside the working range {range}")]
    CrankRange { q2: f64, theta: f64, range: String },

    #[error("degenerate linkage geometry (r = {r} m, S0 = {s0} m, theta = {theta} rad): radicand {radicand} <= 0")]
    DegenerateGeometry {
        r: f64,
        s0: f64,
        theta: f64,
        radicand: f64,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("ratio curve sample {index} failed: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<ModelError>,
    },
}

impl ModelError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        ModelError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
