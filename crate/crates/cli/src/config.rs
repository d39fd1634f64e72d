//! Run configuration: a single JSON document in design units (mm, degrees,
//! rpm), converted to SI at load time.
//!
//! Every section and key is optional and falls back to the full-scale
//! humanoid reference setup. Unknown keys are rejected. Keys whose default
//! depends on other keys (`k_t`, `omega_break_rpm`, `omega_hpl_rpm`) may be
//! left `null`, in which case they are derived.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use vrrjump_core::mechanism::DEFAULT_LEAD;
use vrrjump_core::motor::DEFAULT_HPL_FRACTION;
use vrrjump_core::units::{m_to_mm, mm_to_m, rpm_to_rad_s};
use vrrjump_core::{
    AxisRange, FrrParams, JacobianMode, LegModel, ModelError, MotorParams, SearchBox, SimConfig, TakeoffRule,
    Transmission, VrrParams, DEFAULT_Q2_CAP,
};

/// Initial knee angles of the reference comparison (rad).
pub const TABLE_ANGLES: [f64; 3] = [-2.6180, -2.2689, -1.9199];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}:{column}: at `{key}`: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        key: String,
        message: String,
    },

    #[error("invalid config: {section}: {source}")]
    Invalid {
        section: &'static str,
        #[source]
        source: ModelError,
    },

    #[error("invalid config: {0}")]
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LegSection {
    pub l1_m: f64,
    pub l2_m: f64,
    pub a1_m: f64,
    pub a2_m: f64,
    pub m1_kg: f64,
    pub m2_kg: f64,
    pub m3_kg: f64,
    pub g_mps2: f64,
    pub jacobian_mode: JacobianMode,
}

impl Default for LegSection {
    fn default() -> Self {
        Self::from(LegModel::full_scale_humanoid())
    }
}

impl From<LegModel> for LegSection {
    fn from(l: LegModel) -> Self {
        Self {
            l1_m: l.l1,
            l2_m: l.l2,
            a1_m: l.a1,
            a2_m: l.a2,
            m1_kg: l.m1,
            m2_kg: l.m2,
            m3_kg: l.m3,
            g_mps2: l.g,
            jacobian_mode: l.jacobian_mode,
        }
    }
}

impl LegSection {
    fn resolve(&self) -> LegModel {
        LegModel {
            l1: self.l1_m,
            l2: self.l2_m,
            a1: self.a1_m,
            a2: self.a2_m,
            m1: self.m1_kg,
            m2: self.m2_kg,
            m3: self.m3_kg,
            g: self.g_mps2,
            jacobian_mode: self.jacobian_mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotorSection {
    pub tau_peak_nm: f64,
    pub i_q_peak_a: f64,
    /// Nm/A; `tau_peak / i_q_peak` when null.
    pub k_t: Option<f64>,
    pub p_peak_w: f64,
    /// `p_peak / tau_peak` when null.
    pub omega_break_rpm: Option<f64>,
    /// 0.75 of `omega_max` when null.
    pub omega_hpl_rpm: Option<f64>,
    pub omega_max_rpm: f64,
    pub r_phase_ohm: f64,
    /// W per rad/s.
    pub c_iron1: f64,
    /// W per (rad/s)^2.
    pub c_iron2: f64,
    pub eta_j: f64,
}

impl Default for MotorSection {
    fn default() -> Self {
        let m = MotorParams::tq_ilm8526();
        Self {
            tau_peak_nm: m.tau_peak,
            i_q_peak_a: m.i_q_peak,
            k_t: None,
            p_peak_w: m.p_peak,
            omega_break_rpm: None,
            omega_hpl_rpm: None,
            omega_max_rpm: 4800.0,
            r_phase_ohm: m.r_phase,
            c_iron1: m.c_iron1,
            c_iron2: m.c_iron2,
            eta_j: m.eta_j,
        }
    }
}

impl MotorSection {
    fn resolve(&self) -> MotorParams {
        let omega_max = rpm_to_rad_s(self.omega_max_rpm);
        MotorParams {
            tau_peak: self.tau_peak_nm,
            i_q_peak: self.i_q_peak_a,
            k_t: self.k_t.unwrap_or(self.tau_peak_nm / self.i_q_peak_a),
            p_peak: self.p_peak_w,
            omega_break: self.omega_break_rpm.map_or(self.p_peak_w / self.tau_peak_nm, rpm_to_rad_s),
            omega_hpl: self.omega_hpl_rpm.map_or(DEFAULT_HPL_FRACTION * omega_max, rpm_to_rad_s),
            omega_max,
            r_phase: self.r_phase_ohm,
            c_iron1: self.c_iron1,
            c_iron2: self.c_iron2,
            eta_j: self.eta_j,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MechanismSection {
    Variable {
        r_mm: f64,
        s0_mm: f64,
        #[serde(default)]
        delta_theta_deg: f64,
        #[serde(default = "default_lead_mm")]
        lead_mm: f64,
    },
    Fixed {
        k_fixed: f64,
    },
}

fn default_lead_mm() -> f64 {
    m_to_mm(DEFAULT_LEAD)
}

impl Default for MechanismSection {
    fn default() -> Self {
        MechanismSection::Variable {
            r_mm: 47.0,
            s0_mm: 150.0,
            delta_theta_deg: 0.0,
            lead_mm: default_lead_mm(),
        }
    }
}

impl MechanismSection {
    fn resolve(&self) -> Transmission {
        match *self {
            MechanismSection::Variable {
                r_mm,
                s0_mm,
                delta_theta_deg,
                lead_mm,
            } => VrrParams {
                r: mm_to_m(r_mm),
                s0: mm_to_m(s0_mm),
                delta_theta: delta_theta_deg.to_radians(),
                lead: mm_to_m(lead_mm),
            }
            .into(),
            MechanismSection::Fixed { k_fixed } => FrrParams::new(k_fixed).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt_s: f64,
    pub t_max_s: f64,
    pub q2_takeoff_cap_rad: f64,
    pub takeoff_rule: TakeoffRule,
}

impl Default for SimSection {
    fn default() -> Self {
        let c = SimConfig::new(TABLE_ANGLES[0]);
        Self {
            dt_s: c.dt,
            t_max_s: c.t_max,
            q2_takeoff_cap_rad: DEFAULT_Q2_CAP,
            takeoff_rule: c.takeoff_rule,
        }
    }
}

/// Inclusive `[min, max, step]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSection {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl RangeSection {
    fn new(min: f64, max: f64, step: f64) -> Self {
        Self { min, max, step }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> AxisRange {
        AxisRange::new(f(self.min), f(self.max), f(self.step))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub r_mm: RangeSection,
    pub s0_mm: RangeSection,
    pub delta_theta_deg: RangeSection,
    pub k_fixed: RangeSection,
    pub lead_mm: f64,
    /// Write every evaluated candidate as CSV.
    pub dump_grid: bool,
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            r_mm: RangeSection::new(25.0, 75.0, 1.0),
            s0_mm: RangeSection::new(100.0, 250.0, 5.0),
            delta_theta_deg: RangeSection::new(-3.0, 3.0, 1.0),
            k_fixed: RangeSection::new(10.0, 40.0, 1.0),
            lead_mm: default_lead_mm(),
            dump_grid: false,
        }
    }
}

impl SearchSection {
    fn resolve(&self) -> SearchBox {
        SearchBox {
            r: self.r_mm.map(mm_to_m),
            s0: self.s0_mm.map(mm_to_m),
            delta_theta: self.delta_theta_deg.map(f64::to_radians),
            k_fixed: self.k_fixed.map(|k| k),
            lead: mm_to_m(self.lead_mm),
        }
    }
}

/// The configuration document as written on disk, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub leg: LegSection,
    pub motor: MotorSection,
    pub mechanism: MechanismSection,
    pub sim: SimSection,
    pub search: SearchSection,
    pub output_dir: PathBuf,
    /// Initial knee angles (rad).
    pub angles: Vec<f64>,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self {
            leg: LegSection::default(),
            motor: MotorSection::default(),
            mechanism: MechanismSection::default(),
            sim: SimSection::default(),
            search: SearchSection::default(),
            output_dir: PathBuf::from("out"),
            angles: TABLE_ANGLES.to_vec(),
        }
    }
}

/// Validated configuration in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub leg: LegModel,
    pub motor: MotorParams,
    pub mechanism: Transmission,
    /// Simulation settings; `q2_init` is the first configured angle.
    pub sim: SimConfig,
    pub search: SearchBox,
    pub dump_grid: bool,
    pub output_dir: PathBuf,
    pub angles: Vec<f64>,
    /// The resolved document, echoed into run metadata.
    pub source: ConfigFile,
}

impl RunConfig {
    /// Simulation settings for one initial angle.
    pub fn sim_at(&self, q2_init: f64) -> SimConfig {
        SimConfig { q2_init, ..self.sim }
    }

    /// Overrides the Jacobian mode, keeping the echoed document in step.
    pub fn set_jacobian_mode(&mut self, mode: JacobianMode) {
        self.leg.jacobian_mode = mode;
        self.source.leg.jacobian_mode = mode;
    }
}

impl fmt::Display for ConfigFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_string_pretty(self).map_err(|_| fmt::Error)?;
        f.write_str(&s)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path)
}

/// Parses and validates a config document; `origin` only labels errors.
pub fn parse_config(text: &str, origin: &Path) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::Parse {
            path: origin.to_path_buf(),
            line: inner.line(),
            column: inner.column(),
            key,
            message: inner.to_string(),
        }
    })?;
    resolve(file)
}

/// Converts a document to SI and checks every module invariant.
pub fn resolve(file: ConfigFile) -> Result<RunConfig, ConfigError> {
    let invalid = |section| move |source| ConfigError::Invalid { section, source };

    let leg = file.leg.resolve();
    leg.validate().map_err(invalid("leg"))?;
    let motor = file.motor.resolve();
    motor.validate().map_err(invalid("motor"))?;
    let mechanism = file.mechanism.resolve();
    mechanism.validate().map_err(invalid(match mechanism {
        Transmission::Variable(_) => "mechanism (VrrParams)",
        Transmission::Fixed(_) => "mechanism (FrrParams)",
    }))?;
    let search = file.search.resolve();
    search.validate().map_err(invalid("search"))?;

    if file.angles.is_empty() {
        return Err(ConfigError::Other("angles: at least one initial angle is required".into()));
    }
    let base = SimConfig {
        q2_init: file.angles[0],
        dt: file.sim.dt_s,
        t_max: file.sim.t_max_s,
        q2_takeoff_cap: file.sim.q2_takeoff_cap_rad,
        takeoff_rule: file.sim.takeoff_rule,
    };
    for &q2_init in &file.angles {
        SimConfig { q2_init, ..base }.validate().map_err(invalid("sim"))?;
    }
    if file.output_dir.as_os_str().is_empty() {
        return Err(ConfigError::Other("output_dir must not be empty".into()));
    }

    Ok(RunConfig {
        leg,
        motor,
        mechanism,
        sim: base,
        search,
        dump_grid: file.search.dump_grid,
        output_dir: file.output_dir.clone(),
        angles: file.angles.clone(),
        source: file,
    })
}
