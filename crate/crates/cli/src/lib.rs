//! Configuration loading, report emission and subcommands of the `vrrjump`
//! command-line tool.

pub mod config;
pub mod report;
pub mod run;

pub use config::{load_config, parse_config, ConfigError, ConfigFile, RunConfig};
pub use report::{emit_report, fmt_num, ComparisonReport, Metadata, ReportError};
pub use run::{CliError, Outcome};
