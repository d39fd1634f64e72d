use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use log::{error, info};
use vrrjump::config::{load_config, resolve, ConfigFile};
use vrrjump::run::{self, CliError, Outcome};
use vrrjump::RunConfig;
use vrrjump_core::{JacobianMode, Workers};

#[derive(Parser)]
#[command(name = "vrrjump", version, about = "Variable-ratio knee takeoff simulation and design search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured mechanism from each configured angle.
    Simulate(Common),
    /// Grid-search the configured joint type.
    Optimize(Common),
    /// Optimise both joint types per angle and write the comparison report.
    Compare(Common),
    /// Sample the reduction ratio of the configured mechanism.
    SweepRatio {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 256)]
        samples: usize,
    },
    /// Tabulate the motor torque/power envelope.
    Envelope {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 201)]
        samples: usize,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; built-in reference setup when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Candidate-evaluation threads.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    jacobian_mode: Option<ModeArg>,
    /// Accepted for compatibility; nothing in the tool draws random numbers.
    #[arg(long, action = ArgAction::SetTrue)]
    seedless: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Paper,
    Geometric,
}

impl From<ModeArg> for JacobianMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Paper => JacobianMode::PaperLiteral,
            ModeArg::Geometric => JacobianMode::Geometric,
        }
    }
}

impl Common {
    fn load(&self) -> Result<(RunConfig, Workers), CliError> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => resolve(ConfigFile::default())?,
        };
        if let Some(mode) = self.jacobian_mode {
            cfg.set_jacobian_mode(mode.into());
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
            cfg.source.output_dir = out.clone();
        }
        let workers = match self.workers {
            Some(0) => return Err(CliError::Usage("--workers must be at least 1".into())),
            Some(n) => Workers(n),
            None => Workers::default(),
        };
        Ok((cfg, workers))
    }
}

fn execute(command: Command) -> Result<Outcome, CliError> {
    match command {
        Command::Simulate(c) => {
            let (cfg, _) = c.load()?;
            run::simulate(&cfg, &cfg.output_dir)
        }
        Command::Optimize(c) => {
            let (cfg, workers) = c.load()?;
            run::optimize(&cfg, &cfg.output_dir, workers)
        }
        Command::Compare(c) => {
            let (cfg, workers) = c.load()?;
            run::compare(&cfg, &cfg.output_dir, workers).map(|(_, outcome)| outcome)
        }
        Command::SweepRatio { common, samples } => {
            let (cfg, _) = common.load()?;
            run::sweep_ratio(&cfg, &cfg.output_dir, samples)
        }
        Command::Envelope { common, samples } => {
            let (cfg, _) = common.load()?;
            run::envelope(&cfg, &cfg.output_dir, samples)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VRRJUMP_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(outcome) => {
            for line in &outcome.stdout {
                println!("{line}");
            }
            for path in &outcome.manifest {
                info!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
