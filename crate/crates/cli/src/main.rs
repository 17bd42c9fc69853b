//! `trikectl`: simulate, design, identify and scan the three-wheeled robot
//! models from a single JSON configuration.

// `!(x > 0.0)` is the idiom that also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use trike_core::lti::LtiError;
use trike_core::pid::PidError;
use trike_core::sim::{LoopKind, SimError};
use trike_core::sysid::SysIdError;

mod commands;
mod config;
mod output;

#[derive(Debug, Parser)]
#[command(name = "trikectl", version, about = "Velocity and trajectory control workflow for a three-wheeled robot")]
struct Cli {
    /// JSON run configuration; the shipped default is used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV and JSON outputs.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides `scenario.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Dotted-path override, e.g. `--set scenario.duration=30`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured loop and write its trace.
    Simulate {
        /// Overrides `scenario.loop`.
        #[arg(long = "loop", value_enum)]
        loop_kind: Option<LoopArg>,
    },
    /// Same as `simulate --loop trajectory`.
    Trajectory,
    /// Design the velocity PID from the plant and `design` section.
    Design {
        /// Write a copy of the configuration with the designed gains.
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// Identify a model from a `t,u,y` CSV in absolute units.
    Identify {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        zeros: Option<usize>,
        #[arg(long)]
        poles: Option<usize>,
        /// Dead time in seconds; estimated from the data when absent.
        #[arg(long)]
        dead_time: Option<f64>,
        #[arg(long)]
        op_voltage: Option<f64>,
        #[arg(long)]
        op_speed: Option<f64>,
    },
    /// Sinusoidal linearity scan of the drive.
    Linearity {
        /// Comma-separated amplitudes in volts.
        #[arg(long, value_delimiter = ',')]
        amplitudes: Option<Vec<f64>>,
        #[arg(long)]
        f0: Option<f64>,
        /// Scan the linear plant alone, without the BLDC map.
        #[arg(long)]
        linear_plant: bool,
    },
    /// Pick the plant gain K that reproduces a DC speed/voltage slope.
    CalibrateK {
        /// Target slope in m/s per volt; defaults to the BLDC map slope at
        /// the operating point.
        #[arg(long)]
        slope: Option<f64>,
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// Write a gnuplot script for the CSVs in the output directory.
    Gnuplot,
    /// Print the shipped default configuration.
    PrintConfig,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum LoopArg {
    OpenLoop,
    Velocity,
    Steering,
    Trajectory,
}

impl From<LoopArg> for LoopKind {
    fn from(l: LoopArg) -> Self {
        match l {
            LoopArg::OpenLoop => LoopKind::OpenLoop,
            LoopArg::Velocity => LoopKind::Velocity,
            LoopArg::Steering => LoopKind::Steering,
            LoopArg::Trajectory => LoopKind::Trajectory,
        }
    }
}

/// Error with its exit status: 2 configuration or schema, 3 runtime or I/O,
/// 4 inadequate data.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(key: &str, why: impl std::fmt::Display) -> Self {
        Self {
            code: 2,
            message: format!("{key}: {why}"),
        }
    }

    pub fn io(why: impl std::fmt::Display) -> Self {
        Self {
            code: 3,
            message: why.to_string(),
        }
    }

    pub fn data(why: impl std::fmt::Display) -> Self {
        Self {
            code: 4,
            message: why.to_string(),
        }
    }

    pub fn from_pid(e: PidError) -> Self {
        match e {
            PidError::Lti(inner) => Self::from_lti(inner),
            PidError::SearchFailed(_) => Self::io(e),
            other => Self::config("design", other),
        }
    }

    pub fn from_lti(e: LtiError) -> Self {
        Self::io(e)
    }

    pub fn from_sim(e: SimError) -> Self {
        match e {
            SimError::ConfigMismatch(_) | SimError::InvalidMap(_) => Self::config("scenario", e),
            other => Self::io(other),
        }
    }

    pub fn from_sysid(e: SysIdError) -> Self {
        match e {
            SysIdError::InsufficientExcitation
            | SysIdError::SingularRegression
            | SysIdError::TooShort { .. }
            | SysIdError::NoContinuousEquivalent(_) => Self::data(e),
            SysIdError::InvalidOrders { .. } => Self::config("identify", e),
            SysIdError::BinMisalignment { .. } => Self::config("linearity.f0", e),
            SysIdError::BadAmplitudes => Self::config("linearity.amplitudes", e),
            SysIdError::BadThreshold(_) => Self::config("linearity.threshold", e),
            SysIdError::Lti(inner) => Self::from_lti(inner),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let styled = std::env::var_os("TRIKECTL_NO_COLOR").is_none() && std::io::stderr().is_terminal();
            if styled {
                eprintln!("\x1b[1;31merror\x1b[0m: {}", e.message);
            } else {
                eprintln!("error: {}", e.message);
            }
            ExitCode::from(e.code)
        }
    }
}
