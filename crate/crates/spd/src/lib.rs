//! Command-line driver for `spd-core`: kinematic traces, error sweeps,
//! Monte Carlo, sensitivity, grasp rollouts and error decomposition, with
//! CSV, JSON and SVG output.

use std::path::PathBuf;

use spd_core::error_model::ErrorModelError;
use spd_core::grasp_sim::GraspError;
use spd_core::linkage::LinkageError;
use thiserror::Error;

pub mod commands;
pub mod config;
mod output;
pub mod svg;

pub use commands::{render, run, thread_count, OutputFile};
pub use config::{load_config, parse_config, Command, Config, ConfigError, Overrides};
pub use output::write_atomic;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("kinematics: {0}")]
    Kinematics(#[from] LinkageError),
    #[error("error model: {0}")]
    ErrorModel(#[from] ErrorModelError),
    #[error("grasp simulation: {0}")]
    Grasp(#[from] GraspError),
    #[error("plot: {0}")]
    Plot(svg::SvgError),
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 config, 3 kinematics, 4 simulation, 5 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Kinematics(_)
            | CliError::ErrorModel(ErrorModelError::Linkage(_))
            | CliError::Grasp(GraspError::Linkage(_)) => 3,
            CliError::ErrorModel(_) | CliError::Grasp(_) | CliError::Plot(_) => 4,
            CliError::Io { .. } => 5,
        }
    }
}
