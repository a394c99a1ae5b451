//! Standard-library companion to `pondero-core`: configuration files,
//! heterodyne trace synthesis and demodulation, spectral estimation, CSV
//! and JSON reports, and the `pondero` command line tool.
//!
//! The core crate owns all the physics in angular units (rad/s); this
//! crate talks Hz at every file and flag boundary and converts at the
//! edges.

pub mod commands;
pub mod config;
pub mod demod;
pub mod logging;
pub mod pipeline;
pub mod report;
pub mod synth;
pub mod tracefile;
pub mod welch;

use std::process::ExitCode;

/// Version tag written into every file this crate produces.
pub const FORMAT_VERSION: u32 = 1;

/// Top-level error with a stable process exit code per failure class.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    /// Configuration could not be read, parsed, or validated. Exit code 2.
    #[error("config: {0}")]
    Config(String),
    /// The model or a numerical routine failed. Exit code 3.
    #[error("numerical: {0}")]
    Numerical(String),
    /// A file could not be read or written. Exit code 4.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl AppError {
    /// Process exit code for this error class (0 is success).
    pub fn exit_code(&self) -> ExitCode {
        match self {
            AppError::Config(_) => ExitCode::from(2),
            AppError::Numerical(_) => ExitCode::from(3),
            AppError::Io(_) => ExitCode::from(4),
        }
    }
}

impl From<pondero_core::ModelError> for AppError {
    fn from(e: pondero_core::ModelError) -> Self {
        AppError::Numerical(e.to_string())
    }
}

impl From<pondero_core::ParamError> for AppError {
    fn from(e: pondero_core::ParamError) -> Self {
        AppError::Config(e.to_string())
    }
}
