//! Command implementations behind the `fairmtl` binary.
//!
//! Every command reads its parameters from a JSON config, takes an optional
//! seed override, and writes deterministic output: rerunning with the same
//! inputs and seed produces byte-identical files.

pub mod commands;
pub mod experiment;

use std::fs;
use std::path::{Path, PathBuf};

use fairmtl_core::data::DataError;
use fairmtl_core::distrib::DistribError;
use fairmtl_core::fairtransform::FairError;
use fairmtl_core::metrics::MetricsError;
use fairmtl_core::mtl::MtlError;
use fairmtl_core::pipeline::PipelineError;
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

pub use commands::{evaluate, fairify, synth, train, EvaluateConfig, FairifyConfig, ModelFile, TrainConfig};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    ConfigIo { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed input: {0}")]
    Input(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        Self::Pipeline(e.into())
    }
}

impl From<DistribError> for CliError {
    fn from(e: DistribError) -> Self {
        Self::Pipeline(e.into())
    }
}

impl From<MtlError> for CliError {
    fn from(e: MtlError) -> Self {
        Self::Pipeline(e.into())
    }
}

impl From<FairError> for CliError {
    fn from(e: FairError) -> Self {
        Self::Pipeline(e.into())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        Self::Pipeline(e.into())
    }
}

impl CliError {
    /// 2 for configuration problems, 3 for data problems, 4 for numerical
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigIo { .. } | CliError::ConfigParse { .. } | CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } | CliError::Input(_) => EXIT_DATA,
            CliError::Pipeline(p) => match p {
                PipelineError::InvalidConfig(_)
                | PipelineError::Data(DataError::InvalidConfig(_))
                | PipelineError::Mtl(MtlError::InvalidConfig(_))
                | PipelineError::Fair(FairError::InvalidConfig(_))
                | PipelineError::Fair(FairError::InvalidThreshold(_))
                | PipelineError::Fair(FairError::Distrib(DistribError::InvalidConfig(_))) => EXIT_CONFIG,
                PipelineError::Mtl(MtlError::Numerical { .. }) => EXIT_NUMERICAL,
                _ => EXIT_DATA,
            },
        }
    }
}

/// Reads a JSON config; `None` means all defaults.
pub fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|source| CliError::ConfigIo {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::ConfigParse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_text(path, &text)
}
