use std::io;
use std::path::PathBuf;

use episae_core::assoc::AssocError;
use episae_core::genotype::GenotypeIoError;
use episae_core::metrics::MetricsError;
use episae_core::nn::NnError;
use episae_core::pipeline::PipelineError;
use episae_core::qc::QcError;
use episae_core::simulate::SimError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: GenotypeIoError },
    #[error("{path}: {source}")]
    Checkpoint { path: PathBuf, source: NnError },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Qc(#[from] QcError),
    #[error(transparent)]
    Assoc(#[from] AssocError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Process exit codes.
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

fn nn_code(e: &NnError) -> u8 {
    match e {
        NnError::InvalidConfig(_) => EXIT_USAGE,
        NnError::NonFinite | NnError::Domain(_) => EXIT_NUMERIC,
        _ => EXIT_DATA,
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// 1 usage or config, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Usage(_) | Error::Config { .. } | Error::Sim(_) => EXIT_USAGE,
            Error::Data(_) | Error::Io { .. } | Error::Format { .. } | Error::Csv(_) => EXIT_DATA,
            Error::Checkpoint { source, .. } => nn_code(source),
            Error::Qc(QcError::InvalidThreshold(_)) => EXIT_USAGE,
            Error::Qc(QcError::ConvergenceFailure { .. }) => EXIT_NUMERIC,
            Error::Qc(_) | Error::Assoc(_) => EXIT_DATA,
            Error::Pipeline(e) => match e {
                PipelineError::InvalidSpec { .. } => EXIT_USAGE,
                PipelineError::Nn(nn) => nn_code(nn),
                _ => EXIT_DATA,
            },
        }
    }
}

impl From<MetricsError> for Error {
    fn from(e: MetricsError) -> Self {
        Error::Pipeline(PipelineError::Metrics(e))
    }
}
