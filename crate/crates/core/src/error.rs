use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("device count must be even for clustering, got K = {0}")]
    OddDevices(usize),

    #[error("degenerate cluster {cluster}: center and edge gains are equal ({gain})")]
    DegenerateCluster { cluster: usize, gain: f64 },

    #[error("non-positive large-scale gain {gain} for device {device}")]
    NonPositiveGain { device: usize, gain: f64 },

    #[error("NOMA closed form undefined for K = {devices} with M = {antennas} (requires K < 2M - 1)")]
    NomaOperatingRange { devices: usize, antennas: usize },

    #[error("allocation is for {found} but {expected} was required")]
    WrongSystem {
        expected: &'static str,
        found: &'static str,
    },

    #[error("incompatible combination: {policy} cannot be applied to {system}")]
    IncompatibleCombo {
        system: &'static str,
        policy: &'static str,
    },

    #[error("ZF needs fewer streams than antennas (N = {streams}, M = {antennas})")]
    TooManyStreams { streams: usize, antennas: usize },

    #[error("Gram matrix is not positive definite")]
    SingularGram,

    #[error("invalid curve: {0}")]
    Curve(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
