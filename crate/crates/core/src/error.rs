use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while loading, ranking, encoding or resampling data.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("header mismatch: expected [{expected}], found [{found}]")]
    HeaderMismatch { expected: String, found: String },
    #[error("no valid rows ({dropped} dropped)")]
    NoValidRows { dropped: usize },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid contingency table: {0}")]
    InvalidTable(String),
    #[error("feature {feature} code {code} out of range (num_categories {num_categories})")]
    Encoding {
        feature: usize,
        code: usize,
        num_categories: usize,
    },
    #[error("class {0} has no records to sample from")]
    UnbalancedSource(usize),
    #[error("invalid probability vector for {0}")]
    InvalidProbability(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Errors from the neural network: shapes, weight files and optimizer health.
#[derive(Debug, Error)]
pub enum NetError {
    #[error("shape mismatch: expected {expected}, got {found}")]
    Shape { expected: String, found: String },
    #[error("invalid architecture: {0}")]
    InvalidArch(String),
    #[error("non-finite gradient encountered at adam step {step}")]
    Divergence { step: u64 },
    #[error("weight file: {0}")]
    Format(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Errors raised by the survey environment.
#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("episode already terminated")]
    Terminal,
    #[error("action index {index} out of range (action space {size})")]
    InvalidAction { index: usize, size: usize },
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
}

/// Errors raised by the two trainers.
#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training diverged at step {step}: {detail}")]
    Divergence { step: u64, detail: String },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("history space {size} exceeds bound {bound}")]
    StateSpaceTooLarge { size: u128, bound: u128 },
    #[error("spec and environment disagree: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Errors reading or writing model bundles.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("invalid model bundle {path}: {detail}")]
    Invalid { path: PathBuf, detail: String },
}
