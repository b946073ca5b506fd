//! Adaptive questionnaire agent: a deep Q-network that picks the next
//! categorical question to ask and when to stop and predict a binary
//! outcome, plus a fixed-question supervised baseline and an exact
//! dynamic-programming oracle for synthetic data.

pub mod dataprep;
pub mod dqn;
pub mod environment;
pub mod error;
pub mod evaluation;
pub mod log;
pub mod model;
pub mod neuralnet;
pub mod oracle;
pub mod policy;
pub mod questionnaire;
pub mod sl;

pub use error::{DataError, EnvError, ModelError, NetError, OracleError, TrainError};
