//! Run artifacts: checkpoints, flat key=value configuration files and the
//! evaluation report schema.

mod checkpoint;
mod config;
mod report;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::{load_run_config, parse_run_config, run_config_to_string, RunConfig};
pub use report::{load_report, merge_reports, save_report, EvalReport, COMPARE_COLUMNS};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Format(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
