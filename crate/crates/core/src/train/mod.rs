//! The self-labeling EM loop: cold start, then alternate alignment labeling
//! with updates on the summed MLM, TLM and pointer losses.

mod adam;
mod config;
mod data;
mod em;
mod log;

use std::path::PathBuf;

pub use adam::{clip_global_norm, Adam, AdamConfig, LinearSchedule};
pub use config::TrainConfig;
pub use data::Corpora;
pub use em::{cold_start, heldout_report, label_pair, train, Phase, TrainOutcome, Trainer};
pub use log::{StepRecord, TrainLog, LOG_HEADER};

use crate::corpus::CorpusError;
use crate::eval::EvalError;
use crate::neural::NeuralError;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("non-finite loss at {phase} step {step}\n{dump}")]
    NonFinite { phase: Phase, step: u64, dump: String },
    #[error("checkpoint does not match the corpus: {0}")]
    Mismatch(String),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Align(#[from] crate::align::AlignError),
}
