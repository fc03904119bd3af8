//! Teacher-forcing pairs, the train/validate/select loop, and greedy and
//! ensemble decoding.

mod decode;
mod pairs;
mod train;

use std::path::PathBuf;

use crate::metrics::MetricsError;
use crate::models::ModelError;

pub use decode::{average_distributions, ensemble_decode, greedy_decode, pick_word, NextWord};
pub use pairs::{
    encoder_input, expand_pairs, frame_example, frame_examples, model_config, primary_vocab,
    FramedExample, TrainingPair,
};
pub use train::{
    attention_maps, decode_words, predict, train, AttentionMaps, EpochReport, TrainConfig,
    TrainRun, TrainRunReport, DECODE_CHUNK,
};

#[derive(Debug, thiserror::Error)]
pub enum InferError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0}")]
    Config(String),
    #[error("ensemble members disagree: expected (vocab, comlen) {expected:?}, found {found:?}")]
    VocabMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}; parameter norms: {norms:?}")]
    NonFinite {
        epoch: usize,
        batch: usize,
        loss: f64,
        norms: Vec<(String, f64)>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}
