//! Event encoders, the three task decoder heads (n-gram re-ranking and
//! sequence generation), the multitask training loop, and checkpoint I/O.

mod checkpoint;
mod decoder;
mod embedding;
mod encoder;
mod loss;
mod params;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use decoder::{
    decode_ngram, decode_sequence_step, init_decoder_state, DecoderParams, DecoderSetup,
    DecoderVars, LinearHead, LinearVars, SeqHead, SeqVars,
};
pub use embedding::{EmbeddingSource, EmbeddingTable, DEFAULT_EMBEDDING_DIM};
pub use encoder::{encode, ConvSpec, EncoderConfig, EncoderKind, EncoderParams, EncoderVars};
pub use loss::{example_loss, multitask_loss, sequence_nll};
pub use params::{ModelMeta, ModelParams, ModelVars, ReadyModel, CHECKPOINT_FORMAT_VERSION};
pub use train::{
    evaluate_loss, train, train_with_vocab, EpochMetrics, TrainConfig, TrainLog, TrainOutcome,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Numerics(#[from] crate::numerics::NumericsError),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("embedding file {path}: {message}")]
    EmbeddingFile { path: String, message: String },
    #[error("embedding file line {line}: expected {expected} dims, got {got}")]
    EmbeddingDim {
        expected: usize,
        got: usize,
        line: usize,
    },
    #[error(
        "vocabulary fingerprint mismatch: checkpoint was trained against {checkpoint}, \
         supplied vocabulary hashes to {vocabulary}"
    )]
    FingerprintMismatch {
        checkpoint: String,
        vocabulary: String,
    },
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: String, message: String },
    #[error("loss became non-finite at epoch {epoch}, batch {batch} (lr {lr})")]
    NanLoss { epoch: usize, batch: usize, lr: f64 },
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty target sequence")]
    EmptyTarget,
    #[error("event has no tokens")]
    EmptyEvent,
}
