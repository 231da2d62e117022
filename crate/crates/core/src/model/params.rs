use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::decoder::{DecoderParams, DecoderSetup, DecoderVars};
use super::embedding::EmbeddingTable;
use super::encoder::{EncoderConfig, EncoderParams, EncoderVars};
use super::ModelError;
use crate::corpus::Vocabulary;
use crate::numerics::{Real, Tape, Tensor, Var};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// Checkpoint header: everything needed to rebuild the parameter
/// structure and to reject a mismatched vocabulary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub format_version: u32,
    pub encoder: EncoderConfig,
    pub decoder: DecoderSetup,
    pub vocab_fingerprint: String,
    pub embedding_dim: usize,
    pub unigram_count: usize,
    pub ngram_count: usize,
}

/// Full parameter set: the frozen embedding table, encoder parameters, and
/// the three decoder heads.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub meta: ModelMeta,
    pub embeddings: EmbeddingTable<T>,
    pub encoder: EncoderParams<T>,
    pub decoder: DecoderParams<T>,
}

impl<T: Real> ModelParams<T> {
    /// Seeded initialization against a vocabulary and its embedding table.
    pub fn init(
        encoder: EncoderConfig,
        decoder: DecoderSetup,
        vocab: &Vocabulary,
        embeddings: EmbeddingTable<T>,
        seed: u64,
    ) -> Result<Self, ModelError> {
        encoder.validate(embeddings.dim())?;
        if embeddings.vocab_size() != vocab.unigram_count() {
            return Err(ModelError::InvalidConfig(format!(
                "embedding table covers {} tokens, vocabulary has {}",
                embeddings.vocab_size(),
                vocab.unigram_count()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder_params = EncoderParams::init(&encoder, embeddings.dim(), &mut rng);
        let decoder_params = DecoderParams::init(
            decoder,
            encoder.h,
            embeddings.dim(),
            vocab.unigram_count(),
            vocab.ngram_count(),
            &mut rng,
        );
        Ok(ModelParams {
            meta: ModelMeta {
                format_version: CHECKPOINT_FORMAT_VERSION,
                encoder,
                decoder,
                vocab_fingerprint: vocab.fingerprint(),
                embedding_dim: embeddings.dim(),
                unigram_count: vocab.unigram_count(),
                ngram_count: vocab.ngram_count(),
            },
            embeddings,
            encoder: encoder_params,
            decoder: decoder_params,
        })
    }

    /// Visit trainable tensors in a fixed order (the embedding table is
    /// frozen and excluded).
    pub fn visit_trainable(&self, f: &mut impl FnMut(String, &Tensor<T>)) {
        self.encoder.visit(f);
        self.decoder.visit(f);
    }

    pub fn visit_trainable_mut(&mut self, f: &mut impl FnMut(String, &mut Tensor<T>)) {
        self.encoder.visit_mut(f);
        self.decoder.visit_mut(f);
    }

    pub fn trainable_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::new();
        self.visit_trainable(&mut |_, t| shapes.push(t.shape().to_vec()));
        shapes
    }

    pub fn parameter_count(&self) -> usize {
        let mut n = 0;
        self.visit_trainable(&mut |_, t| n += t.numel());
        n
    }

    /// Register everything on a tape. `trainable` marks encoder/decoder
    /// parameters for gradients; embeddings are always frozen.
    pub fn register(&self, tape: &mut Tape<T>, trainable: bool) -> ModelVars {
        let embeddings = tape.leaf(self.embeddings.tensor().clone(), false);
        let mut collected = Vec::new();
        let encoder = self.encoder.register(tape, trainable, &mut collected);
        let decoder = self.decoder.register(tape, trainable, &mut collected);
        ModelVars {
            embeddings,
            encoder,
            decoder,
            trainable: collected,
        }
    }
}

/// On-tape handles for a registered model. `trainable` lists parameter
/// vars in the same order as `visit_trainable`.
pub struct ModelVars {
    pub embeddings: Var,
    pub encoder: EncoderVars,
    pub decoder: DecoderVars,
    pub trainable: Vec<Var>,
}

/// A parameter set paired with the vocabulary it was trained against.
/// Construction verifies the fingerprint so mismatched pairs are rejected.
#[derive(Clone, Debug)]
pub struct ReadyModel<T> {
    pub params: ModelParams<T>,
    pub vocab: Vocabulary,
}

impl<T: Real> ReadyModel<T> {
    pub fn new(params: ModelParams<T>, vocab: Vocabulary) -> Result<Self, ModelError> {
        let fingerprint = vocab.fingerprint();
        if params.meta.vocab_fingerprint != fingerprint {
            return Err(ModelError::FingerprintMismatch {
                checkpoint: params.meta.vocab_fingerprint.clone(),
                vocabulary: fingerprint,
            });
        }
        Ok(ReadyModel { params, vocab })
    }

    pub fn setup(&self) -> DecoderSetup {
        self.params.meta.decoder
    }
}
