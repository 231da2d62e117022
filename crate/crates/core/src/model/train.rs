use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::embedding::{EmbeddingSource, EmbeddingTable};
use super::loss::multitask_loss;
use super::params::{ModelParams, ReadyModel};
use super::{DecoderSetup, EncoderConfig, ModelError};
use crate::corpus::{
    build_vocab, vectorize_split, NgramCoverage, Splits, TrainingExample, VectorizeLimits,
    VocabThresholds, Vocabulary,
};
use crate::numerics::{AdamConfig, AdamState, Real, Tape, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub max_event_len: usize,
    pub max_target_len: usize,
    pub unigram_min: u64,
    pub ngram_min: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 64,
            adam: AdamConfig::default(),
            seed: 0,
            max_event_len: 20,
            max_target_len: 10,
            unigram_min: 2,
            ngram_min: 6,
        }
    }
}

impl TrainConfig {
    pub fn limits(&self) -> VectorizeLimits {
        VectorizeLimits {
            max_event_len: self.max_event_len,
            max_target_len: self.max_target_len,
        }
    }

    pub fn thresholds(&self) -> VocabThresholds {
        VocabThresholds {
            unigram_min: self.unigram_min,
            ngram_min: self.ngram_min,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub best_dev_loss: f64,
    pub truncated_events: usize,
}

pub struct TrainOutcome<T> {
    /// Parameters from the best-dev epoch, paired with the vocabulary.
    pub model: ReadyModel<T>,
    pub log: TrainLog,
    pub ngram_coverage: NgramCoverage,
}

/// Train the three decoder heads and the encoder jointly with Adam,
/// teacher-forcing sequence targets. Deterministic given the seed: data
/// order, parameter init, and update order are all fixed.
pub fn train<T: Real>(
    splits: &Splits,
    embedding_source: &EmbeddingSource,
    encoder: EncoderConfig,
    decoder: DecoderSetup,
    config: &TrainConfig,
) -> Result<TrainOutcome<T>, ModelError> {
    let vocab = build_vocab(&splits.train, config.thresholds())?;
    let embeddings = EmbeddingTable::build(embedding_source, &vocab)?;
    train_with_vocab(splits, vocab, embeddings, encoder, decoder, config)
}

/// Training core for callers that already hold a vocabulary/table pair.
pub fn train_with_vocab<T: Real>(
    splits: &Splits,
    vocab: Vocabulary,
    embeddings: EmbeddingTable<T>,
    encoder: EncoderConfig,
    decoder: DecoderSetup,
    config: &TrainConfig,
) -> Result<TrainOutcome<T>, ModelError> {
    let limits = config.limits();
    let (train_examples, coverage) = vectorize_split(&splits.train, &vocab, &limits);
    if train_examples.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let (dev_examples, _) = vectorize_split(&splits.dev, &vocab, &limits);
    let truncated_events = train_examples.iter().filter(|e| e.truncated_event).count();

    let mut params =
        ModelParams::<T>::init(encoder.clone(), decoder, &vocab, embeddings, config.seed)?;
    let shapes = params.trainable_shapes();
    let shape_refs: Vec<&[usize]> = shapes.iter().map(|s| s.as_slice()).collect();
    let mut adam = AdamState::<T>::new(config.adam, &shape_refs);

    let mut order: Vec<usize> = (0..train_examples.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);

    let mut log = TrainLog {
        truncated_events,
        best_dev_loss: f64::INFINITY,
        ..TrainLog::default()
    };
    let mut best_params = params.clone();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0f64;
        for (batch_index, chunk) in order.chunks(config.batch_size.max(1)).enumerate() {
            let batch: Vec<TrainingExample> = chunk
                .iter()
                .map(|&i| train_examples[i].clone())
                .collect();
            let mut tape = Tape::new();
            let vars = params.register(&mut tape, true);
            let loss = multitask_loss(&mut tape, &vars, &encoder, &batch)?;
            let loss_value = tape.value(loss).item().as_f64();
            if !loss_value.is_finite() {
                return Err(ModelError::NanLoss {
                    epoch,
                    batch: batch_index,
                    lr: adam.config().lr,
                });
            }
            epoch_loss += loss_value * batch.len() as f64;
            tape.backward(loss)?;

            let grads: Vec<Tensor<T>> = vars
                .trainable
                .iter()
                .map(|&v| tape.grad(v).expect("backward populates trainables").clone())
                .collect();
            adam.begin_step();
            let mut idx = 0;
            let mut step_err = None;
            params.visit_trainable_mut(&mut |_, t| {
                if step_err.is_none() {
                    if let Err(e) = adam.update_param(idx, t, &grads[idx]) {
                        step_err = Some(e);
                    }
                }
                idx += 1;
            });
            if let Some(e) = step_err {
                return Err(e.into());
            }
        }
        let train_loss = epoch_loss / train_examples.len() as f64;
        let dev_loss = if dev_examples.is_empty() {
            train_loss
        } else {
            evaluate_loss(&params, &encoder, &dev_examples, config.batch_size)?
        };
        log.epochs.push(EpochMetrics {
            epoch,
            train_loss,
            dev_loss,
        });
        if dev_loss < log.best_dev_loss {
            log.best_dev_loss = dev_loss;
            log.best_epoch = epoch;
            best_params = params.clone();
        }
    }

    Ok(TrainOutcome {
        model: ReadyModel::new(best_params, vocab)?,
        log,
        ngram_coverage: coverage,
    })
}

/// Forward-only mean multitask loss over a set of examples.
pub fn evaluate_loss<T: Real>(
    params: &ModelParams<T>,
    encoder: &EncoderConfig,
    examples: &[TrainingExample],
    batch_size: usize,
) -> Result<f64, ModelError> {
    if examples.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut total = 0.0f64;
    for chunk in examples.chunks(batch_size.max(1)) {
        let mut tape = Tape::new();
        let vars = params.register(&mut tape, false);
        let loss = multitask_loss(&mut tape, &vars, encoder, chunk)?;
        total += tape.value(loss).item().as_f64() * chunk.len() as f64;
    }
    Ok(total / examples.len() as f64)
}
