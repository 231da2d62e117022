use super::decoder::{decode_ngram, decode_sequence_step, init_decoder_state, DecoderVars};
use super::encoder::encode;
use super::params::ModelVars;
use super::{EncoderConfig, ModelError};
use crate::corpus::{Task, TokenId, TrainingExample};
use crate::numerics::{Real, Tape, Var};

/// Teacher-forced negative log-likelihood of one EOS-terminated target
/// sequence, summed over steps.
pub fn sequence_nll<T: Real>(
    tape: &mut Tape<T>,
    embeddings: Var,
    head: &super::decoder::SeqVars,
    h_e: Var,
    target: &[TokenId],
) -> Result<Var, ModelError> {
    let mut state = init_decoder_state(tape, h_e, head)?;
    let mut prev: Option<TokenId> = None;
    let mut total: Option<Var> = None;
    for &gold in target {
        let (dist, next_state) = decode_sequence_step(tape, embeddings, prev, state, head)?;
        let step_loss = tape.cross_entropy(dist, gold)?;
        total = Some(match total {
            None => step_loss,
            Some(acc) => tape.add(acc, step_loss)?,
        });
        state = next_state;
        prev = Some(gold);
    }
    total.ok_or(ModelError::EmptyTarget)
}

/// Loss of one example: the sum of the three per-task cross-entropies.
/// In the n-gram setup, responses outside the {1,2,3}-gram space carry no
/// target and contribute nothing (coverage is reported at vectorization).
pub fn example_loss<T: Real>(
    tape: &mut Tape<T>,
    vars: &ModelVars,
    encoder_config: &EncoderConfig,
    example: &TrainingExample,
) -> Result<Var, ModelError> {
    let h_e = encode(
        tape,
        vars.embeddings,
        &vars.encoder,
        encoder_config,
        &example.event_ids,
    )?;
    let mut total: Option<Var> = None;
    let mut accumulate = |tape: &mut Tape<T>, loss: Var| -> Result<(), ModelError> {
        total = Some(match total {
            None => loss,
            Some(acc) => tape.add(acc, loss)?,
        });
        Ok(())
    };
    match &vars.decoder {
        DecoderVars::Ngram(heads) => {
            for task in Task::ALL {
                if let Some(gold) = example.ngram_targets.get(task) {
                    let dist = decode_ngram(tape, h_e, heads.get(task))?;
                    let loss = tape.cross_entropy(dist, *gold)?;
                    accumulate(tape, loss)?;
                }
            }
        }
        DecoderVars::Sequence(heads) => {
            for task in Task::ALL {
                let target = example.sequence_targets.get(task);
                let loss = sequence_nll(tape, vars.embeddings, heads.get(task), h_e, target)?;
                accumulate(tape, loss)?;
            }
        }
    }
    total.ok_or(ModelError::EmptyTarget)
}

/// Mean over the batch of per-example multitask losses.
pub fn multitask_loss<T: Real>(
    tape: &mut Tape<T>,
    vars: &ModelVars,
    encoder_config: &EncoderConfig,
    batch: &[TrainingExample],
) -> Result<Var, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut total: Option<Var> = None;
    for example in batch {
        let loss = example_loss(tape, vars, encoder_config, example)?;
        total = Some(match total {
            None => loss,
            Some(acc) => tape.add(acc, loss)?,
        });
    }
    let total = total.expect("non-empty batch");
    Ok(tape.scale(total, 1.0 / batch.len() as f64))
}
