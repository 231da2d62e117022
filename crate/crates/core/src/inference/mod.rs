//! Test-time generation: top-k n-gram ranking, beam-search sequence
//! decoding, the end-to-end predict pipeline, and interpolation between
//! event encodings.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{EventPhrase, NgramId, PerTask, Task, TokenId, EOS_ID};
use crate::model::{
    decode_ngram, decode_sequence_step, init_decoder_state, DecoderVars, ModelError, ModelVars,
    ReadyModel, SeqVars,
};
use crate::numerics::{Real, Tape, Tensor, Var};

/// One partially or fully decoded sequence hypothesis.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamHypothesis {
    /// Emitted token ids, including the terminal EOS once finished.
    pub tokens: Vec<TokenId>,
    /// Sum of per-step log-probabilities of the emitted tokens.
    pub log_prob: f64,
    pub finished: bool,
    /// Set when EOS had to be forced because nothing finished in time.
    pub truncated: bool,
}

impl BeamHypothesis {
    /// Content tokens (terminal EOS stripped).
    pub fn content(&self, eos: TokenId) -> &[TokenId] {
        match self.tokens.last() {
            Some(&last) if last == eos => &self.tokens[..self.tokens.len() - 1],
            _ => &self.tokens,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub width: usize,
    /// Maximum decode steps, counting the EOS emission.
    pub max_len: usize,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            width: 10,
            max_len: 10,
        }
    }
}

/// Top-k entries of a distribution by probability, ties broken by id
/// ascending. `k` beyond the space size is clamped (flagged in the result).
pub struct TopK {
    pub entries: Vec<(NgramId, f64)>,
    pub clamped: bool,
}

pub fn topk_ngrams<T: Real>(distribution: &Tensor<T>, k: usize) -> TopK {
    let n = distribution.numel();
    let clamped = k > n;
    let k = k.min(n);
    let mut ids: Vec<usize> = (0..n).collect();
    ids.sort_by(|&a, &b| {
        distribution.data()[b]
            .as_f64()
            .total_cmp(&distribution.data()[a].as_f64())
            .then(a.cmp(&b))
    });
    TopK {
        entries: ids
            .into_iter()
            .take(k)
            .map(|i| (i, distribution.data()[i].as_f64()))
            .collect(),
        clamped,
    }
}

struct LiveBeam {
    tokens: Vec<TokenId>,
    log_prob: f64,
    state: Var,
    prev: Option<TokenId>,
}

/// Length-unnormalized beam search over the unigram space, on an already
/// prepared tape. Deterministic: candidates order by (log-prob desc,
/// token sequence asc). Returns at most `width` finished hypotheses; if
/// nothing finishes within `max_len` steps, EOS is forced one step later
/// and the results are flagged truncated.
pub fn beam_search<T: Real>(
    tape: &mut Tape<T>,
    embeddings: Var,
    head: &SeqVars,
    h_e: Var,
    eos: TokenId,
    config: &BeamConfig,
) -> Result<Vec<BeamHypothesis>, ModelError> {
    if config.width == 0 {
        return Ok(Vec::new());
    }
    let init = init_decoder_state(tape, h_e, head)?;
    let mut live = vec![LiveBeam {
        tokens: Vec::new(),
        log_prob: 0.0,
        state: init,
        prev: None,
    }];
    let mut finished: Vec<BeamHypothesis> = Vec::new();

    for _ in 0..config.max_len {
        if live.is_empty() {
            break;
        }
        let mut candidates: Vec<LiveBeam> = Vec::new();
        for beam in &live {
            let (dist, next_state) =
                decode_sequence_step(tape, embeddings, beam.prev, beam.state, head)?;
            let probs = tape.value(dist);
            for id in 0..probs.numel() {
                let mut tokens = beam.tokens.clone();
                tokens.push(id);
                candidates.push(LiveBeam {
                    tokens,
                    log_prob: beam.log_prob + probs.data()[id].as_f64().ln(),
                    state: next_state,
                    prev: Some(id),
                });
            }
        }
        candidates.sort_by(|a, b| {
            b.log_prob
                .total_cmp(&a.log_prob)
                .then_with(|| a.tokens.cmp(&b.tokens))
        });
        candidates.truncate(config.width);

        live = Vec::new();
        for cand in candidates {
            if cand.prev == Some(eos) {
                finished.push(BeamHypothesis {
                    tokens: cand.tokens,
                    log_prob: cand.log_prob,
                    finished: true,
                    truncated: false,
                });
            } else {
                live.push(cand);
            }
        }
    }

    if finished.is_empty() {
        // nothing emitted EOS in time: force it and flag the results
        for beam in &live {
            let (dist, _) = decode_sequence_step(tape, embeddings, beam.prev, beam.state, head)?;
            let p_eos = tape.value(dist).data()[eos].as_f64().ln();
            let mut tokens = beam.tokens.clone();
            tokens.push(eos);
            finished.push(BeamHypothesis {
                tokens,
                log_prob: beam.log_prob + p_eos,
                finished: true,
                truncated: true,
            });
        }
    }
    finished.sort_by(|a, b| {
        b.log_prob
            .total_cmp(&a.log_prob)
            .then_with(|| a.tokens.cmp(&b.tokens))
    });
    finished.truncate(config.width);
    Ok(finished)
}

/// A ranked candidate in text space. Scores are natural log-probabilities
/// in both decoder setups (class probability for n-gram heads, cumulative
/// sequence log-probability for beam hypotheses).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub tokens: Vec<String>,
    pub score: f64,
}

impl RankedCandidate {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Per-task ranked hypotheses for one event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub event: EventPhrase,
    pub candidates: PerTask<Vec<RankedCandidate>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub top_k: usize,
    pub beam: BeamConfig,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            top_k: 10,
            beam: BeamConfig::default(),
        }
    }
}

impl<T: Real> ReadyModel<T> {
    /// Encode one event and rank candidates for every task.
    pub fn top_candidates(
        &self,
        event_ids: &[TokenId],
        config: &InferenceConfig,
    ) -> Result<PerTask<Vec<RankedCandidate>>, ModelError> {
        let mut tape = Tape::new();
        let vars = self.params.register(&mut tape, false);
        let h_e = crate::model::encode(
            &mut tape,
            vars.embeddings,
            &vars.encoder,
            &self.params.meta.encoder,
            event_ids,
        )?;
        self.rank_from_encoding(&mut tape, &vars, h_e, config)
    }

    fn rank_from_encoding(
        &self,
        tape: &mut Tape<T>,
        vars: &ModelVars,
        h_e: Var,
        config: &InferenceConfig,
    ) -> Result<PerTask<Vec<RankedCandidate>>, ModelError> {
        let mut out: PerTask<Vec<RankedCandidate>> = PerTask::default();
        for task in Task::ALL {
            let ranked = match &vars.decoder {
                DecoderVars::Ngram(heads) => {
                    let dist = decode_ngram(tape, h_e, heads.get(task))?;
                    let topk = topk_ngrams(tape.value(dist), config.top_k);
                    topk.entries
                        .into_iter()
                        .map(|(id, p)| RankedCandidate {
                            tokens: self
                                .vocab
                                .ngram(id)
                                .split(' ')
                                .map(str::to_string)
                                .collect(),
                            score: p.max(crate::numerics::PROB_FLOOR).ln(),
                        })
                        .collect()
                }
                DecoderVars::Sequence(heads) => {
                    let mut beam_cfg = config.beam;
                    beam_cfg.width = beam_cfg.width.max(config.top_k);
                    let hyps =
                        beam_search(tape, vars.embeddings, heads.get(task), h_e, EOS_ID, &beam_cfg)?;
                    hyps.into_iter()
                        .take(config.top_k)
                        .map(|h| RankedCandidate {
                            tokens: self.vocab.decode(h.content(EOS_ID)),
                            score: h.log_prob,
                        })
                        .collect()
                }
            };
            *out.get_mut(task) = ranked;
        }
        Ok(out)
    }

    /// Normalize an event string, encode it, and rank candidates per task.
    pub fn predict(
        &self,
        event_text: &str,
        config: &InferenceConfig,
    ) -> Result<InferenceResult, ModelError> {
        let event = EventPhrase::parse(event_text)?;
        let ids: Vec<TokenId> = event
            .tokens()
            .iter()
            .map(|t| self.vocab.token_id_or_unk(&t.to_string()))
            .collect();
        let candidates = self.top_candidates(&ids, config)?;
        Ok(InferenceResult { event, candidates })
    }

    /// Event encoding as a plain tensor.
    pub fn encode_event(&self, event_ids: &[TokenId]) -> Result<Tensor<T>, ModelError> {
        let mut tape = Tape::new();
        let vars = self.params.register(&mut tape, false);
        let h_e = crate::model::encode(
            &mut tape,
            vars.embeddings,
            &vars.encoder,
            &self.params.meta.encoder,
            event_ids,
        )?;
        Ok(tape.value(h_e).clone())
    }

    /// Decode candidates from points sampled at equal intervals on the line
    /// between two event encodings: `h(t) = (1-t) h1 + t h2`.
    pub fn interpolate(
        &self,
        event1: &str,
        event2: &str,
        steps: usize,
        config: &InferenceConfig,
    ) -> Result<Vec<InterpolationPoint<T>>, ModelError> {
        if steps < 2 {
            return Err(ModelError::InvalidConfig(
                "interpolation needs at least 2 steps".into(),
            ));
        }
        let ids = |text: &str| -> Result<Vec<TokenId>, ModelError> {
            let event = EventPhrase::parse(text)?;
            Ok(event
                .tokens()
                .iter()
                .map(|t| self.vocab.token_id_or_unk(&t.to_string()))
                .collect())
        };
        let h1 = self.encode_event(&ids(event1)?)?;
        let h2 = self.encode_event(&ids(event2)?)?;

        let mut points = Vec::with_capacity(steps);
        for j in 0..steps {
            let t = j as f64 / (steps - 1) as f64;
            let mut blended = h1.clone();
            for (b, (&a, &c)) in blended
                .data_mut()
                .iter_mut()
                .zip(h1.data().iter().zip(h2.data()))
            {
                *b = a * T::from_f64(1.0 - t) + c * T::from_f64(t);
            }
            let mut tape = Tape::new();
            let vars = self.params.register(&mut tape, false);
            let h_var = tape.constant(blended.clone());
            let candidates = self.rank_from_encoding(&mut tape, &vars, h_var, config)?;
            points.push(InterpolationPoint {
                t,
                encoding: blended,
                candidates,
            });
        }
        Ok(points)
    }
}

#[derive(Clone, Debug)]
pub struct InterpolationPoint<T> {
    pub t: f64,
    pub encoding: Tensor<T>,
    pub candidates: PerTask<Vec<RankedCandidate>>,
}

/// Serialize inference results in the line-delimited interchange format:
/// `event TAB task TAB rank TAB score TAB text`, tasks in fixed order,
/// ranks starting at 1.
pub fn write_inference_tsv<W: Write>(
    w: &mut W,
    results: &[InferenceResult],
) -> std::io::Result<()> {
    for result in results {
        let event = result.event.text();
        for task in Task::ALL {
            for (rank, cand) in result.candidates.get(task).iter().enumerate() {
                writeln!(
                    w,
                    "{event}\t{task}\t{}\t{:.6}\t{}",
                    rank + 1,
                    cand.score,
                    cand.text()
                )?;
            }
        }
    }
    Ok(())
}
