use std::collections::BTreeSet;

use super::event::EventPhrase;
use super::filter::{subset_tags, SubsetTag};
use super::records::{AnnotationRecord, PerTask, Source};
use super::vocab::{NgramId, TokenId, Vocabulary, EOS_ID};

/// One response triple drawn from an annotation's response lists.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpandedExample {
    pub event: EventPhrase,
    pub source: Source,
    pub responses: PerTask<Vec<String>>,
}

/// Cartesian product of the three response lists: one example per
/// (intent, xreact, oreact) combination. Invalid records yield nothing.
pub fn expand_examples(record: &AnnotationRecord) -> Vec<ExpandedExample> {
    if !record.valid {
        return Vec::new();
    }
    let mut out = Vec::new();
    for xi in &record.responses.xintent {
        for xr in &record.responses.xreact {
            for or in &record.responses.oreact {
                out.push(ExpandedExample {
                    event: record.event.clone(),
                    source: record.source,
                    responses: PerTask {
                        xintent: xi.clone(),
                        xreact: xr.clone(),
                        oreact: or.clone(),
                    },
                });
            }
        }
    }
    out
}

/// Length caps applied during vectorization.
#[derive(Clone, Copy, Debug)]
pub struct VectorizeLimits {
    /// Events longer than this are truncated (with a count kept).
    pub max_event_len: usize,
    /// Target token budget before the terminal EOS.
    pub max_target_len: usize,
}

impl Default for VectorizeLimits {
    fn default() -> Self {
        VectorizeLimits {
            max_event_len: 20,
            max_target_len: 10,
        }
    }
}

/// Id-space training instance: event token ids, per-task target sequences
/// (EOS-terminated, for sequence decoding), per-task n-gram class ids
/// (absent when the response is not in the {1,2,3}-gram space), and
/// subset tags.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingExample {
    pub event_ids: Vec<TokenId>,
    pub sequence_targets: PerTask<Vec<TokenId>>,
    pub ngram_targets: PerTask<Option<NgramId>>,
    pub tags: BTreeSet<SubsetTag>,
    pub truncated_event: bool,
}

pub fn vectorize(
    example: &ExpandedExample,
    vocab: &Vocabulary,
    limits: &VectorizeLimits,
) -> TrainingExample {
    let tokens: Vec<String> = example
        .event
        .tokens()
        .iter()
        .map(|t| t.to_string())
        .collect();
    let truncated_event = tokens.len() > limits.max_event_len;
    let event_ids: Vec<TokenId> = tokens
        .iter()
        .take(limits.max_event_len)
        .map(|t| vocab.token_id_or_unk(t))
        .collect();

    let sequence_targets = example.responses.map(|_, response| {
        let mut ids: Vec<TokenId> = response
            .iter()
            .take(limits.max_target_len)
            .map(|t| vocab.token_id_or_unk(t))
            .collect();
        ids.push(EOS_ID);
        ids
    });
    let ngram_targets = example
        .responses
        .map(|_, response| vocab.response_ngram_id(response));

    TrainingExample {
        event_ids,
        sequence_targets,
        ngram_targets,
        tags: subset_tags(&example.event, example.source),
        truncated_event,
    }
}

/// Expand and vectorize a whole split; returns the examples plus n-gram
/// target coverage (fraction of task slots whose response fit the
/// {1,2,3}-gram space).
pub fn vectorize_split(
    records: &[AnnotationRecord],
    vocab: &Vocabulary,
    limits: &VectorizeLimits,
) -> (Vec<TrainingExample>, NgramCoverage) {
    let mut examples = Vec::new();
    let mut coverage = NgramCoverage::default();
    for record in records {
        for expanded in expand_examples(record) {
            let ex = vectorize(&expanded, vocab, limits);
            for (_, target) in ex.ngram_targets.iter() {
                coverage.total += 1;
                if target.is_some() {
                    coverage.covered += 1;
                }
            }
            examples.push(ex);
        }
    }
    (examples, coverage)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NgramCoverage {
    pub covered: usize,
    pub total: usize,
}

impl NgramCoverage {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.covered as f64 / self.total as f64
        }
    }
}
