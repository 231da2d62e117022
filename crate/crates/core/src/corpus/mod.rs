//! Corpus machinery: event normalization, annotation records and file
//! formats, vocabulary construction, dataset splitting, content-word
//! filtering, and annotation agreement statistics.

mod event;
mod examples;
mod filter;
mod kappa;
mod records;
mod split;
mod vocab;

pub use event::{tokenize_text, EventPhrase, EventToken, PersonVar, BLANK_TEXT};
pub use examples::{
    expand_examples, vectorize, vectorize_split, ExpandedExample, NgramCoverage, TrainingExample,
    VectorizeLimits,
};
pub use filter::{
    content_word_filter, filter_candidates, subset_tags, CandidateThresholds, FilterDecision,
    SubsetTag, WordLists,
};
pub use kappa::{average_kappa, cohen_kappa, kappa_pair, KappaReport};
pub use records::{
    load_corpus, preprocess_target, write_canonical_tsv, AnnotationRecord, CorpusFormat, PerTask,
    RowIssue, Source, Task,
};
pub use split::{split_dataset, SplitRatios, Splits};
pub use vocab::{
    build_vocab, NgramId, TokenId, VocabThresholds, Vocabulary, BLANK_ID, EOS_ID, PERSON_X_ID,
    PERSON_Y_ID, PERSON_Z_ID, RESERVED_TOKENS, UNK_ID,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {} malformed row(s), first: {}", issues.len(), issues[0])]
    Malformed { path: String, issues: Vec<RowIssue> },
    #[error("event is empty after normalization")]
    EmptyEvent,
    #[error("cannot build a vocabulary from an empty training set")]
    EmptyTrainingSet,
    #[error("need at least 10 unique events to split, found {found}")]
    TooFewEvents { found: usize },
    #[error("agreement statistics need at least 2 raters, found {found}")]
    NotEnoughRaters { found: usize },
    #[error("items carry differing numbers of rater labels")]
    RaggedRatings,
    #[error("vocabulary file: {0}")]
    VocabFile(String),
}
