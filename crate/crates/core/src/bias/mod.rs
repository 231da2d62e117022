//! Lexicon-based portrayal analysis: score generated inferences against a
//! category lexicon, aggregate per character, and correlate categories
//! with gender via logistic regression controlled for scene word count,
//! Holm-corrected across the full family of tests.

mod holm;
mod lexicon;
mod logistic;
mod pipeline;

pub use holm::{holm_correct, HolmOutcome};
pub use lexicon::{LexEntry, Lexicon};
pub use logistic::{fit_logistic, LogisticFit, RIDGE};
pub use pipeline::{
    aggregate_characters, analyze_bias, analyze_profiles, build_profiles, load_character_events,
    render_bias_report, AggregateOutcome, BiasConfig, BiasReport, CharacterEventRow,
    CharacterProfile, Direction, Gender, RegressionResult, SignificanceTier,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BiasError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon line {line}: {message}")]
    LexiconParse { line: usize, message: String },
    #[error("character events file {path}: line {line}: {message}")]
    CharacterParse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("insufficient data: {0}")]
    NotEnoughData(String),
    #[error("gender labels hold a single class; nothing to regress")]
    SingleClass,
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}
