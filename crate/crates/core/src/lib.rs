//! Library for learning to describe the intents and emotional reactions of
//! people involved in short free-form event phrases, and for analyzing what
//! those generated descriptions reveal about character portrayal in scripts.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`numerics`]: reverse-mode autodiff tape, Adam, gradient checking
//! - [`corpus`]: event normalization, vocabulary, splits, agreement stats
//! - [`model`]: event encoders, task decoder heads, multitask training
//! - [`inference`]: top-k ranking, beam search, prediction, interpolation
//! - [`eval`]: cross-entropy, recall@k, subset breakdowns, human-rating
//!   precision
//! - [`bias`]: lexicon scoring, per-character aggregation, controlled
//!   logistic regression with Holm correction
//! - [`synthetic`]: seeded toy corpora, casts, and lexicons for tests

// index-heavy kernels and the parameter enums read better unrefactored
#![allow(clippy::needless_range_loop, clippy::large_enum_variant, clippy::type_complexity)]

pub mod bias;
pub mod corpus;
pub mod eval;
pub mod inference;
pub mod model;
pub mod numerics;
pub mod synthetic;
