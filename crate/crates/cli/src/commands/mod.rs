pub mod bias;
pub mod data;
pub mod eval;
pub mod predict;
pub mod train;

use std::path::Path;

use anyhow::{Context, Result};

use mindcast_core::corpus::{load_corpus, AnnotationRecord, Vocabulary};
use mindcast_core::model::{load_checkpoint, ReadyModel};
use mindcast_core::numerics::Real;

use crate::config::RunConfig;

/// Load checkpoint + vocabulary and verify the stored fingerprint.
pub fn load_model<T: Real>(config: &RunConfig) -> Result<ReadyModel<T>> {
    let ckpt_path = config.require_existing("checkpoint", &config.paths.checkpoint)?;
    let vocab_path = match &config.paths.vocab {
        Some(v) => v.clone(),
        // the train command writes vocab.json beside the checkpoint
        None => ckpt_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("vocab.json"),
    };
    if !vocab_path.exists() {
        anyhow::bail!(
            "vocabulary file does not exist: {} (pass --vocab or keep vocab.json beside the checkpoint)",
            vocab_path.display()
        );
    }
    let params = load_checkpoint::<T>(&ckpt_path)?;
    let vocab = Vocabulary::load(&vocab_path)?;
    let model = ReadyModel::new(params, vocab)?;
    Ok(model)
}

pub fn load_records(config: &RunConfig) -> Result<Vec<AnnotationRecord>> {
    let path = config.require_existing("corpus", &config.paths.corpus)?;
    let format = config.corpus_format()?;
    let records = load_corpus(&path, format)
        .with_context(|| format!("loading corpus {}", path.display()))?;
    Ok(records)
}
