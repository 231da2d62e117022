use std::fmt::Write as _;

use anyhow::{Context, Result};

use mindcast_core::corpus::split_dataset;
use mindcast_core::model::{save_checkpoint, train, EmbeddingSource};
use mindcast_core::numerics::Real;

use super::load_records;
use crate::config::RunConfig;

pub fn run<T: Real>(config: &RunConfig) -> Result<()> {
    let records = load_records(config)?;
    let embeddings_path = config.require_existing("embeddings", &config.paths.embeddings)?;
    let source = EmbeddingSource::File {
        path: embeddings_path,
        dim_override: config.paths.embedding_dim,
    };
    let encoder = config.encoder_config()?;
    let decoder = config.decoder_setup()?;
    let train_config = config.train_config();

    let splits = split_dataset(records, config.split_ratios(), config.run.seed)?;
    eprintln!(
        "split: {} train / {} dev / {} test annotation rows (seed {})",
        splits.train.len(),
        splits.dev.len(),
        splits.test.len(),
        config.run.seed
    );

    let outcome = train::<T>(&splits, &source, encoder, decoder, &train_config)?;

    let out_dir = config.out_dir();
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let ckpt_path = out_dir.join("checkpoint.ckpt");
    save_checkpoint(&outcome.model.params, &ckpt_path)?;
    let vocab_path = out_dir.join("vocab.json");
    outcome.model.vocab.save(&vocab_path)?;

    let mut metrics = String::from("epoch\ttrain_loss\tdev_loss\n");
    for epoch in &outcome.log.epochs {
        let _ = writeln!(
            metrics,
            "{}\t{:.6}\t{:.6}",
            epoch.epoch, epoch.train_loss, epoch.dev_loss
        );
    }
    let metrics_path = out_dir.join("metrics.tsv");
    std::fs::write(&metrics_path, metrics)
        .with_context(|| format!("cannot write {}", metrics_path.display()))?;
    config.write_snapshot("train")?;

    if outcome.ngram_coverage.total > 0 && outcome.ngram_coverage.fraction() < 1.0 {
        eprintln!(
            "n-gram target coverage: {:.1}% of responses fit the {{1,2,3}}-gram space",
            100.0 * outcome.ngram_coverage.fraction()
        );
    }
    if outcome.log.truncated_events > 0 {
        eprintln!(
            "warning: {} training events exceeded max_event_len and were truncated",
            outcome.log.truncated_events
        );
    }
    println!(
        "trained {} epochs; best dev loss {:.4} at epoch {}",
        outcome.log.epochs.len(),
        outcome.log.best_dev_loss,
        outcome.log.best_epoch
    );
    println!("checkpoint: {}", ckpt_path.display());
    println!("vocabulary: {}", vocab_path.display());
    println!("metrics:    {}", metrics_path.display());
    Ok(())
}
