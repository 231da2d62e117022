use anyhow::{Context, Result};

use mindcast_core::corpus::{build_vocab, write_canonical_tsv};
use mindcast_core::synthetic;

use super::load_records;
use crate::config::RunConfig;

pub fn run_build_vocab(config: &RunConfig) -> Result<()> {
    let records = load_records(config)?;
    let vocab = build_vocab(&records, config.thresholds())?;
    let out_dir = config.out_dir();
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let path = config
        .paths
        .vocab
        .clone()
        .unwrap_or_else(|| out_dir.join("vocab.json"));
    vocab.save(&path)?;
    config.write_snapshot("build-vocab")?;
    println!(
        "vocabulary: {} unigrams, {} n-grams total (thresholds: unigram >= {}, 2/3-gram >= {})",
        vocab.unigram_count(),
        vocab.ngram_count(),
        vocab.thresholds().unigram_min,
        vocab.thresholds().ngram_min,
    );
    println!("fingerprint: {}", vocab.fingerprint());
    println!("written to {}", path.display());
    Ok(())
}

pub struct SyntheticArgs {
    pub events: usize,
    pub cast: usize,
    pub dim: usize,
    pub multi_response: bool,
}

/// Generate the seeded toy corpus, embedding file, cast, and lexicon used
/// by the test and acceptance suites, so every command can run without the
/// released dataset.
pub fn run_make_synthetic(config: &RunConfig, args: &SyntheticArgs) -> Result<()> {
    let out_dir = config.out_dir();
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let seed = config.run.seed;

    let records = if args.multi_response {
        synthetic::corpus_multi_response(args.events, seed)
    } else {
        synthetic::corpus(args.events, seed)
    };
    let corpus_path = out_dir.join("corpus.tsv");
    write_canonical_tsv(&corpus_path, &records)?;

    let embeddings_path = out_dir.join("embeddings.txt");
    std::fs::write(
        &embeddings_path,
        synthetic::render_embedding_file(&records, args.dim, seed ^ 0x5eed),
    )
    .with_context(|| format!("cannot write {}", embeddings_path.display()))?;

    let cast_path = out_dir.join("characters.tsv");
    std::fs::write(
        &cast_path,
        synthetic::render_cast_tsv(&synthetic::cast(args.cast, seed ^ 0xca57)),
    )
    .with_context(|| format!("cannot write {}", cast_path.display()))?;

    let lexicon_path = out_dir.join("lexicon.txt");
    std::fs::write(&lexicon_path, synthetic::demo_lexicon())
        .with_context(|| format!("cannot write {}", lexicon_path.display()))?;

    // a ready-to-run config pointing at the generated files
    let mut generated = config.clone();
    generated.paths.corpus = Some(corpus_path.clone());
    generated.paths.embeddings = Some(embeddings_path.clone());
    generated.paths.embedding_dim = Some(args.dim);
    generated.paths.characters = Some(cast_path.clone());
    generated.paths.lexicon = Some(lexicon_path.clone());
    generated.paths.checkpoint = Some(out_dir.join("checkpoint.ckpt"));
    generated.paths.vocab = Some(out_dir.join("vocab.json"));
    generated.train.unigram_min = 1;
    generated.train.ngram_min = 1;
    let config_path = out_dir.join("run.toml");
    std::fs::write(
        &config_path,
        toml::to_string_pretty(&generated).context("config serializes")?,
    )
    .with_context(|| format!("cannot write {}", config_path.display()))?;

    config.write_snapshot("make-synthetic")?;
    println!(
        "synthetic data: {} events ({} annotation rows), cast of {}",
        args.events,
        records.len(),
        args.cast
    );
    println!("corpus:     {}", corpus_path.display());
    println!("embeddings: {}", embeddings_path.display());
    println!("characters: {}", cast_path.display());
    println!("lexicon:    {}", lexicon_path.display());
    println!("config:     {}", config_path.display());
    Ok(())
}
