//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Criterion 9 is a documented reference comparison that needs the
//! released corpus and 300-d embeddings supplied via environment
//! variables; it reports without gating.

#[path = "support/mod.rs"]
mod support;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mindcast_core::bias::{analyze_bias, fit_logistic, holm_correct, BiasConfig, Direction, Lexicon};
use mindcast_core::corpus::{
    build_vocab, expand_examples, split_dataset, AnnotationRecord, EventPhrase, PerTask,
    SplitRatios, Source, Task, VocabThresholds,
};
use mindcast_core::eval::{evaluate, render_report, EvalConfig};
use mindcast_core::inference::{beam_search, BeamConfig};
use mindcast_core::model::{
    save_checkpoint, train_with_vocab, DecoderParams, DecoderSetup, DecoderVars, EmbeddingSource,
    EmbeddingTable, EncoderConfig, EncoderKind, ModelParams, ReadyModel, TrainConfig,
};
use mindcast_core::numerics::{AdamConfig, Tape, Tensor};
use mindcast_core::synthetic;

fn pass(criterion: u32, what: &str, started: Instant) {
    println!(
        "[PASS] criterion {criterion}: {what} ({:.2}s)",
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_1_gradient_correctness() {
    let started = Instant::now();
    for seed in 0..100u64 {
        support::check_ops_at_seed(seed);
    }
    let combos = [
        (EncoderKind::BiRnn, DecoderSetup::Sequence { cell: None }),
        (EncoderKind::BiRnn, DecoderSetup::Ngram),
        (EncoderKind::ConvNet, DecoderSetup::Sequence { cell: None }),
        (EncoderKind::ConvNet, DecoderSetup::Ngram),
        (EncoderKind::MeanPool, DecoderSetup::Sequence { cell: Some(3) }),
        (EncoderKind::MeanPool, DecoderSetup::Ngram),
        (EncoderKind::MaxPool, DecoderSetup::Sequence { cell: None }),
        (EncoderKind::MaxPool, DecoderSetup::Ngram),
    ];
    for seed in 0..100u64 {
        let (kind, setup) = combos[(seed % combos.len() as u64) as usize];
        support::check_composite_at_seed(seed, kind, setup);
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "gradient checks took {:.1}s (budget 60s)",
        elapsed.as_secs_f64()
    );
    pass(
        1,
        "all ops and full composite match finite differences (rel err < 1e-4, 100 seeds)",
        started,
    );
}

#[test]
fn criterion_2_beam_search_exactness() {
    let started = Instant::now();
    const EOS: usize = 0;
    for seed in [1, 8, 23] {
        // unigram space 5 (<= 6), max_len 3, exhaustive width 5^3
        let params = support::toy_sequence_model(5, 3, 3, seed);
        let h_e = Tensor::vector(vec![0.3, -0.5, 0.8]);
        let mut tape = Tape::new();
        let vars = params.register(&mut tape, false);
        let heads = match &vars.decoder {
            DecoderVars::Sequence(heads) => heads,
            _ => unreachable!(),
        };
        let h_var = tape.constant(h_e.clone());
        let beam = beam_search(
            &mut tape,
            vars.embeddings,
            &heads.xintent,
            h_var,
            EOS,
            &BeamConfig {
                width: 125,
                max_len: 3,
            },
        )
        .unwrap();
        let oracle = support::brute_force_beam(&params, &h_e, EOS, 3);
        assert_eq!(beam.len(), oracle.len());
        for (hyp, (tokens, score)) in beam.iter().zip(&oracle) {
            assert_eq!(&hyp.tokens, tokens);
            assert!((hyp.log_prob - score).abs() < 1e-9);
            let rescored = support::rescore_sequence(&params, &h_e, &hyp.tokens);
            assert!((hyp.log_prob - rescored).abs() < 1e-9);
        }
    }
    pass(
        2,
        "exhaustive-width beam equals brute-force enumeration; scores match rescoring within 1e-9",
        started,
    );
}

#[test]
fn criterion_3_overfit_birnn_sequence() {
    let started = Instant::now();
    let records = synthetic::corpus(50, 11);
    let splits = support::overfit_splits(records.clone());
    let vocab = build_vocab(
        &splits.train,
        VocabThresholds {
            unigram_min: 1,
            ngram_min: 1,
        },
    )
    .unwrap();
    let table = EmbeddingTable::<f64>::seeded_random(vocab.unigram_count(), 30, 5);
    let outcome = train_with_vocab(
        &splits,
        vocab,
        table,
        EncoderConfig::new(EncoderKind::BiRnn, 100),
        DecoderSetup::Sequence { cell: None },
        &TrainConfig {
            epochs: 200,
            batch_size: 8,
            adam: AdamConfig {
                lr: 0.005,
                ..AdamConfig::default()
            },
            seed: 7,
            unigram_min: 1,
            ngram_min: 1,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    assert!(
        outcome.log.best_dev_loss < 0.1,
        "training loss {} after 200 epochs",
        outcome.log.best_dev_loss
    );

    let report = evaluate(&outcome.model, &records, "train", &EvalConfig::default()).unwrap();
    for task in Task::ALL {
        let recall = report.tasks.get(task).recall_at_k;
        assert!(recall >= 95.0, "{task} recall {recall} < 95");
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 300.0,
        "overfit run took {:.1}s (budget 300s)",
        elapsed.as_secs_f64()
    );
    pass(
        3,
        "BiRNN-100d sequence overfits 50 examples: loss < 0.1, recall@10 >= 95%",
        started,
    );
}

fn uniform_ngram_model() -> (ReadyModel<f64>, Vec<AnnotationRecord>) {
    let records = synthetic::corpus(24, 4);
    let vocab = build_vocab(
        &records,
        VocabThresholds {
            unigram_min: 1,
            ngram_min: 1,
        },
    )
    .unwrap();
    let table = EmbeddingTable::<f64>::seeded_random(vocab.unigram_count(), 4, 1);
    let mut params = ModelParams::init(
        EncoderConfig::new(EncoderKind::MeanPool, 4),
        DecoderSetup::Ngram,
        &vocab,
        table,
        0,
    )
    .unwrap();
    if let DecoderParams::Ngram(heads) = &mut params.decoder {
        for task in Task::ALL {
            let head = heads.get_mut(task);
            head.w.fill(0.0);
            head.b.fill(0.0);
        }
    }
    (ReadyModel::new(params, vocab).unwrap(), records)
}

#[test]
fn criterion_4_analytic_metric_anchors() {
    let started = Instant::now();
    // uniform predictor: per-task cross-entropy is exactly ln of the
    // output-space size
    let (model, records) = uniform_ngram_model();
    let expected = (model.vocab.ngram_count() as f64).ln();
    let report = evaluate(&model, &records, "anchor", &EvalConfig::default()).unwrap();
    for task in Task::ALL {
        let ce = report.tasks.get(task).cross_entropy;
        assert!((ce - expected).abs() < 1e-9, "{task}: {ce} vs {expected}");
    }

    // recall@k nondecreasing in k on every evaluated model
    let models: Vec<ReadyModel<f64>> = vec![model, {
        let records = synthetic::corpus(20, 8);
        let splits = support::overfit_splits(records);
        let vocab = build_vocab(
            &splits.train,
            VocabThresholds {
                unigram_min: 1,
                ngram_min: 1,
            },
        )
        .unwrap();
        let table = EmbeddingTable::<f64>::seeded_random(vocab.unigram_count(), 8, 2);
        train_with_vocab(
            &splits,
            vocab,
            table,
            EncoderConfig::new(EncoderKind::BiRnn, 8),
            DecoderSetup::Ngram,
            &TrainConfig {
                epochs: 20,
                batch_size: 8,
                adam: AdamConfig {
                    lr: 0.02,
                    ..AdamConfig::default()
                },
                seed: 3,
                unigram_min: 1,
                ngram_min: 1,
                ..TrainConfig::default()
            },
        )
        .unwrap()
        .model
    }];
    for (mi, model) in models.iter().enumerate() {
        let mut previous = [0.0f64; 3];
        for k in [1, 2, 3, 5, 8, 10, 15] {
            let report = evaluate(
                model,
                &records,
                "anchor",
                &EvalConfig {
                    k,
                    ..EvalConfig::default()
                },
            )
            .unwrap();
            for (i, task) in Task::ALL.iter().enumerate() {
                let r = report.tasks.get(*task).recall_at_k;
                assert!(
                    r >= previous[i] - 1e-12,
                    "model {mi}, {task}: recall@{k} {r} < {}",
                    previous[i]
                );
                previous[i] = r;
            }
        }
    }
    pass(
        4,
        "uniform predictor hits ln|V| within 1e-9; recall@k nondecreasing in k",
        started,
    );
}

#[test]
fn criterion_5_corpus_machinery() {
    let started = Instant::now();

    // planted frequencies: exactly the threshold-crossing items admitted
    let mut records = Vec::new();
    let record = |event: &str, xreact: &[&str]| {
        AnnotationRecord::new(
            EventPhrase::parse(event).unwrap(),
            Source::RocStory,
            true,
            true,
            PerTask {
                xintent: vec!["to act".into()],
                xreact: xreact.iter().map(|s| s.to_string()).collect(),
                oreact: vec![],
            },
        )
    };
    records.push(record("PersonX says solo once", &[]));
    records.push(record("PersonX says duo and duo", &[]));
    for _ in 0..6 {
        records.push(record("PersonX smiles", &["very happy"]));
    }
    for _ in 0..5 {
        records.push(record("PersonX grins", &["fairly happy"]));
    }
    let vocab = build_vocab(&records, VocabThresholds::default()).unwrap();
    assert!(vocab.token_id("duo").is_some(), "freq-2 unigram admitted");
    assert!(vocab.token_id("solo").is_none(), "freq-1 unigram excluded");
    assert!(vocab.ngram_id("very happy").is_some(), "freq-6 bigram admitted");
    assert!(vocab.ngram_id("fairly happy").is_none(), "freq-5 bigram excluded");

    // expansion counts equal brute-force cross-product recounts
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let pool = ["to eat", "to nap", "happy", "sad", "none", "tired"];
    let mut total = 0usize;
    let mut expanded = 0usize;
    for i in 0..100 {
        let pick = |rng: &mut ChaCha8Rng| -> Vec<String> {
            (0..rng.random_range(1..=3))
                .map(|_| pool[rng.random_range(0..pool.len())].to_string())
                .collect()
        };
        let rec = AnnotationRecord::new(
            EventPhrase::parse(&format!("PersonX does thing{i}")).unwrap(),
            Source::Ngrams,
            true,
            true,
            PerTask {
                xintent: pick(&mut rng),
                xreact: pick(&mut rng),
                oreact: pick(&mut rng),
            },
        );
        let (a, b, c) = support::response_counts(&rec);
        total += a * b * c;
        expanded += expand_examples(&rec).len();
    }
    assert_eq!(expanded, total);

    // split by unique event: disjoint and jointly exhaustive
    let records = synthetic::corpus(83, 3);
    let all_events: std::collections::BTreeSet<String> =
        records.iter().map(|r| r.event.text()).collect();
    let splits = split_dataset(records, SplitRatios::default(), 17).unwrap();
    let sets: Vec<std::collections::BTreeSet<String>> = [&splits.train, &splits.dev, &splits.test]
        .iter()
        .map(|s| s.iter().map(|r| r.event.text()).collect())
        .collect();
    assert!(sets[0].is_disjoint(&sets[1]));
    assert!(sets[0].is_disjoint(&sets[2]));
    assert!(sets[1].is_disjoint(&sets[2]));
    let union: std::collections::BTreeSet<String> =
        sets.iter().flatten().cloned().collect();
    assert_eq!(union, all_events);

    pass(
        5,
        "vocab thresholds exact; expansion equals recount; split partitions by event",
        started,
    );
}

#[test]
fn criterion_6_statistics_oracles() {
    let started = Instant::now();

    // Holm hand-worked cases
    let out = holm_correct(&[0.01, 0.04], 0.05);
    assert_eq!(out.adjusted, vec![0.02, 0.04]);
    assert_eq!(out.reject, vec![true, true]);
    let out = holm_correct(&[0.03, 0.04], 0.05);
    assert_eq!(out.adjusted, vec![0.06, 0.06]);
    assert_eq!(out.reject, vec![false, false]);

    // planted logistic coefficient at n = 10,000
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 10_000usize;
    let sigmoid = |x: f64| 1.0 / (1.0 + (-x).exp());
    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut c = Vec::new();
    for _ in 0..n {
        let xv: f64 = rng.random_range(-1.5..1.5);
        let cv: f64 = rng.random_range(-1.5..1.5);
        y.push(rng.random_bool(sigmoid(0.3 + 2.0 * xv + 0.5 * cv)));
        x.push(xv);
        c.push(cv);
    }
    let fit = fit_logistic(&y, &x, &c).unwrap();
    assert!(fit.coefficient > 0.0);
    assert!(
        (fit.coefficient - 2.0).abs() / 2.0 < 0.2,
        "planted 2.0 recovered as {}",
        fit.coefficient
    );

    // synthetic null: x mirrored across classes, so p > 0.5
    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut c = Vec::new();
    for _ in 0..(n / 2) {
        let xv: f64 = rng.random_range(-2.0..2.0);
        let cv: f64 = rng.random_range(-2.0..2.0);
        for label in [true, false] {
            y.push(label);
            x.push(xv);
            c.push(cv);
        }
    }
    let fit = fit_logistic(&y, &x, &c).unwrap();
    assert!(fit.p_value > 0.5, "null p = {}", fit.p_value);

    // standardized columns: |mean| < 1e-12, |var - 1| < 1e-9
    let lex = Lexicon::parse("[A]\nfood\n[B]\nangry\n").unwrap();
    let texts: Vec<Vec<Vec<String>>> = (0..9)
        .map(|i| {
            let word = match i % 3 {
                0 => "food",
                1 => "angry",
                _ => "calm",
            };
            vec![vec![word.to_string(), "pad".to_string()]]
        })
        .collect();
    let agg = mindcast_core::bias::aggregate_characters(&texts, &lex).unwrap();
    for k in 0..2 {
        let column: Vec<f64> = agg.matrix.iter().map(|r| r[k]).collect();
        let mean = column.iter().sum::<f64>() / column.len() as f64;
        let var = column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / column.len() as f64;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-9);
    }

    pass(
        6,
        "Holm hand cases; planted coefficient within 20% and null p > 0.5; z-scored moments exact",
        started,
    );
}

#[test]
fn criterion_7_end_to_end_bias_pipeline() {
    let started = Instant::now();

    // rigged toy model: cooking events decode to eating words, fighting
    // events to anger words
    let records = synthetic::rigged_corpus(1);
    let splits = support::overfit_splits(records);
    let vocab = build_vocab(
        &splits.train,
        VocabThresholds {
            unigram_min: 1,
            ngram_min: 1,
        },
    )
    .unwrap();
    let table = EmbeddingTable::<f64>::seeded_random(vocab.unigram_count(), 12, 2);
    let model = train_with_vocab(
        &splits,
        vocab,
        table,
        EncoderConfig::new(EncoderKind::MeanPool, 12),
        DecoderSetup::Ngram,
        &TrainConfig {
            epochs: 150,
            batch_size: 8,
            adam: AdamConfig {
                lr: 0.05,
                ..AdamConfig::default()
            },
            seed: 4,
            unigram_min: 1,
            ngram_min: 1,
            ..TrainConfig::default()
        },
    )
    .unwrap()
    .model;

    let cast = synthetic::cast(100, 21);
    let rows: Vec<mindcast_core::bias::CharacterEventRow> = cast
        .iter()
        .flat_map(|member| {
            member.events.iter().map(|event| mindcast_core::bias::CharacterEventRow {
                character_id: member.id.clone(),
                gender: member.gender.clone(),
                word_count: member.word_count,
                event: event.clone(),
            })
        })
        .collect();
    let lexicon = Lexicon::parse(synthetic::demo_lexicon()).unwrap();
    let report = analyze_bias(&model, &rows, &lexicon, &BiasConfig::default()).unwrap();

    // the planted category: INGEST is female-associated with a
    // Holm-significant adjusted p in at least one task group
    let ingest: Vec<_> = report
        .results
        .iter()
        .filter(|r| r.category == "INGEST")
        .collect();
    assert!(!ingest.is_empty(), "INGEST regressions missing");
    let flagged: Vec<_> = ingest
        .iter()
        .filter(|r| r.significance.is_some())
        .collect();
    assert!(
        !flagged.is_empty(),
        "INGEST not Holm-significant anywhere: {ingest:?}"
    );
    for row in &flagged {
        assert_eq!(
            row.direction,
            Direction::FemaleAssociated,
            "INGEST direction wrong: {row:?}"
        );
        assert!(row.adjusted_p < 0.05);
    }

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "bias pipeline took {:.1}s (budget 60s)",
        elapsed.as_secs_f64()
    );
    pass(
        7,
        "rigged model + synthetic cast flags INGEST female-associated, Holm-significant",
        started,
    );
}

#[test]
fn criterion_8_determinism() {
    let started = Instant::now();
    let run = || {
        let records = synthetic::corpus(30, 6);
        let splits = split_dataset(records, SplitRatios::default(), 19).unwrap();
        let vocab = build_vocab(
            &splits.train,
            VocabThresholds {
                unigram_min: 1,
                ngram_min: 1,
            },
        )
        .unwrap();
        let table = EmbeddingTable::<f64>::seeded_random(vocab.unigram_count(), 8, 9);
        let outcome = train_with_vocab(
            &splits,
            vocab,
            table,
            EncoderConfig::new(EncoderKind::BiRnn, 8),
            DecoderSetup::Sequence { cell: None },
            &TrainConfig {
                epochs: 8,
                batch_size: 8,
                adam: AdamConfig {
                    lr: 0.01,
                    ..AdamConfig::default()
                },
                seed: 13,
                unigram_min: 1,
                ngram_min: 1,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        let report = evaluate(&outcome.model, &splits.dev, "dev", &EvalConfig::default()).unwrap();
        (outcome.model, render_report(&report))
    };
    let (model_a, report_a) = run();
    let (model_b, report_b) = run();
    assert_eq!(report_a, report_b, "evaluation reports differ");

    let dir = tempfile::tempdir().unwrap();
    let (pa, pb) = (dir.path().join("a.ckpt"), dir.path().join("b.ckpt"));
    save_checkpoint(&model_a.params, &pa).unwrap();
    save_checkpoint(&model_b.params, &pb).unwrap();
    assert_eq!(
        std::fs::read(&pa).unwrap(),
        std::fs::read(&pb).unwrap(),
        "checkpoints differ byte-wise"
    );
    pass(
        8,
        "identical config+seed: byte-identical checkpoints and identical reports",
        started,
    );
}

/// Reference comparison against the published full-corpus numbers. Needs
/// `MINDCAST_RELEASED_CORPUS` (CSV) and `MINDCAST_EMBEDDINGS_300D` set;
/// otherwise it reports SKIP. Agreement within +/-5 recall points is
/// expected but explicitly does not gate the build.
#[test]
fn criterion_9_reference_evaluation() {
    let started = Instant::now();
    let corpus = std::env::var("MINDCAST_RELEASED_CORPUS").ok();
    let embeddings = std::env::var("MINDCAST_EMBEDDINGS_300D").ok();
    let (Some(corpus), Some(embeddings)) = (corpus, embeddings) else {
        println!(
            "[SKIP] criterion 9: released corpus / 300-d embeddings not supplied \
             (set MINDCAST_RELEASED_CORPUS and MINDCAST_EMBEDDINGS_300D); \
             non-gating reference"
        );
        return;
    };

    let records = mindcast_core::corpus::load_corpus(
        std::path::Path::new(&corpus),
        mindcast_core::corpus::CorpusFormat::ReleasedCsv,
    )
    .expect("released corpus loads");
    let splits = split_dataset(records, SplitRatios::default(), 0).unwrap();
    let outcome = mindcast_core::model::train::<f64>(
        &splits,
        &EmbeddingSource::File {
            path: embeddings.into(),
            dim_override: None,
        },
        EncoderConfig::new(EncoderKind::BiRnn, 100),
        DecoderSetup::Sequence { cell: None },
        &TrainConfig::default(),
    )
    .expect("reference training run");
    let report = evaluate(&outcome.model, &splits.test, "test", &EvalConfig::default()).unwrap();

    println!("[INFO] criterion 9 reference values: test cross-entropy 4.22; recall@10 Intent 40 / XReact 40 / OReact 67");
    println!(
        "[INFO] criterion 9 measured: cross-entropy {:.2}; recall@10 Intent {:.0} / XReact {:.0} / OReact {:.0}",
        report.average_cross_entropy,
        report.tasks.xintent.recall_at_k,
        report.tasks.xreact.recall_at_k,
        report.tasks.oreact.recall_at_k,
    );
    println!(
        "[INFO] criterion 9: agreement within +/-5 recall points is expected but does not gate the build"
    );
    pass(9, "reference evaluation reported alongside published values", started);
}
