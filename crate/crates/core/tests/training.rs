//! Training-loop behavior: overfitting a seeded toy corpus, determinism,
//! checkpoint round trips, frozen embeddings, and NaN diagnostics.

#[path = "support/mod.rs"]
mod support;

use mindcast_core::corpus::build_vocab;
use mindcast_core::corpus::VocabThresholds;
use mindcast_core::eval::{evaluate, EvalConfig};
use mindcast_core::model::{
    load_checkpoint, save_checkpoint, train_with_vocab, DecoderSetup, EmbeddingTable,
    EncoderConfig, EncoderKind, ModelError, ReadyModel, TrainConfig,
};
use mindcast_core::numerics::AdamConfig;
use mindcast_core::synthetic;

fn overfit_config(epochs: usize, batch_size: usize, lr: f64) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size,
        adam: AdamConfig {
            lr,
            ..AdamConfig::default()
        },
        seed: 7,
        unigram_min: 1,
        ngram_min: 1,
        ..TrainConfig::default()
    }
}

fn train_toy(
    encoder: EncoderKind,
    setup: DecoderSetup,
    h: usize,
    d: usize,
    config: &TrainConfig,
) -> (ReadyModel<f64>, mindcast_core::model::TrainLog) {
    let records = synthetic::corpus(50, 11);
    let splits = support::overfit_splits(records);
    let vocab = build_vocab(
        &splits.train,
        VocabThresholds {
            unigram_min: config.unigram_min,
            ngram_min: config.ngram_min,
        },
    )
    .unwrap();
    let table = EmbeddingTable::<f64>::seeded_random(vocab.unigram_count(), d, 5);
    let outcome = train_with_vocab(
        &splits,
        vocab,
        table,
        EncoderConfig::new(encoder, h),
        setup,
        config,
    )
    .unwrap();
    (outcome.model, outcome.log)
}

#[test]
fn birnn_sequence_overfits_fifty_examples() {
    let config = overfit_config(200, 8, 0.005);
    let (model, log) = train_toy(
        EncoderKind::BiRnn,
        DecoderSetup::Sequence { cell: None },
        100,
        30,
        &config,
    );
    let final_loss = log.epochs.last().unwrap().train_loss;
    assert!(
        log.best_dev_loss < 0.1,
        "best loss {} after {} epochs (final {final_loss})",
        log.best_dev_loss,
        log.epochs.len()
    );

    // recall@10 on its own training set
    let records = synthetic::corpus(50, 11);
    let report = evaluate(&model, &records, "train", &EvalConfig::default()).unwrap();
    for task in mindcast_core::corpus::Task::ALL {
        let recall = report.tasks.get(task).recall_at_k;
        assert!(recall >= 95.0, "{task}: recall {recall} < 95");
    }
}

#[test]
fn same_seed_reproduces_identical_parameters_and_checkpoints() {
    let config = overfit_config(3, 8, 0.01);
    let (a, _) = train_toy(EncoderKind::BiRnn, DecoderSetup::Ngram, 8, 6, &config);
    let (b, _) = train_toy(EncoderKind::BiRnn, DecoderSetup::Ngram, 8, 6, &config);
    assert_eq!(a.params, b.params);

    let dir = tempfile::tempdir().unwrap();
    let pa = dir.path().join("a.ckpt");
    let pb = dir.path().join("b.ckpt");
    save_checkpoint(&a.params, &pa).unwrap();
    save_checkpoint(&b.params, &pb).unwrap();
    assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
}

#[test]
fn checkpoint_round_trip_preserves_structure_and_predictions() {
    let config = overfit_config(3, 8, 0.01);
    let (model, _) = train_toy(
        EncoderKind::ConvNet,
        DecoderSetup::Sequence { cell: None },
        8,
        6,
        &config,
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    save_checkpoint(&model.params, &path).unwrap();
    let reloaded = load_checkpoint::<f64>(&path).unwrap();
    assert_eq!(reloaded.meta, model.params.meta);

    // checkpoint stores 32-bit reals; predictions agree after the round trip
    let ready = ReadyModel::new(reloaded, model.vocab.clone()).unwrap();
    let cfg = mindcast_core::inference::InferenceConfig::default();
    let before = model.predict("PersonX bakes bread", &cfg).unwrap();
    let after = ready.predict("PersonX bakes bread", &cfg).unwrap();
    let texts = |r: &mindcast_core::inference::InferenceResult| {
        r.candidates
            .map(|_, list| list.iter().map(|c| c.text()).collect::<Vec<_>>())
    };
    assert_eq!(texts(&before), texts(&after));

    // saving the reloaded parameters is byte-stable
    let path2 = dir.path().join("model2.ckpt");
    save_checkpoint(&ready.params, &path2).unwrap();
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&path2).unwrap()
    );
}

#[test]
fn embeddings_stay_fixed_through_training() {
    let records = synthetic::corpus(30, 2);
    let splits = support::overfit_splits(records);
    let vocab = build_vocab(
        &splits.train,
        VocabThresholds {
            unigram_min: 1,
            ngram_min: 1,
        },
    )
    .unwrap();
    let table = EmbeddingTable::<f64>::seeded_random(vocab.unigram_count(), 6, 5);
    let before = table.clone();
    let outcome = train_with_vocab(
        &splits,
        vocab,
        table,
        EncoderConfig::new(EncoderKind::BiRnn, 8),
        DecoderSetup::Sequence { cell: None },
        &overfit_config(3, 8, 0.01),
    )
    .unwrap();
    assert_eq!(outcome.model.params.embeddings, before);
}

#[test]
fn full_batch_training_loss_is_monotone_on_overfit_set() {
    let config = overfit_config(30, 64, 0.01);
    let (_, log) = train_toy(
        EncoderKind::MeanPool,
        DecoderSetup::Sequence { cell: None },
        30,
        30,
        &config,
    );
    // full batch (batch >= corpus) at epoch granularity
    let losses: Vec<f64> = log.epochs.iter().map(|e| e.train_loss).collect();
    for pair in losses.windows(2) {
        assert!(
            pair[1] <= pair[0],
            "loss increased: {} -> {} over {losses:?}",
            pair[0],
            pair[1]
        );
    }
}

#[test]
fn non_finite_loss_aborts_with_diagnostics() {
    // a corrupt pretrained vector poisons the forward pass
    let config = overfit_config(5, 8, 0.001);
    let records = synthetic::corpus(20, 3);
    let splits = support::overfit_splits(records);
    let vocab = build_vocab(
        &splits.train,
        VocabThresholds {
            unigram_min: 1,
            ngram_min: 1,
        },
    )
    .unwrap();
    let mut table = EmbeddingTable::<f64>::seeded_random(vocab.unigram_count(), 6, 5);
    let mut poisoned = table.tensor().clone();
    // every synthetic event mentions PersonX, so this vector is always read
    let row = mindcast_core::corpus::PERSON_X_ID;
    poisoned.data_mut()[row * 6] = f64::NAN;
    table = EmbeddingTable::from_tensor(poisoned);
    let result = train_with_vocab(
        &splits,
        vocab,
        table,
        EncoderConfig::new(EncoderKind::BiRnn, 8),
        DecoderSetup::Sequence { cell: None },
        &config,
    );
    match result {
        Err(ModelError::NanLoss { epoch, lr, .. }) => {
            assert_eq!(epoch, 1);
            assert_eq!(lr, 0.001);
        }
        other => panic!("expected NaN abort, got {:?}", other.map(|_| "model")),
    }
}
