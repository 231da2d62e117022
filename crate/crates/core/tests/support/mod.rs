//! Shared oracles and toy-model builders for the integration and
//! acceptance suites.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mindcast_core::corpus::{
    build_vocab, PerTask, Splits, TokenId, VocabThresholds, Vocabulary,
};
use mindcast_core::model::{
    decode_sequence_step, init_decoder_state, ConvSpec, DecoderParams, DecoderSetup,
    DecoderVars, EmbeddingTable, EncoderConfig, EncoderKind, EncoderParams, ModelMeta,
    ModelParams, SeqVars, CHECKPOINT_FORMAT_VERSION,
};
use mindcast_core::numerics::{
    grad_check, gru_cell, GruWeights, NumericsError, Tape, Tensor, Var,
};
use mindcast_core::synthetic;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-4;

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    Tensor::new(data, shape.to_vec()).unwrap()
}

/// Keep coordinates away from kinks (relu at 0, max ties) so central
/// differences stay valid.
fn rand_tensor_off_kinks(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n)
        .map(|_| {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            sign * rng.random_range(0.05..1.5)
        })
        .collect();
    Tensor::new(data, shape.to_vec()).unwrap()
}

fn assert_grad<F>(name: &str, seed: u64, build: F, point: &[Tensor<f64>], h: f64, tol: f64)
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var, NumericsError>,
{
    let report = grad_check(build, point, h, tol).unwrap_or_else(|e| {
        panic!("{name} (seed {seed}): grad_check failed to run: {e}");
    });
    assert!(
        report.pass,
        "{name} (seed {seed}): max rel err {} >= {tol}",
        report.max_rel_err
    );
}

/// Finite-difference check of every differentiable tape operation at one
/// seed, randomized small shapes.
pub fn check_ops_at_seed(seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(2..5usize);
    let k = rng.random_range(2..5usize);
    let n = rng.random_range(2..4usize);

    // matmul, matrix x matrix
    let a = rand_tensor(&mut rng, &[m, k], -1.5, 1.5);
    let b = rand_tensor(&mut rng, &[k, n], -1.5, 1.5);
    let w = rand_tensor(&mut rng, &[m, n], -1.0, 1.0);
    assert_grad(
        "matmul",
        seed,
        move |t, vars| {
            let c = t.matmul(vars[0], vars[1])?;
            let wv = t.constant(w.clone());
            let prod = t.mul(c, wv)?;
            let ones = t.constant(Tensor::new(vec![1.0; m * n], vec![m, n])?);
            t.dot(prod, ones)
        },
        &[a, b],
        FD_STEP,
        FD_TOL,
    );

    // matmul, matrix x vector
    let a = rand_tensor(&mut rng, &[m, k], -1.5, 1.5);
    let x = rand_tensor(&mut rng, &[k], -1.5, 1.5);
    let w = rand_tensor(&mut rng, &[m], -1.0, 1.0);
    assert_grad(
        "matvec",
        seed,
        move |t, vars| {
            let c = t.matmul(vars[0], vars[1])?;
            let wv = t.constant(w.clone());
            t.dot(c, wv)
        },
        &[a, x],
        FD_STEP,
        FD_TOL,
    );

    // add / sub / mul / dot / concat through a nonlinearity
    let u = rand_tensor(&mut rng, &[k], -1.0, 1.0);
    let v = rand_tensor(&mut rng, &[k], -1.0, 1.0);
    let w = rand_tensor(&mut rng, &[2 * k], -1.0, 1.0);
    assert_grad(
        "add-sub-mul-concat",
        seed,
        move |t, vars| {
            let s = t.add(vars[0], vars[1])?;
            let d = t.sub(vars[0], vars[1])?;
            let p = t.mul(s, d)?;
            let c = t.concat(&[p, vars[0]])?;
            let a = t.tanh(c);
            let wv = t.constant(w.clone());
            t.dot(a, wv)
        },
        &[u, v],
        FD_STEP,
        FD_TOL,
    );

    // tanh / sigmoid / relu elementwise
    let x = rand_tensor_off_kinks(&mut rng, &[m, k]);
    let w = rand_tensor(&mut rng, &[k], -1.0, 1.0);
    assert_grad(
        "activations",
        seed,
        move |t, vars| {
            let th = t.tanh(vars[0]);
            let sg = t.sigmoid(th);
            let rl = t.relu(sg);
            let pooled = t.mean_axis0(rl)?;
            let wv = t.constant(w.clone());
            t.dot(pooled, wv)
        },
        &[x],
        FD_STEP,
        FD_TOL,
    );

    // elementwise max with a margin between the operands
    let base = rand_tensor(&mut rng, &[k], -1.0, 1.0);
    let mut other = base.clone();
    for val in other.data_mut() {
        let offset = rng.random_range(0.1..0.8);
        *val += if rng.random_bool(0.5) { offset } else { -offset };
    }
    let w = rand_tensor(&mut rng, &[k], -1.0, 1.0);
    assert_grad(
        "elementwise-max",
        seed,
        move |t, vars| {
            let mx = t.elementwise_max(vars[0], vars[1])?;
            let wv = t.constant(w.clone());
            t.dot(mx, wv)
        },
        &[base, other],
        FD_STEP,
        FD_TOL,
    );

    // max over axis 0 with distinct column values
    let mut mat = rand_tensor(&mut rng, &[m, k], -1.0, 1.0);
    for c in 0..k {
        for r in 0..m {
            let v = mat.at2(r, c);
            mat.set2(r, c, v + (r as f64) * 0.31 * if c % 2 == 0 { 1.0 } else { -1.0 });
        }
    }
    let w = rand_tensor(&mut rng, &[k], -1.0, 1.0);
    assert_grad(
        "max-over-axis",
        seed,
        move |t, vars| {
            let mx = t.max_axis0(vars[0])?;
            let wv = t.constant(w.clone());
            t.dot(mx, wv)
        },
        &[mat],
        FD_STEP,
        FD_TOL,
    );

    // softmax backward through a weighted sum
    let logits = rand_tensor(&mut rng, &[k + 2], -2.0, 2.0);
    let w = rand_tensor(&mut rng, &[k + 2], -1.0, 1.0);
    assert_grad(
        "softmax",
        seed,
        move |t, vars| {
            let s = t.softmax(vars[0])?;
            let wv = t.constant(w.clone());
            t.dot(s, wv)
        },
        &[logits],
        FD_STEP,
        FD_TOL,
    );

    // fused softmax cross-entropy on the logits
    let logits = rand_tensor(&mut rng, &[k + 3], -2.0, 2.0);
    let gold = rng.random_range(0..k + 3);
    assert_grad(
        "softmax-cross-entropy",
        seed,
        move |t, vars| {
            let s = t.softmax(vars[0])?;
            t.cross_entropy(s, gold)
        },
        &[logits],
        FD_STEP,
        FD_TOL,
    );

    // embedding lookup gradient w.r.t. the table
    let vocab = rng.random_range(4..8usize);
    let d = rng.random_range(2..4usize);
    let table = rand_tensor(&mut rng, &[vocab, d], -1.0, 1.0);
    let len = rng.random_range(1..5usize);
    let ids: Vec<usize> = (0..len).map(|_| rng.random_range(0..vocab)).collect();
    let w = rand_tensor(&mut rng, &[d], -1.0, 1.0);
    assert_grad(
        "embedding-lookup",
        seed,
        move |t, vars| {
            let seq = t.embedding_lookup(vars[0], &ids)?;
            let pooled = t.mean_axis0(seq)?;
            let wv = t.constant(w.clone());
            t.dot(pooled, wv)
        },
        &[table],
        FD_STEP,
        FD_TOL,
    );

    // conv1d (with padding and row extraction) w.r.t. input and filters
    let width = rng.random_range(1..3usize);
    let rows = rng.random_range(width..width + 3);
    let f = rng.random_range(1..3usize);
    let input = rand_tensor(&mut rng, &[rows, d], -1.0, 1.0);
    let filters = rand_tensor(&mut rng, &[f, width * d], -1.0, 1.0);
    let w = rand_tensor(&mut rng, &[f], -1.0, 1.0);
    assert_grad(
        "conv1d",
        seed,
        move |t, vars| {
            let padded = t.pad_rows(vars[0], 1, 1)?;
            let conv = t.conv1d(padded, vars[1], width)?;
            let act = t.tanh(conv);
            let top = t.max_axis0(act)?;
            let wv = t.constant(w.clone());
            t.dot(top, wv)
        },
        &[input, filters],
        FD_STEP,
        FD_TOL,
    );

    // one GRU step w.r.t. every gate parameter plus input and state
    let d_in = rng.random_range(2..4usize);
    let hidden = rng.random_range(2..4usize);
    let weights = GruWeights::<f64>::init(d_in, hidden, &mut rng);
    let x = rand_tensor(&mut rng, &[d_in], -1.0, 1.0);
    let h_prev = rand_tensor(&mut rng, &[hidden], -0.9, 0.9);
    let w = rand_tensor(&mut rng, &[hidden], -1.0, 1.0);
    let point = vec![
        weights.w_reset.clone(),
        weights.u_reset.clone(),
        weights.b_reset.clone(),
        weights.w_update.clone(),
        weights.u_update.clone(),
        weights.b_update.clone(),
        weights.w_cand.clone(),
        weights.u_cand.clone(),
        weights.b_cand.clone(),
        x,
        h_prev,
    ];
    assert_grad(
        "gru-cell",
        seed,
        move |t, vars| {
            let gru = mindcast_core::numerics::GruVars {
                w_reset: vars[0],
                u_reset: vars[1],
                b_reset: vars[2],
                w_update: vars[3],
                u_update: vars[4],
                b_update: vars[5],
                w_cand: vars[6],
                u_cand: vars[7],
                b_cand: vars[8],
            };
            let h = gru_cell(t, vars[9], vars[10], &gru)?;
            let wv = t.constant(w.clone());
            t.dot(h, wv)
        },
        &point,
        FD_STEP,
        FD_TOL,
    );
}

/// Tiny vocabulary plus embedding table over a synthetic corpus.
pub fn tiny_vocab(events: usize, seed: u64) -> (Vocabulary, EmbeddingTable<f64>) {
    let records = synthetic::corpus(events, seed);
    let vocab = build_vocab(
        &records,
        VocabThresholds {
            unigram_min: 1,
            ngram_min: 1,
        },
    )
    .unwrap();
    let table = EmbeddingTable::seeded_random(vocab.unigram_count(), 4, seed ^ 0xabcd);
    (vocab, table)
}

/// Full multitask model over a tiny synthetic corpus for composite
/// gradient checks: loss as a function of the flattened trainables.
pub fn check_composite_at_seed(seed: u64, encoder_kind: EncoderKind, setup: DecoderSetup) {
    let records = synthetic::corpus(6, seed);
    let vocab = build_vocab(
        &records,
        VocabThresholds {
            unigram_min: 1,
            ngram_min: 1,
        },
    )
    .unwrap();
    let d = 3usize;
    let embeddings = EmbeddingTable::<f64>::seeded_random(vocab.unigram_count(), d, seed);
    let h = match encoder_kind {
        EncoderKind::MaxPool | EncoderKind::MeanPool => d,
        _ => 4,
    };
    let mut config = EncoderConfig::new(encoder_kind, h);
    config.conv = ConvSpec {
        widths: vec![1, 2],
        filters_per_width: 2,
    };
    let params = ModelParams::init(config.clone(), setup, &vocab, embeddings, seed).unwrap();

    let limits = mindcast_core::corpus::VectorizeLimits {
        max_event_len: 5,
        max_target_len: 3,
    };
    let (examples, _) = mindcast_core::corpus::vectorize_split(&records[..2], &vocab, &limits);
    let batch: Vec<_> = examples.into_iter().take(2).collect();
    assert!(!batch.is_empty());

    // analytic pass
    let mut tape = Tape::new();
    let vars = params.register(&mut tape, true);
    let loss = mindcast_core::model::multitask_loss(&mut tape, &vars, &config, &batch).unwrap();
    tape.backward(loss).unwrap();
    let analytic: Vec<Vec<f64>> = vars
        .trainable
        .iter()
        .map(|&v| tape.grad(v).unwrap().data().to_vec())
        .collect();

    // numeric oracle over every trainable coordinate
    let mut probe = params.clone();
    let shapes = probe.trainable_shapes();
    let eval = |p: &ModelParams<f64>| -> f64 {
        let mut tape = Tape::new();
        let vars = p.register(&mut tape, false);
        let loss = mindcast_core::model::multitask_loss(&mut tape, &vars, &config, &batch).unwrap();
        tape.value(loss).item()
    };
    for (pi, shape) in shapes.iter().enumerate() {
        let numel: usize = shape.iter().product();
        for ci in 0..numel {
            let orig = read_param(&probe, pi, ci);
            write_param(&mut probe, pi, ci, orig + FD_STEP);
            let plus = eval(&probe);
            write_param(&mut probe, pi, ci, orig - FD_STEP);
            let minus = eval(&probe);
            write_param(&mut probe, pi, ci, orig);
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let a = analytic[pi][ci];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            let above_noise = (a - numeric).abs() > mindcast_core::numerics::FD_NOISE_FLOOR;
            assert!(
                !above_noise || rel < FD_TOL,
                "composite {encoder_kind:?}/{setup:?} seed {seed}: param {pi} coord {ci}: \
                 analytic {a} vs numeric {numeric} (rel {rel})"
            );
        }
    }
}

fn read_param(params: &ModelParams<f64>, index: usize, coord: usize) -> f64 {
    let mut out = None;
    let mut i = 0;
    params.visit_trainable(&mut |_, t| {
        if i == index {
            out = Some(t.data()[coord]);
        }
        i += 1;
    });
    out.expect("parameter index in range")
}

fn write_param(params: &mut ModelParams<f64>, index: usize, coord: usize, value: f64) {
    let mut i = 0;
    params.visit_trainable_mut(&mut |_, t| {
        if i == index {
            t.data_mut()[coord] = value;
        }
        i += 1;
    });
}

/// Hand-built sequence model over a tiny output space (no vocabulary),
/// for beam-search exactness tests.
pub fn toy_sequence_model(unigrams: usize, d: usize, h: usize, seed: u64) -> ModelParams<f64> {
    let embeddings = EmbeddingTable::<f64>::seeded_random(unigrams, d, seed ^ 0x77);
    let config = EncoderConfig::new(EncoderKind::MeanPool, d);
    let decoder = DecoderParams::init(
        DecoderSetup::Sequence { cell: Some(h) },
        d,
        d,
        unigrams,
        unigrams,
        &mut ChaCha8Rng::seed_from_u64(seed),
    );
    ModelParams {
        meta: ModelMeta {
            format_version: CHECKPOINT_FORMAT_VERSION,
            encoder: config,
            decoder: DecoderSetup::Sequence { cell: Some(h) },
            vocab_fingerprint: "toy".into(),
            embedding_dim: d,
            unigram_count: unigrams,
            ngram_count: unigrams,
        },
        embeddings,
        encoder: EncoderParams::Pool,
        decoder,
    }
}

/// Teacher-forced log-probability of a token sequence (terminal EOS
/// included), recomputed step by step on a fresh tape. Independent of the
/// beam-search code path.
pub fn rescore_sequence(
    params: &ModelParams<f64>,
    h_e: &Tensor<f64>,
    tokens: &[TokenId],
) -> f64 {
    let mut tape = Tape::new();
    let vars = params.register(&mut tape, false);
    let heads = match &vars.decoder {
        DecoderVars::Sequence(heads) => heads,
        _ => panic!("sequence decoder expected"),
    };
    let head: &SeqVars = &heads.xintent;
    let h_var = tape.constant(h_e.clone());
    let mut state = init_decoder_state(&mut tape, h_var, head).unwrap();
    let mut prev = None;
    let mut total = 0.0f64;
    for &tok in tokens {
        let (dist, next) =
            decode_sequence_step(&mut tape, vars.embeddings, prev, state, head).unwrap();
        total += tape.value(dist).data()[tok].ln();
        state = next;
        prev = Some(tok);
    }
    total
}

/// All sequences of at most `max_len` decode steps ending in EOS, scored
/// by exhaustive teacher-forced evaluation.
pub fn brute_force_beam(
    params: &ModelParams<f64>,
    h_e: &Tensor<f64>,
    eos: TokenId,
    max_len: usize,
) -> Vec<(Vec<TokenId>, f64)> {
    let unigrams = params.meta.unigram_count;
    let mut out: Vec<(Vec<TokenId>, f64)> = Vec::new();
    let mut frontier: Vec<Vec<TokenId>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for prefix in frontier {
            for tok in 0..unigrams {
                let mut seq = prefix.clone();
                seq.push(tok);
                if tok == eos {
                    let score = rescore_sequence(params, h_e, &seq);
                    out.push((seq, score));
                } else {
                    next.push(seq);
                }
            }
        }
        frontier = next;
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Deterministic splits over a synthetic corpus where train == dev ==
/// the whole record set (overfit setting).
pub fn overfit_splits(records: Vec<mindcast_core::corpus::AnnotationRecord>) -> Splits {
    Splits {
        dev: records.clone(),
        test: records.clone(),
        train: records,
    }
}

/// Response triple sizes for cross-product recount oracles.
pub fn response_counts(rec: &mindcast_core::corpus::AnnotationRecord) -> (usize, usize, usize) {
    let PerTask {
        xintent,
        xreact,
        oreact,
    } = &rec.responses;
    (xintent.len(), xreact.len(), oreact.len())
}
