//! Beam-search oracles: exhaustive enumeration equality, teacher-forced
//! rescoring, and width monotonicity.

#[path = "support/mod.rs"]
mod support;

use mindcast_core::inference::{beam_search, BeamConfig};
use mindcast_core::model::{DecoderVars, ModelParams};
use mindcast_core::numerics::{Tape, Tensor};

const EOS: usize = 0;

fn run_beam(
    params: &ModelParams<f64>,
    h_e: &Tensor<f64>,
    width: usize,
    max_len: usize,
) -> Vec<mindcast_core::inference::BeamHypothesis> {
    let mut tape = Tape::new();
    let vars = params.register(&mut tape, false);
    let heads = match &vars.decoder {
        DecoderVars::Sequence(heads) => heads,
        _ => unreachable!(),
    };
    let h_var = tape.constant(h_e.clone());
    beam_search(
        &mut tape,
        vars.embeddings,
        &heads.xintent,
        h_var,
        EOS,
        &BeamConfig { width, max_len },
    )
    .unwrap()
}

#[test]
fn exhaustive_width_equals_brute_force_enumeration() {
    for seed in [3, 17, 42] {
        let params = support::toy_sequence_model(5, 3, 3, seed);
        let h_e = Tensor::vector(vec![0.4, -0.2, 0.9]);
        let max_len = 3;
        let width = 5usize.pow(3);

        let beam = run_beam(&params, &h_e, width, max_len);
        let oracle = support::brute_force_beam(&params, &h_e, EOS, max_len);
        assert_eq!(beam.len(), oracle.len(), "seed {seed}");
        for (hyp, (tokens, score)) in beam.iter().zip(&oracle) {
            assert_eq!(&hyp.tokens, tokens, "seed {seed}");
            assert!(
                (hyp.log_prob - score).abs() < 1e-9,
                "seed {seed}: {} vs {score}",
                hyp.log_prob
            );
            assert!(hyp.finished);
            assert!(!hyp.truncated);
        }
    }
}

#[test]
fn returned_scores_match_teacher_forced_rescoring() {
    let params = support::toy_sequence_model(6, 3, 4, 9);
    let h_e = Tensor::vector(vec![-0.7, 0.1, 0.5]);
    let beam = run_beam(&params, &h_e, 10, 6);
    assert!(!beam.is_empty());
    for hyp in &beam {
        let rescored = support::rescore_sequence(&params, &h_e, &hyp.tokens);
        assert!(
            (hyp.log_prob - rescored).abs() < 1e-9,
            "{:?}: {} vs {rescored}",
            hyp.tokens,
            hyp.log_prob
        );
    }
}

#[test]
fn width_one_is_greedy_decoding() {
    let params = support::toy_sequence_model(5, 3, 3, 21);
    let h_e = Tensor::vector(vec![0.0, 0.3, -0.4]);
    let beam = run_beam(&params, &h_e, 1, 8);
    assert_eq!(beam.len(), 1);

    // greedy oracle: argmax step by step (ties by lowest id)
    let mut greedy: Vec<usize> = Vec::new();
    loop {
        let mut probe = greedy.clone();
        probe.push(0);
        let mut best = (f64::NEG_INFINITY, 0usize);
        for tok in 0..5 {
            *probe.last_mut().unwrap() = tok;
            let score = support::rescore_sequence(&params, &h_e, &probe);
            if score > best.0 {
                best = (score, tok);
            }
        }
        greedy.push(best.1);
        if best.1 == EOS || greedy.len() == 8 {
            break;
        }
    }
    assert_eq!(beam[0].tokens, greedy);
}

#[test]
fn enlarging_the_beam_never_hurts_the_best_score() {
    let params = support::toy_sequence_model(6, 3, 4, 33);
    let h_e = Tensor::vector(vec![0.2, -0.9, 0.6]);
    let mut previous_best = f64::NEG_INFINITY;
    for width in [1, 2, 4, 8, 16, 64] {
        let beam = run_beam(&params, &h_e, width, 4);
        let best = beam.first().map(|h| h.log_prob).unwrap();
        assert!(
            best >= previous_best - 1e-12,
            "width {width}: best {best} < previous {previous_best}"
        );
        previous_best = best;
    }
}

#[test]
fn hopeless_eos_forces_truncated_hypotheses() {
    // drive the EOS logit far down so nothing finishes naturally
    let mut params = support::toy_sequence_model(4, 3, 3, 5);
    if let mindcast_core::model::DecoderParams::Sequence(heads) = &mut params.decoder {
        heads.xintent.out.b.data_mut()[EOS] = -50.0;
    }
    let h_e = Tensor::vector(vec![0.1, 0.1, 0.1]);
    let beam = run_beam(&params, &h_e, 3, 3);
    assert!(!beam.is_empty());
    for hyp in &beam {
        assert!(hyp.truncated);
        assert_eq!(*hyp.tokens.last().unwrap(), EOS);
        // forced scores still match independent rescoring
        let rescored = support::rescore_sequence(&params, &h_e, &hyp.tokens);
        assert!((hyp.log_prob - rescored).abs() < 1e-9);
    }
}
