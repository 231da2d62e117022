use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encoder::random_tensor;
use super::ModelError;
use crate::corpus::{PerTask, Task, TokenId};
use crate::numerics::{gru_cell, GruVars, GruWeights, Real, Tape, Tensor, Var};

/// How the three task heads emit their hypotheses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "setup")]
pub enum DecoderSetup {
    /// Softmax over the {1,2,3}-gram space: one class per full response.
    Ngram,
    /// GRU sequence generator over the unigram space, one token per step.
    /// `cell = None` sizes the recurrent state as H (identity init state).
    Sequence { cell: Option<usize> },
}

impl DecoderSetup {
    pub fn name(self) -> &'static str {
        match self {
            DecoderSetup::Ngram => "ngram",
            DecoderSetup::Sequence { .. } => "sequence",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_lowercase().as_str() {
            "ngram" | "n-gram" => Some(DecoderSetup::Ngram),
            "sequence" | "seq" => Some(DecoderSetup::Sequence { cell: None }),
            _ => None,
        }
    }
}

/// Affine map `w x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearHead<T> {
    pub w: Tensor<T>,
    pub b: Tensor<T>,
}

impl<T: Real> LinearHead<T> {
    fn init(out_dim: usize, in_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let scale = (6.0 / (in_dim + out_dim) as f64).sqrt();
        LinearHead {
            w: random_tensor(&[out_dim, in_dim], scale, rng),
            b: Tensor::zeros(&[out_dim]),
        }
    }

    fn register(&self, tape: &mut Tape<T>, trainable: bool, out: &mut Vec<Var>) -> LinearVars {
        let w = tape.leaf(self.w.clone(), trainable);
        let b = tape.leaf(self.b.clone(), trainable);
        out.push(w);
        out.push(b);
        LinearVars { w, b }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LinearVars {
    pub w: Var,
    pub b: Var,
}

impl LinearVars {
    pub fn apply<T: Real>(&self, tape: &mut Tape<T>, x: Var) -> Result<Var, ModelError> {
        let wx = tape.matmul(self.w, x)?;
        Ok(tape.add(wx, self.b)?)
    }
}

/// One sequence-decoding head: optional projection of `h_E` into the cell
/// size, a GRU cell over previous-token embeddings, and an output layer
/// over the unigram space.
#[derive(Clone, Debug, PartialEq)]
pub struct SeqHead<T> {
    pub proj: Option<LinearHead<T>>,
    pub gru: GruWeights<T>,
    pub out: LinearHead<T>,
}

/// Trainable decoder parameters: one head per task.
#[derive(Clone, Debug, PartialEq)]
pub enum DecoderParams<T> {
    Ngram(PerTask<LinearHead<T>>),
    Sequence(PerTask<SeqHead<T>>),
}

impl<T: Real> DecoderParams<T> {
    pub fn init(
        setup: DecoderSetup,
        h: usize,
        embedding_dim: usize,
        unigram_count: usize,
        ngram_count: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        match setup {
            DecoderSetup::Ngram => {
                let mut head = || LinearHead::init(ngram_count, h, rng);
                DecoderParams::Ngram(PerTask {
                    xintent: head(),
                    xreact: head(),
                    oreact: head(),
                })
            }
            DecoderSetup::Sequence { cell } => {
                let cell_size = cell.unwrap_or(h);
                let mut head = || SeqHead {
                    proj: (cell_size != h).then(|| LinearHead::init(cell_size, h, rng)),
                    gru: GruWeights::init(embedding_dim, cell_size, rng),
                    out: LinearHead::init(unigram_count, cell_size, rng),
                };
                DecoderParams::Sequence(PerTask {
                    xintent: head(),
                    xreact: head(),
                    oreact: head(),
                })
            }
        }
    }

    pub fn setup(&self) -> DecoderSetup {
        match self {
            DecoderParams::Ngram(_) => DecoderSetup::Ngram,
            DecoderParams::Sequence(heads) => DecoderSetup::Sequence {
                cell: Some(heads.xintent.gru.hidden_dim()),
            },
        }
    }

    pub fn visit(&self, f: &mut impl FnMut(String, &Tensor<T>)) {
        match self {
            DecoderParams::Ngram(heads) => {
                for (task, head) in heads.iter() {
                    f(format!("decoder.{task}.w"), &head.w);
                    f(format!("decoder.{task}.b"), &head.b);
                }
            }
            DecoderParams::Sequence(heads) => {
                for (task, head) in heads.iter() {
                    if let Some(p) = &head.proj {
                        f(format!("decoder.{task}.proj.w"), &p.w);
                        f(format!("decoder.{task}.proj.b"), &p.b);
                    }
                    head.gru.visit(&format!("decoder.{task}.gru"), f);
                    f(format!("decoder.{task}.out.w"), &head.out.w);
                    f(format!("decoder.{task}.out.b"), &head.out.b);
                }
            }
        }
    }

    pub fn visit_mut(&mut self, f: &mut impl FnMut(String, &mut Tensor<T>)) {
        match self {
            DecoderParams::Ngram(heads) => {
                for task in Task::ALL {
                    let head = heads.get_mut(task);
                    f(format!("decoder.{task}.w"), &mut head.w);
                    f(format!("decoder.{task}.b"), &mut head.b);
                }
            }
            DecoderParams::Sequence(heads) => {
                for task in Task::ALL {
                    let head = heads.get_mut(task);
                    if let Some(p) = &mut head.proj {
                        f(format!("decoder.{task}.proj.w"), &mut p.w);
                        f(format!("decoder.{task}.proj.b"), &mut p.b);
                    }
                    for (name, t) in head.gru.named_mut() {
                        f(format!("decoder.{task}.gru.{name}"), t);
                    }
                    f(format!("decoder.{task}.out.w"), &mut head.out.w);
                    f(format!("decoder.{task}.out.b"), &mut head.out.b);
                }
            }
        }
    }

    pub fn register(
        &self,
        tape: &mut Tape<T>,
        trainable: bool,
        collected: &mut Vec<Var>,
    ) -> DecoderVars {
        match self {
            DecoderParams::Ngram(heads) => DecoderVars::Ngram(
                heads.map(|_, head| head.register(tape, trainable, collected)),
            ),
            DecoderParams::Sequence(heads) => DecoderVars::Sequence(heads.map(|_, head| {
                let proj = head
                    .proj
                    .as_ref()
                    .map(|p| p.register(tape, trainable, collected));
                let gru = head.gru.register(tape, trainable);
                collected.extend(gru.all());
                let out = head.out.register(tape, trainable, collected);
                SeqVars { proj, gru, out }
            })),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SeqVars {
    pub proj: Option<LinearVars>,
    pub gru: GruVars,
    pub out: LinearVars,
}

pub enum DecoderVars {
    Ngram(PerTask<LinearVars>),
    Sequence(PerTask<SeqVars>),
}

/// Distribution over the {1,2,3}-gram space from an event encoding:
/// `softmax(W h_E + b)`.
pub fn decode_ngram<T: Real>(
    tape: &mut Tape<T>,
    h_e: Var,
    head: &LinearVars,
) -> Result<Var, ModelError> {
    let logits = head.apply(tape, h_e)?;
    Ok(tape.softmax(logits)?)
}

/// Initial recurrent state for a sequence head: `h_E`, projected when the
/// cell size differs from H.
pub fn init_decoder_state<T: Real>(
    tape: &mut Tape<T>,
    h_e: Var,
    head: &SeqVars,
) -> Result<Var, ModelError> {
    match &head.proj {
        None => Ok(h_e),
        Some(p) => p.apply(tape, h_e),
    }
}

/// One sequence-decoding step. `prev` is the previously emitted token
/// (None on the first step, which feeds a zero vector). Returns the
/// distribution over unigrams and the next state.
pub fn decode_sequence_step<T: Real>(
    tape: &mut Tape<T>,
    embeddings: Var,
    prev: Option<TokenId>,
    state: Var,
    head: &SeqVars,
) -> Result<(Var, Var), ModelError> {
    let x = match prev {
        Some(id) => {
            let looked = tape.embedding_lookup(embeddings, &[id])?;
            tape.row(looked, 0)?
        }
        None => {
            let d = tape.value(embeddings).cols();
            tape.constant(Tensor::zeros(&[d]))
        }
    };
    let next_state = gru_cell(tape, x, state, &head.gru)?;
    let logits = head.out.apply(tape, next_state)?;
    let dist = tape.softmax(logits)?;
    Ok((dist, next_state))
}
