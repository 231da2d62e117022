use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::corpus::TokenId;
use crate::numerics::{gru_cell, GruVars, GruWeights, Real, Tape, Tensor, Var};

/// Encoding functions for compressing an event into an H-dimensional vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    MaxPool,
    MeanPool,
    ConvNet,
    BiRnn,
}

impl EncoderKind {
    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::MaxPool => "max-pool",
            EncoderKind::MeanPool => "mean-pool",
            EncoderKind::ConvNet => "convnet",
            EncoderKind::BiRnn => "birnn",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_lowercase().as_str() {
            "max-pool" | "maxpool" | "max" => Some(EncoderKind::MaxPool),
            "mean-pool" | "meanpool" | "mean" => Some(EncoderKind::MeanPool),
            "convnet" | "conv" | "cnn" => Some(EncoderKind::ConvNet),
            "birnn" | "bigru" | "rnn" => Some(EncoderKind::BiRnn),
            _ => None,
        }
    }
}

/// Convolutional encoder hyperparameters: parallel filter banks of the
/// given widths, ReLU, max-over-time, then one dense layer to H.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub widths: Vec<usize>,
    pub filters_per_width: usize,
}

impl Default for ConvSpec {
    fn default() -> Self {
        ConvSpec {
            widths: vec![2, 3, 4, 5],
            filters_per_width: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    /// Output embedding size H. Pooling encoders require H = D.
    pub h: usize,
    #[serde(default)]
    pub conv: ConvSpec,
}

impl EncoderConfig {
    pub fn new(kind: EncoderKind, h: usize) -> Self {
        EncoderConfig {
            kind,
            h,
            conv: ConvSpec::default(),
        }
    }

    pub fn validate(&self, embedding_dim: usize) -> Result<(), ModelError> {
        if self.h == 0 {
            return Err(ModelError::InvalidConfig("encoder H must be positive".into()));
        }
        match self.kind {
            EncoderKind::MaxPool | EncoderKind::MeanPool => {
                if self.h != embedding_dim {
                    return Err(ModelError::InvalidConfig(format!(
                        "pooling encoders require H = embedding dim ({embedding_dim}), got H = {}",
                        self.h
                    )));
                }
            }
            EncoderKind::BiRnn => {
                if !self.h.is_multiple_of(2) {
                    return Err(ModelError::InvalidConfig(format!(
                        "BiRNN splits H across directions; H = {} is odd",
                        self.h
                    )));
                }
            }
            EncoderKind::ConvNet => {
                if self.conv.widths.is_empty() || self.conv.filters_per_width == 0 {
                    return Err(ModelError::InvalidConfig(
                        "ConvNet needs at least one filter width and one filter".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Trainable encoder parameters (pooling encoders have none).
#[derive(Clone, Debug, PartialEq)]
pub enum EncoderParams<T> {
    Pool,
    Conv {
        /// One filter bank per width: `[filters_per_width, width * d]`.
        filters: Vec<Tensor<T>>,
        dense_w: Tensor<T>,
        dense_b: Tensor<T>,
    },
    BiRnn {
        forward: GruWeights<T>,
        backward: GruWeights<T>,
    },
}

impl<T: Real> EncoderParams<T> {
    pub fn init(
        config: &EncoderConfig,
        embedding_dim: usize,
        rng: &mut ChaCha8Rng,
    ) -> EncoderParams<T> {
        match config.kind {
            EncoderKind::MaxPool | EncoderKind::MeanPool => EncoderParams::Pool,
            EncoderKind::ConvNet => {
                let d = embedding_dim;
                let f = config.conv.filters_per_width;
                let filters = config
                    .conv
                    .widths
                    .iter()
                    .map(|&w| {
                        let scale = (6.0 / (w * d + f) as f64).sqrt();
                        random_tensor(&[f, w * d], scale, rng)
                    })
                    .collect();
                let total = f * config.conv.widths.len();
                let scale = (6.0 / (total + config.h) as f64).sqrt();
                EncoderParams::Conv {
                    filters,
                    dense_w: random_tensor(&[config.h, total], scale, rng),
                    dense_b: Tensor::zeros(&[config.h]),
                }
            }
            EncoderKind::BiRnn => {
                let half = config.h / 2;
                EncoderParams::BiRnn {
                    forward: GruWeights::init(embedding_dim, half, rng),
                    backward: GruWeights::init(embedding_dim, half, rng),
                }
            }
        }
    }

    pub fn visit(&self, f: &mut impl FnMut(String, &Tensor<T>)) {
        match self {
            EncoderParams::Pool => {}
            EncoderParams::Conv {
                filters,
                dense_w,
                dense_b,
            } => {
                for (i, bank) in filters.iter().enumerate() {
                    f(format!("encoder.conv.filters{i}"), bank);
                }
                f("encoder.conv.dense_w".into(), dense_w);
                f("encoder.conv.dense_b".into(), dense_b);
            }
            EncoderParams::BiRnn { forward, backward } => {
                forward.visit("encoder.birnn.fwd", f);
                backward.visit("encoder.birnn.bwd", f);
            }
        }
    }

    pub fn visit_mut(&mut self, f: &mut impl FnMut(String, &mut Tensor<T>)) {
        match self {
            EncoderParams::Pool => {}
            EncoderParams::Conv {
                filters,
                dense_w,
                dense_b,
            } => {
                for (i, bank) in filters.iter_mut().enumerate() {
                    f(format!("encoder.conv.filters{i}"), bank);
                }
                f("encoder.conv.dense_w".into(), dense_w);
                f("encoder.conv.dense_b".into(), dense_b);
            }
            EncoderParams::BiRnn { forward, backward } => {
                for (name, t) in forward.named_mut() {
                    f(format!("encoder.birnn.fwd.{name}"), t);
                }
                for (name, t) in backward.named_mut() {
                    f(format!("encoder.birnn.bwd.{name}"), t);
                }
            }
        }
    }

    /// Register trainables on a tape, collecting their vars in visit order.
    pub fn register(
        &self,
        tape: &mut Tape<T>,
        trainable: bool,
        collected: &mut Vec<Var>,
    ) -> EncoderVars {
        match self {
            EncoderParams::Pool => EncoderVars::Pool,
            EncoderParams::Conv {
                filters,
                dense_w,
                dense_b,
            } => {
                let filter_vars: Vec<Var> = filters
                    .iter()
                    .map(|bank| tape.leaf(bank.clone(), trainable))
                    .collect();
                let w = tape.leaf(dense_w.clone(), trainable);
                let b = tape.leaf(dense_b.clone(), trainable);
                collected.extend(filter_vars.iter().copied());
                collected.push(w);
                collected.push(b);
                EncoderVars::Conv {
                    filters: filter_vars,
                    dense_w: w,
                    dense_b: b,
                }
            }
            EncoderParams::BiRnn { forward, backward } => {
                let fwd = forward.register(tape, trainable);
                let bwd = backward.register(tape, trainable);
                collected.extend(fwd.all());
                collected.extend(bwd.all());
                EncoderVars::BiRnn { fwd, bwd }
            }
        }
    }
}

pub(crate) fn random_tensor<T: Real>(
    shape: &[usize],
    scale: f64,
    rng: &mut ChaCha8Rng,
) -> Tensor<T> {
    let mut t = Tensor::zeros(shape);
    for x in t.data_mut() {
        *x = T::from_f64(rng.random_range(-scale..scale));
    }
    t
}

/// On-tape encoder parameter handles.
pub enum EncoderVars {
    Pool,
    Conv {
        filters: Vec<Var>,
        dense_w: Var,
        dense_b: Var,
    },
    BiRnn {
        fwd: GruVars,
        bwd: GruVars,
    },
}

/// Encode an event's token ids into `h_E`.
///
/// Pooling encoders reduce the word vectors elementwise (H = D); the
/// convolutional encoder applies each filter bank, ReLU, max-over-time, and
/// a dense layer; the BiRNN concatenates the forward cell's last state with
/// the backward cell's first-token state.
pub fn encode<T: Real>(
    tape: &mut Tape<T>,
    embeddings: Var,
    encoder: &EncoderVars,
    config: &EncoderConfig,
    event_ids: &[TokenId],
) -> Result<Var, ModelError> {
    if event_ids.is_empty() {
        return Err(ModelError::EmptyEvent);
    }
    let seq = tape.embedding_lookup(embeddings, event_ids)?;
    let h = match encoder {
        EncoderVars::Pool => match config.kind {
            EncoderKind::MaxPool => tape.max_axis0(seq)?,
            EncoderKind::MeanPool => tape.mean_axis0(seq)?,
            _ => unreachable!("pool vars only built for pooling kinds"),
        },
        EncoderVars::Conv {
            filters,
            dense_w,
            dense_b,
        } => {
            let max_width = *config.conv.widths.iter().max().expect("validated non-empty");
            let n = event_ids.len();
            let seq = if n < max_width {
                // zero-pad short events on both sides to the minimum usable length
                let deficit = max_width - n;
                let left = deficit / 2;
                tape.pad_rows(seq, left, deficit - left)?
            } else {
                seq
            };
            let mut pooled = Vec::new();
            for (bank, &width) in filters.iter().zip(&config.conv.widths) {
                let conv = tape.conv1d(seq, *bank, width)?;
                let act = tape.relu(conv);
                pooled.push(tape.max_axis0(act)?);
            }
            let features = tape.concat(&pooled)?;
            let dense = tape.matmul(*dense_w, features)?;
            tape.add(dense, *dense_b)?
        }
        EncoderVars::BiRnn { fwd, bwd } => {
            let half = config.h / 2;
            let n = event_ids.len();
            let mut h_fwd = tape.leaf(Tensor::zeros(&[half]), false);
            for t in 0..n {
                let x = tape.row(seq, t)?;
                h_fwd = gru_cell(tape, x, h_fwd, fwd)?;
            }
            let mut h_bwd = tape.leaf(Tensor::zeros(&[half]), false);
            for t in (0..n).rev() {
                let x = tape.row(seq, t)?;
                h_bwd = gru_cell(tape, x, h_bwd, bwd)?;
            }
            tape.concat(&[h_fwd, h_bwd])?
        }
    };
    Ok(h)
}
