use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::tape::{Tape, Var};
use super::tensor::{Real, Tensor};
use super::NumericsError;

/// Owned gate parameters for one GRU cell.
///
/// Gate equations follow the original formulation: reset and update gates are
/// sigmoid of affine maps of input and previous state; the candidate applies
/// the reset gate to the previous state before its recurrent map; the next
/// state is `z * h_prev + (1 - z) * candidate`.
#[derive(Clone, Debug, PartialEq)]
pub struct GruWeights<T> {
    pub w_reset: Tensor<T>,
    pub u_reset: Tensor<T>,
    pub b_reset: Tensor<T>,
    pub w_update: Tensor<T>,
    pub u_update: Tensor<T>,
    pub b_update: Tensor<T>,
    pub w_cand: Tensor<T>,
    pub u_cand: Tensor<T>,
    pub b_cand: Tensor<T>,
}

impl<T: Real> GruWeights<T> {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        GruWeights {
            w_reset: Tensor::zeros(&[hidden_dim, input_dim]),
            u_reset: Tensor::zeros(&[hidden_dim, hidden_dim]),
            b_reset: Tensor::zeros(&[hidden_dim]),
            w_update: Tensor::zeros(&[hidden_dim, input_dim]),
            u_update: Tensor::zeros(&[hidden_dim, hidden_dim]),
            b_update: Tensor::zeros(&[hidden_dim]),
            w_cand: Tensor::zeros(&[hidden_dim, input_dim]),
            u_cand: Tensor::zeros(&[hidden_dim, hidden_dim]),
            b_cand: Tensor::zeros(&[hidden_dim]),
        }
    }

    /// Uniform init scaled by fan-in; biases start at zero.
    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut w = Self::zeros(input_dim, hidden_dim);
        let scale_in = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
        let scale_hid = (6.0 / (2 * hidden_dim) as f64).sqrt();
        for (m, scale) in [
            (&mut w.w_reset, scale_in),
            (&mut w.u_reset, scale_hid),
            (&mut w.w_update, scale_in),
            (&mut w.u_update, scale_hid),
            (&mut w.w_cand, scale_in),
            (&mut w.u_cand, scale_hid),
        ] {
            for x in m.data_mut() {
                *x = T::from_f64(rng.random_range(-scale..scale));
            }
        }
        w
    }

    pub fn hidden_dim(&self) -> usize {
        self.b_reset.shape()[0]
    }

    pub fn input_dim(&self) -> usize {
        self.w_reset.shape()[1]
    }

    pub fn visit(&self, prefix: &str, f: &mut impl FnMut(String, &Tensor<T>)) {
        for (name, t) in self.named() {
            f(format!("{prefix}.{name}"), t);
        }
    }

    fn named(&self) -> [(&'static str, &Tensor<T>); 9] {
        [
            ("w_reset", &self.w_reset),
            ("u_reset", &self.u_reset),
            ("b_reset", &self.b_reset),
            ("w_update", &self.w_update),
            ("u_update", &self.u_update),
            ("b_update", &self.b_update),
            ("w_cand", &self.w_cand),
            ("u_cand", &self.u_cand),
            ("b_cand", &self.b_cand),
        ]
    }

    pub fn named_mut(&mut self) -> [(&'static str, &mut Tensor<T>); 9] {
        [
            ("w_reset", &mut self.w_reset),
            ("u_reset", &mut self.u_reset),
            ("b_reset", &mut self.b_reset),
            ("w_update", &mut self.w_update),
            ("u_update", &mut self.u_update),
            ("b_update", &mut self.b_update),
            ("w_cand", &mut self.w_cand),
            ("u_cand", &mut self.u_cand),
            ("b_cand", &mut self.b_cand),
        ]
    }

    /// Register every gate tensor on a tape.
    pub fn register(&self, tape: &mut Tape<T>, trainable: bool) -> GruVars {
        GruVars {
            w_reset: tape.leaf(self.w_reset.clone(), trainable),
            u_reset: tape.leaf(self.u_reset.clone(), trainable),
            b_reset: tape.leaf(self.b_reset.clone(), trainable),
            w_update: tape.leaf(self.w_update.clone(), trainable),
            u_update: tape.leaf(self.u_update.clone(), trainable),
            b_update: tape.leaf(self.b_update.clone(), trainable),
            w_cand: tape.leaf(self.w_cand.clone(), trainable),
            u_cand: tape.leaf(self.u_cand.clone(), trainable),
            b_cand: tape.leaf(self.b_cand.clone(), trainable),
        }
    }
}

/// On-tape handles for one registered GRU cell.
#[derive(Clone, Copy, Debug)]
pub struct GruVars {
    pub w_reset: Var,
    pub u_reset: Var,
    pub b_reset: Var,
    pub w_update: Var,
    pub u_update: Var,
    pub b_update: Var,
    pub w_cand: Var,
    pub u_cand: Var,
    pub b_cand: Var,
}

impl GruVars {
    pub fn all(&self) -> [Var; 9] {
        [
            self.w_reset,
            self.u_reset,
            self.b_reset,
            self.w_update,
            self.u_update,
            self.b_update,
            self.w_cand,
            self.u_cand,
            self.b_cand,
        ]
    }
}

/// One GRU step: `(x_t, h_prev) -> h_next`, recorded on the tape.
pub fn gru_cell<T: Real>(
    tape: &mut Tape<T>,
    x: Var,
    h_prev: Var,
    w: &GruVars,
) -> Result<Var, NumericsError> {
    let rx = tape.matmul(w.w_reset, x)?;
    let rh = tape.matmul(w.u_reset, h_prev)?;
    let r_pre = tape.add(rx, rh)?;
    let r_pre = tape.add(r_pre, w.b_reset)?;
    let reset = tape.sigmoid(r_pre);

    let zx = tape.matmul(w.w_update, x)?;
    let zh = tape.matmul(w.u_update, h_prev)?;
    let z_pre = tape.add(zx, zh)?;
    let z_pre = tape.add(z_pre, w.b_update)?;
    let update = tape.sigmoid(z_pre);

    let gated_prev = tape.mul(reset, h_prev)?;
    let cx = tape.matmul(w.w_cand, x)?;
    let ch = tape.matmul(w.u_cand, gated_prev)?;
    let c_pre = tape.add(cx, ch)?;
    let c_pre = tape.add(c_pre, w.b_cand)?;
    let cand = tape.tanh(c_pre);

    // h_next = z * h_prev + (1 - z) * cand
    let keep = tape.mul(update, h_prev)?;
    let blended = tape.mul(update, cand)?;
    let new_part = tape.sub(cand, blended)?;
    tape.add(keep, new_part)
}
