use super::tensor::{Real, Tensor};
use super::NumericsError;

/// Probability clamp floor applied before any log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Dot(Var, Var),
    Concat(Vec<Var>),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    ElementwiseMax(Var, Var),
    MeanAxis0(Var),
    // argmax row per column, frozen at forward time
    MaxAxis0(Var, Vec<usize>),
    Softmax(Var),
    EmbeddingLookup(Var, Vec<usize>),
    Conv1d { input: Var, filters: Var, width: usize },
    PadRows { input: Var, left: usize },
    Row(Var, usize),
    Scale(Var, f64),
    // -log p[gold] on a raw distribution, clamped at PROB_FLOOR
    CrossEntropyDist { dist: Var, gold: usize },
    // fused log-softmax form: input is the logits var feeding a Softmax node
    CrossEntropyFused { logits: Var, gold: usize },
}

struct Node<T> {
    value: Tensor<T>,
    grad: Option<Tensor<T>>,
    requires_grad: bool,
    op: Op,
}

/// Records executed operations in order; [`Tape::backward`] replays them in
/// exact reverse order to populate gradients.
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    /// Gradient populated by the most recent [`Tape::backward`] call.
    pub fn grad(&self, v: Var) -> Option<&Tensor<T>> {
        self.nodes[v.0].grad.as_ref()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Tensor<T>, requires_grad: bool, op: Op) -> Var {
        self.nodes.push(Node {
            value,
            grad: None,
            requires_grad,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.push(value, requires_grad, Op::Leaf)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, false, Op::Leaf)
    }

    fn any_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Matrix product. Accepts `[m,k] x [k,n] -> [m,n]` and the
    /// matrix-vector form `[m,k] x [k] -> [m]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let (va, vb) = (self.value(a), self.value(b));
        let out = match (va.shape(), vb.shape()) {
            ([m, k], [k2, n]) if k == k2 => {
                let (m, k, n) = (*m, *k, *n);
                let mut data = vec![T::zero(); m * n];
                for i in 0..m {
                    for p in 0..k {
                        let aval = va.data()[i * k + p];
                        if aval == T::zero() {
                            continue;
                        }
                        for j in 0..n {
                            data[i * n + j] += aval * vb.data()[p * n + j];
                        }
                    }
                }
                Tensor::new(data, vec![m, n])?
            }
            ([m, k], [k2]) if k == k2 => {
                let (m, k) = (*m, *k);
                let mut data = vec![T::zero(); m];
                for i in 0..m {
                    let mut s = T::zero();
                    for p in 0..k {
                        s += va.data()[i * k + p] * vb.data()[p];
                    }
                    data[i] = s;
                }
                Tensor::vector(data)
            }
            (sa, sb) => {
                return Err(NumericsError::ShapeMismatch {
                    op: "matmul",
                    details: format!("cannot multiply {sa:?} by {sb:?}"),
                })
            }
        };
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(out, rg, Op::MatMul(a, b)))
    }

    fn same_shape_binary(
        &mut self,
        op_name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(T, T) -> T,
        op: Op,
    ) -> Result<Var, NumericsError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(NumericsError::ShapeMismatch {
                op: op_name,
                details: format!("{:?} vs {:?}", va.shape(), vb.shape()),
            });
        }
        let data = va
            .data()
            .iter()
            .zip(vb.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let out = Tensor::new(data, va.shape().to_vec())?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(out, rg, op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        self.same_shape_binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        self.same_shape_binary("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        self.same_shape_binary("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    /// Elementwise maximum; ties route gradient to the first argument.
    pub fn elementwise_max(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        self.same_shape_binary(
            "elementwise-max",
            a,
            b,
            |x, y| if x >= y { x } else { y },
            Op::ElementwiseMax(a, b),
        )
    }

    /// Inner product of two equal-length vectors, yielding a scalar.
    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(NumericsError::ShapeMismatch {
                op: "dot",
                details: format!("{:?} vs {:?}", va.shape(), vb.shape()),
            });
        }
        let mut s = T::zero();
        for (&x, &y) in va.data().iter().zip(vb.data()) {
            s += x * y;
        }
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(Tensor::scalar(s), rg, Op::Dot(a, b)))
    }

    /// Concatenate rank-1 tensors end to end.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, NumericsError> {
        if parts.is_empty() {
            return Err(NumericsError::EmptyInput { op: "concat" });
        }
        let mut data = Vec::new();
        for &p in parts {
            let v = self.value(p);
            if v.shape().len() != 1 {
                return Err(NumericsError::ShapeMismatch {
                    op: "concat",
                    details: format!("expected rank-1 input, got {:?}", v.shape()),
                });
            }
            data.extend_from_slice(v.data());
        }
        let rg = self.any_grad(parts);
        Ok(self.push(Tensor::vector(data), rg, Op::Concat(parts.to_vec())))
    }

    fn unary(&mut self, a: Var, f: impl Fn(T) -> T, op: Op) -> Var {
        let v = self.value(a);
        let data = v.data().iter().map(|&x| f(x)).collect();
        let out = Tensor::new(data, v.shape().to_vec()).expect("shape preserved");
        let rg = self.nodes[a.0].requires_grad;
        self.push(out, rg, op)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.tanh(), Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, sigmoid_scalar, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| if x > T::zero() { x } else { T::zero() }, Op::Relu(a))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, |x| x * T::from_f64(c), Op::Scale(a, c))
    }

    /// Column means of a `[n, d]` matrix: output `[d]`.
    pub fn mean_axis0(&mut self, a: Var) -> Result<Var, NumericsError> {
        let v = self.value(a);
        if v.shape().len() != 2 || v.rows() == 0 {
            return Err(NumericsError::ShapeMismatch {
                op: "mean-over-axis",
                details: format!("expected non-empty rank-2 input, got {:?}", v.shape()),
            });
        }
        let (n, d) = (v.rows(), v.cols());
        let inv = T::from_f64(1.0 / n as f64);
        let mut data = vec![T::zero(); d];
        for r in 0..n {
            for c in 0..d {
                data[c] += v.at2(r, c);
            }
        }
        for x in &mut data {
            *x = *x * inv;
        }
        let rg = self.nodes[a.0].requires_grad;
        Ok(self.push(Tensor::vector(data), rg, Op::MeanAxis0(a)))
    }

    /// Column-wise maxima of a `[n, d]` matrix: output `[d]`. Ties route
    /// gradient to the earliest row.
    pub fn max_axis0(&mut self, a: Var) -> Result<Var, NumericsError> {
        let v = self.value(a);
        if v.shape().len() != 2 || v.rows() == 0 {
            return Err(NumericsError::ShapeMismatch {
                op: "max-over-axis",
                details: format!("expected non-empty rank-2 input, got {:?}", v.shape()),
            });
        }
        let (n, d) = (v.rows(), v.cols());
        let mut data = vec![T::zero(); d];
        let mut argmax = vec![0usize; d];
        for c in 0..d {
            let mut best = v.at2(0, c);
            let mut best_r = 0;
            for r in 1..n {
                if v.at2(r, c) > best {
                    best = v.at2(r, c);
                    best_r = r;
                }
            }
            data[c] = best;
            argmax[c] = best_r;
        }
        let rg = self.nodes[a.0].requires_grad;
        Ok(self.push(Tensor::vector(data), rg, Op::MaxAxis0(a, argmax)))
    }

    /// Numerically stable softmax over a rank-1 tensor.
    pub fn softmax(&mut self, a: Var) -> Result<Var, NumericsError> {
        let v = self.value(a);
        if v.shape().len() != 1 || v.numel() == 0 {
            return Err(NumericsError::ShapeMismatch {
                op: "softmax",
                details: format!("expected non-empty rank-1 input, got {:?}", v.shape()),
            });
        }
        let max = v
            .data()
            .iter()
            .cloned()
            .fold(T::neg_infinity(), |m, x| if x > m { x } else { m });
        let mut data: Vec<T> = v.data().iter().map(|&x| (x - max).exp()).collect();
        let mut sum = T::zero();
        for &x in &data {
            sum += x;
        }
        for x in &mut data {
            *x = *x / sum;
        }
        let rg = self.nodes[a.0].requires_grad;
        Ok(self.push(Tensor::vector(data), rg, Op::Softmax(a)))
    }

    /// Gather rows of an embedding table: `[vocab, d]` indexed by `ids`
    /// yields `[ids.len(), d]`.
    pub fn embedding_lookup(&mut self, table: Var, ids: &[usize]) -> Result<Var, NumericsError> {
        let v = self.value(table);
        if v.shape().len() != 2 {
            return Err(NumericsError::ShapeMismatch {
                op: "embedding-lookup",
                details: format!("table must be rank-2, got {:?}", v.shape()),
            });
        }
        if ids.is_empty() {
            return Err(NumericsError::EmptyInput {
                op: "embedding-lookup",
            });
        }
        let (vocab, d) = (v.rows(), v.cols());
        let mut data = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            if id >= vocab {
                return Err(NumericsError::IndexOutOfRange {
                    op: "embedding-lookup",
                    index: id,
                    len: vocab,
                });
            }
            data.extend_from_slice(&v.data()[id * d..(id + 1) * d]);
        }
        let out = Tensor::new(data, vec![ids.len(), d])?;
        let rg = self.nodes[table.0].requires_grad;
        Ok(self.push(out, rg, Op::EmbeddingLookup(table, ids.to_vec())))
    }

    /// Valid cross-correlation of `[n, d]` against `filters` `[f, width*d]`,
    /// producing `[n-width+1, f]`.
    pub fn conv1d(&mut self, input: Var, filters: Var, width: usize) -> Result<Var, NumericsError> {
        let (vi, vf) = (self.value(input), self.value(filters));
        if vi.shape().len() != 2 || vf.shape().len() != 2 {
            return Err(NumericsError::ShapeMismatch {
                op: "conv1d",
                details: format!("need rank-2 input/filters, got {:?} / {:?}", vi.shape(), vf.shape()),
            });
        }
        let (n, d) = (vi.rows(), vi.cols());
        let f = vf.rows();
        if vf.cols() != width * d {
            return Err(NumericsError::ShapeMismatch {
                op: "conv1d",
                details: format!(
                    "filters cols {} != width {} * input dim {}",
                    vf.cols(),
                    width,
                    d
                ),
            });
        }
        if n < width {
            return Err(NumericsError::SequenceTooShort { len: n, width });
        }
        let out_len = n - width + 1;
        let mut data = vec![T::zero(); out_len * f];
        for t in 0..out_len {
            for fi in 0..f {
                let mut s = T::zero();
                for i in 0..width {
                    for c in 0..d {
                        s += vi.at2(t + i, c) * vf.at2(fi, i * d + c);
                    }
                }
                data[t * f + fi] = s;
            }
        }
        let out = Tensor::new(data, vec![out_len, f])?;
        let rg = self.any_grad(&[input, filters]);
        Ok(self.push(out, rg, Op::Conv1d { input, filters, width }))
    }

    /// Zero-pad rows of a `[n, d]` matrix on both ends.
    pub fn pad_rows(&mut self, input: Var, left: usize, right: usize) -> Result<Var, NumericsError> {
        let v = self.value(input);
        if v.shape().len() != 2 {
            return Err(NumericsError::ShapeMismatch {
                op: "pad-rows",
                details: format!("expected rank-2 input, got {:?}", v.shape()),
            });
        }
        let (n, d) = (v.rows(), v.cols());
        let mut out = Tensor::zeros(&[n + left + right, d]);
        for r in 0..n {
            for c in 0..d {
                out.set2(left + r, c, v.at2(r, c));
            }
        }
        let rg = self.nodes[input.0].requires_grad;
        Ok(self.push(out, rg, Op::PadRows { input, left }))
    }

    /// Extract row `index` of a `[n, d]` matrix as a `[d]` vector.
    pub fn row(&mut self, input: Var, index: usize) -> Result<Var, NumericsError> {
        let v = self.value(input);
        if v.shape().len() != 2 {
            return Err(NumericsError::ShapeMismatch {
                op: "row",
                details: format!("expected rank-2 input, got {:?}", v.shape()),
            });
        }
        if index >= v.rows() {
            return Err(NumericsError::IndexOutOfRange {
                op: "row",
                index,
                len: v.rows(),
            });
        }
        let d = v.cols();
        let data = v.data()[index * d..(index + 1) * d].to_vec();
        let rg = self.nodes[input.0].requires_grad;
        Ok(self.push(Tensor::vector(data), rg, Op::Row(input, index)))
    }

    /// Negative log-likelihood of class `gold` under a probability
    /// distribution. When `dist` was produced by [`Tape::softmax`], the fused
    /// log-sum-exp form is differentiated directly through the logits.
    pub fn cross_entropy(&mut self, dist: Var, gold: usize) -> Result<Var, NumericsError> {
        let v = self.value(dist);
        if v.shape().len() != 1 {
            return Err(NumericsError::ShapeMismatch {
                op: "cross-entropy",
                details: format!("expected rank-1 distribution, got {:?}", v.shape()),
            });
        }
        if gold >= v.numel() {
            return Err(NumericsError::GoldIndexOutOfRange {
                gold,
                classes: v.numel(),
            });
        }
        let mut sum = 0.0f64;
        let mut min = f64::INFINITY;
        for &p in v.data() {
            let p = p.as_f64();
            sum += p;
            min = min.min(p);
        }
        if min < 0.0 || (sum - 1.0).abs() > 1e-6 {
            return Err(NumericsError::NotADistribution { sum, min });
        }

        if let Op::Softmax(logits) = self.nodes[dist.0].op {
            let lv = self.value(logits);
            let max = lv
                .data()
                .iter()
                .map(|x| x.as_f64())
                .fold(f64::NEG_INFINITY, f64::max);
            let lse: f64 = max
                + lv.data()
                    .iter()
                    .map(|x| (x.as_f64() - max).exp())
                    .sum::<f64>()
                    .ln();
            let loss = lse - lv.data()[gold].as_f64();
            let rg = self.nodes[logits.0].requires_grad;
            Ok(self.push(
                Tensor::scalar(T::from_f64(loss)),
                rg,
                Op::CrossEntropyFused { logits, gold },
            ))
        } else {
            let p = v.data()[gold].as_f64().max(PROB_FLOOR);
            let rg = self.nodes[dist.0].requires_grad;
            Ok(self.push(
                Tensor::scalar(T::from_f64(-p.ln())),
                rg,
                Op::CrossEntropyDist { dist, gold },
            ))
        }
    }

    fn accumulate(&mut self, v: Var, delta: Tensor<T>) {
        let node = &mut self.nodes[v.0];
        if !node.requires_grad {
            return;
        }
        match &mut node.grad {
            Some(g) => g.add_in_place(&delta),
            None => node.grad = Some(delta),
        }
    }

    /// Populate gradients of `loss` with respect to every `requires_grad`
    /// node, visiting the tape in exact reverse execution order. Nodes the
    /// loss does not depend on receive zero gradients.
    pub fn backward(&mut self, loss: Var) -> Result<(), NumericsError> {
        if !self.value(loss).is_scalar() {
            return Err(NumericsError::NonScalarLoss {
                shape: self.value(loss).shape().to_vec(),
            });
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        self.nodes[loss.0].grad = Some(Tensor::scalar(T::one()));

        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad || self.nodes[i].grad.is_none() {
                continue;
            }
            let g = self.nodes[i].grad.clone().expect("checked above");
            let op = self.nodes[i].op.clone();
            match op {
                Op::Leaf => {}
                Op::MatMul(a, b) => self.backward_matmul(a, b, &g),
                Op::Add(a, b) => {
                    self.accumulate(a, g.clone());
                    self.accumulate(b, g);
                }
                Op::Sub(a, b) => {
                    self.accumulate(a, g.clone());
                    let mut neg = g;
                    for x in neg.data_mut() {
                        *x = -*x;
                    }
                    self.accumulate(b, neg);
                }
                Op::Mul(a, b) => {
                    let da = {
                        let mut d = g.clone();
                        for (x, &y) in d.data_mut().iter_mut().zip(self.nodes[b.0].value.data()) {
                            *x = *x * y;
                        }
                        d
                    };
                    let db = {
                        let mut d = g;
                        for (x, &y) in d.data_mut().iter_mut().zip(self.nodes[a.0].value.data()) {
                            *x = *x * y;
                        }
                        d
                    };
                    self.accumulate(a, da);
                    self.accumulate(b, db);
                }
                Op::Dot(a, b) => {
                    let gs = g.item();
                    let da = {
                        let mut d = self.nodes[b.0].value.clone();
                        for x in d.data_mut() {
                            *x = *x * gs;
                        }
                        d
                    };
                    let db = {
                        let mut d = self.nodes[a.0].value.clone();
                        for x in d.data_mut() {
                            *x = *x * gs;
                        }
                        d
                    };
                    self.accumulate(a, da);
                    self.accumulate(b, db);
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let len = self.nodes[p.0].value.numel();
                        let slice = g.data()[offset..offset + len].to_vec();
                        self.accumulate(p, Tensor::vector(slice));
                        offset += len;
                    }
                }
                Op::Tanh(a) => {
                    let mut d = g;
                    for (x, &y) in d.data_mut().iter_mut().zip(self.nodes[i].value.data()) {
                        *x = *x * (T::one() - y * y);
                    }
                    self.accumulate(a, d);
                }
                Op::Sigmoid(a) => {
                    let mut d = g;
                    for (x, &s) in d.data_mut().iter_mut().zip(self.nodes[i].value.data()) {
                        *x = *x * s * (T::one() - s);
                    }
                    self.accumulate(a, d);
                }
                Op::Relu(a) => {
                    let mut d = g;
                    for (x, &y) in d.data_mut().iter_mut().zip(self.nodes[a.0].value.data()) {
                        if y <= T::zero() {
                            *x = T::zero();
                        }
                    }
                    self.accumulate(a, d);
                }
                Op::ElementwiseMax(a, b) => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let mut da = Tensor::zeros(va.shape());
                    let mut db = Tensor::zeros(vb.shape());
                    for idx in 0..g.numel() {
                        if va.data()[idx] >= vb.data()[idx] {
                            da.data_mut()[idx] = g.data()[idx];
                        } else {
                            db.data_mut()[idx] = g.data()[idx];
                        }
                    }
                    self.accumulate(a, da);
                    self.accumulate(b, db);
                }
                Op::MeanAxis0(a) => {
                    let va = &self.nodes[a.0].value;
                    let (n, d) = (va.rows(), va.cols());
                    let inv = T::from_f64(1.0 / n as f64);
                    let mut da = Tensor::zeros(&[n, d]);
                    for r in 0..n {
                        for c in 0..d {
                            da.set2(r, c, g.data()[c] * inv);
                        }
                    }
                    self.accumulate(a, da);
                }
                Op::MaxAxis0(a, argmax) => {
                    let va = &self.nodes[a.0].value;
                    let mut da = Tensor::zeros(va.shape());
                    for (c, &r) in argmax.iter().enumerate() {
                        da.set2(r, c, g.data()[c]);
                    }
                    self.accumulate(a, da);
                }
                Op::Softmax(a) => {
                    let s = &self.nodes[i].value;
                    let mut inner = T::zero();
                    for (&gi, &si) in g.data().iter().zip(s.data()) {
                        inner += gi * si;
                    }
                    let mut da = Tensor::zeros(s.shape());
                    for idx in 0..s.numel() {
                        da.data_mut()[idx] = s.data()[idx] * (g.data()[idx] - inner);
                    }
                    self.accumulate(a, da);
                }
                Op::EmbeddingLookup(table, ids) => {
                    let shape = self.nodes[table.0].value.shape().to_vec();
                    let d = shape[1];
                    let mut dt = Tensor::zeros(&shape);
                    for (r, &id) in ids.iter().enumerate() {
                        for c in 0..d {
                            let cur = dt.at2(id, c);
                            dt.set2(id, c, cur + g.at2(r, c));
                        }
                    }
                    self.accumulate(table, dt);
                }
                Op::Conv1d { input, filters, width } => {
                    let vi = self.nodes[input.0].value.clone();
                    let vf = self.nodes[filters.0].value.clone();
                    let (n, d) = (vi.rows(), vi.cols());
                    let f = vf.rows();
                    let out_len = n - width + 1;
                    let mut di = Tensor::zeros(&[n, d]);
                    let mut df = Tensor::zeros(&[f, width * d]);
                    for t in 0..out_len {
                        for fi in 0..f {
                            let go = g.at2(t, fi);
                            if go == T::zero() {
                                continue;
                            }
                            for iw in 0..width {
                                for c in 0..d {
                                    let cur_i = di.at2(t + iw, c);
                                    di.set2(t + iw, c, cur_i + go * vf.at2(fi, iw * d + c));
                                    let cur_f = df.at2(fi, iw * d + c);
                                    df.set2(fi, iw * d + c, cur_f + go * vi.at2(t + iw, c));
                                }
                            }
                        }
                    }
                    self.accumulate(input, di);
                    self.accumulate(filters, df);
                }
                Op::PadRows { input, left } => {
                    let shape = self.nodes[input.0].value.shape().to_vec();
                    let (n, d) = (shape[0], shape[1]);
                    let mut di = Tensor::zeros(&shape);
                    for r in 0..n {
                        for c in 0..d {
                            di.set2(r, c, g.at2(left + r, c));
                        }
                    }
                    self.accumulate(input, di);
                }
                Op::Row(input, index) => {
                    let shape = self.nodes[input.0].value.shape().to_vec();
                    let mut di = Tensor::zeros(&shape);
                    for c in 0..shape[1] {
                        di.set2(index, c, g.data()[c]);
                    }
                    self.accumulate(input, di);
                }
                Op::Scale(a, c) => {
                    let mut d = g;
                    let cv = T::from_f64(c);
                    for x in d.data_mut() {
                        *x = *x * cv;
                    }
                    self.accumulate(a, d);
                }
                Op::CrossEntropyDist { dist, gold } => {
                    let v = &self.nodes[dist.0].value;
                    let mut dd = Tensor::zeros(v.shape());
                    let p = v.data()[gold].as_f64().max(PROB_FLOOR);
                    dd.data_mut()[gold] = g.item() * T::from_f64(-1.0 / p);
                    self.accumulate(dist, dd);
                }
                Op::CrossEntropyFused { logits, gold } => {
                    let lv = &self.nodes[logits.0].value;
                    let max = lv
                        .data()
                        .iter()
                        .cloned()
                        .fold(T::neg_infinity(), |m, x| if x > m { x } else { m });
                    let mut exps: Vec<T> = lv.data().iter().map(|&x| (x - max).exp()).collect();
                    let mut sum = T::zero();
                    for &e in &exps {
                        sum += e;
                    }
                    for e in &mut exps {
                        *e = *e / sum;
                    }
                    exps[gold] = exps[gold] - T::one();
                    let gs = g.item();
                    for e in &mut exps {
                        *e = *e * gs;
                    }
                    self.accumulate(logits, Tensor::vector(exps));
                }
            }
        }

        // Loss-independent parameters still report a (zero) gradient.
        for node in &mut self.nodes {
            if node.requires_grad && node.grad.is_none() {
                node.grad = Some(Tensor::zeros(node.value.shape()));
            }
        }
        Ok(())
    }

    fn backward_matmul(&mut self, a: Var, b: Var, g: &Tensor<T>) {
        let va = self.nodes[a.0].value.clone();
        let vb = self.nodes[b.0].value.clone();
        match (va.shape(), vb.shape()) {
            ([m, k], [_, n]) => {
                let (m, k, n) = (*m, *k, *n);
                // dA = g . B^T
                let mut da = Tensor::zeros(&[m, k]);
                for i in 0..m {
                    for p in 0..k {
                        let mut s = T::zero();
                        for j in 0..n {
                            s += g.at2(i, j) * vb.at2(p, j);
                        }
                        da.set2(i, p, s);
                    }
                }
                // dB = A^T . g
                let mut db = Tensor::zeros(&[k, n]);
                for p in 0..k {
                    for j in 0..n {
                        let mut s = T::zero();
                        for i in 0..m {
                            s += va.at2(i, p) * g.at2(i, j);
                        }
                        db.set2(p, j, s);
                    }
                }
                self.accumulate(a, da);
                self.accumulate(b, db);
            }
            ([m, k], [_]) => {
                let (m, k) = (*m, *k);
                // dA = outer(g, x)
                let mut da = Tensor::zeros(&[m, k]);
                for i in 0..m {
                    for p in 0..k {
                        da.set2(i, p, g.data()[i] * vb.data()[p]);
                    }
                }
                // dx = A^T . g
                let mut db = Tensor::zeros(&[k]);
                for p in 0..k {
                    let mut s = T::zero();
                    for i in 0..m {
                        s += va.at2(i, p) * g.data()[i];
                    }
                    db.data_mut()[p] = s;
                }
                self.accumulate(a, da);
                self.accumulate(b, db);
            }
            _ => unreachable!("matmul forward validated shapes"),
        }
    }
}

fn sigmoid_scalar<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}
