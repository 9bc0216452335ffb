use super::params::{ParamId, ParameterStore};
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Hadamard(NodeId, NodeId),
    Scale(NodeId, f64),
    OneMinus(NodeId),
    Concat(Vec<NodeId>),
    Slice { src: NodeId, start: usize },
    Sigmoid(NodeId),
    Tanh(NodeId),
    Lookup { table: NodeId, row: usize },
    MaxPool { inputs: Vec<NodeId>, argmax: Vec<usize> },
    LogSoftmax(NodeId),
    Pick { src: NodeId, index: usize },
    Sum(Vec<NodeId>),
    SumAll(NodeId),
}

struct Node {
    // `None` for parameters, whose values live in the store.
    value: Option<Tensor>,
    op: Op,
}

/// Records a forward computation over a read-only parameter store so it
/// can be differentiated once with [`Tape::backward`].
pub struct Tape<'s> {
    store: &'s ParameterStore,
    nodes: Vec<Node>,
    param_nodes: Vec<Option<NodeId>>,
    finished: bool,
}

/// Result of a backward pass: gradients for every node and parameter that
/// the loss depends on.
pub struct Gradients {
    nodes: Vec<Option<Vec<f64>>>,
    param_nodes: Vec<Option<NodeId>>,
}

impl Gradients {
    /// Gradient with respect to a node's value, if the loss reaches it.
    pub fn wrt(&self, node: NodeId) -> Option<&[f64]> {
        self.nodes[node.0].as_deref()
    }

    pub fn param(&self, id: ParamId) -> Option<&[f64]> {
        self.param_nodes
            .get(id.index())
            .copied()
            .flatten()
            .and_then(|n| self.wrt(n))
    }

    /// Gradients of every parameter the loss reached.
    pub fn params(&self) -> impl Iterator<Item = (ParamId, &[f64])> + '_ {
        self.param_nodes
            .iter()
            .enumerate()
            .filter_map(move |(i, n)| n.and_then(|n| self.wrt(n)).map(|g| (ParamId::from_index(i), g)))
    }
}

fn shape_err(op: &'static str, detail: String) -> Error {
    Error::Shape { op, detail }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

impl<'s> Tape<'s> {
    pub fn new(store: &'s ParameterStore) -> Self {
        Tape {
            store,
            nodes: Vec::new(),
            param_nodes: vec![None; store.len()],
            finished: false,
        }
    }

    pub fn store(&self) -> &'s ParameterStore {
        self.store
    }

    /// Drops all recorded nodes so the tape can be reused.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.param_nodes.iter_mut().for_each(|n| *n = None);
        self.finished = false;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        let node = &self.nodes[id.0];
        match (&node.value, &node.op) {
            (Some(v), _) => v,
            (None, Op::Param(p)) => self.store.value(*p),
            _ => unreachable!("only parameters are stored by reference"),
        }
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node {
            value: Some(value),
            op,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// A constant leaf.
    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Input)
    }

    /// The node for a stored parameter; repeated calls share one node.
    pub fn param(&mut self, id: ParamId) -> NodeId {
        if let Some(n) = self.param_nodes[id.index()] {
            return n;
        }
        self.nodes.push(Node {
            value: None,
            op: Op::Param(id),
        });
        let n = NodeId(self.nodes.len() - 1);
        self.param_nodes[id.index()] = Some(n);
        n
    }

    /// Matrix product. `[m,k]·[k]` gives `[m]`; `[m,k]·[k,n]` gives `[m,n]`.
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(b));
        let (m, k) = match av.shape() {
            [m, k] => (*m, *k),
            s => return Err(shape_err("matmul", format!("left operand must be a matrix, got {s:?}"))),
        };
        let (k2, n, out_shape) = match bv.shape() {
            [k2] => (*k2, 1, vec![m]),
            [k2, n] => (*k2, *n, vec![m, *n]),
            s => return Err(shape_err("matmul", format!("right operand shape {s:?}"))),
        };
        if k != k2 {
            return Err(shape_err(
                "matmul",
                format!("{:?} · {:?}", av.shape(), bv.shape()),
            ));
        }
        let (ad, bd) = (av.data(), bv.data());
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let arow = &ad[i * k..(i + 1) * k];
            for (kk, &aik) in arow.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let brow = &bd[kk * n..(kk + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += aik * b;
                }
            }
        }
        Ok(self.push(Tensor::new(out_shape, out)?, Op::MatMul(a, b)))
    }

    fn zip_with(
        &mut self,
        op: &'static str,
        a: NodeId,
        b: NodeId,
        f: impl Fn(f64, f64) -> f64,
        record: Op,
    ) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(shape_err(op, format!("{:?} vs {:?}", av.shape(), bv.shape())));
        }
        let data = av.data().iter().zip(bv.data()).map(|(&x, &y)| f(x, y)).collect();
        let value = Tensor::new(av.shape().to_vec(), data)?;
        Ok(self.push(value, record))
    }

    fn map(&mut self, a: NodeId, f: impl Fn(f64) -> f64, record: Op) -> NodeId {
        let av = self.value(a);
        let value = Tensor::new(av.shape().to_vec(), av.data().iter().map(|&x| f(x)).collect())
            .expect("same shape");
        self.push(value, record)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.zip_with("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.zip_with("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn hadamard(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.zip_with("hadamard", a, b, |x, y| x * y, Op::Hadamard(a, b))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        self.map(a, |x| x * factor, Op::Scale(a, factor))
    }

    /// `1 - a`, elementwise.
    pub fn one_minus(&mut self, a: NodeId) -> NodeId {
        self.map(a, |x| 1.0 - x, Op::OneMinus(a))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.map(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.map(a, f64::tanh, Op::Tanh(a))
    }

    /// Concatenation of vectors.
    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(shape_err("concat", "no inputs".into()));
        }
        let mut data = Vec::new();
        for &p in parts {
            let v = self.value(p);
            if v.shape().len() != 1 {
                return Err(shape_err("concat", format!("input shape {:?} is not a vector", v.shape())));
            }
            data.extend_from_slice(v.data());
        }
        Ok(self.push(Tensor::vector(data), Op::Concat(parts.to_vec())))
    }

    /// `len` consecutive entries of a vector starting at `start`.
    pub fn slice(&mut self, src: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let v = self.value(src);
        if v.shape().len() != 1 || start + len > v.len() {
            return Err(shape_err(
                "slice",
                format!("[{}..{}] of shape {:?}", start, start + len, v.shape()),
            ));
        }
        let data = v.data()[start..start + len].to_vec();
        Ok(self.push(Tensor::vector(data), Op::Slice { src, start }))
    }

    /// Row `row` of a `[rows, d]` table.
    pub fn lookup(&mut self, table: NodeId, row: usize) -> Result<NodeId> {
        let v = self.value(table);
        match v.shape() {
            [rows, _] if row < *rows => {}
            s => return Err(shape_err("embedding_lookup", format!("row {row} of shape {s:?}"))),
        }
        let data = v.row(row).to_vec();
        Ok(self.push(Tensor::vector(data), Op::Lookup { table, row }))
    }

    /// Elementwise maximum over same-shaped inputs. Ties go to the
    /// earliest input.
    pub fn max_pool(&mut self, inputs: &[NodeId]) -> Result<NodeId> {
        let first = *inputs
            .first()
            .ok_or_else(|| shape_err("elementwise_max", "no inputs".into()))?;
        let shape = self.value(first).shape().to_vec();
        let mut best = self.value(first).data().to_vec();
        let mut argmax = vec![0; best.len()];
        for (k, &id) in inputs.iter().enumerate().skip(1) {
            let v = self.value(id);
            if v.shape() != shape.as_slice() {
                return Err(shape_err("elementwise_max", format!("{:?} vs {:?}", shape, v.shape())));
            }
            for (j, &x) in v.data().iter().enumerate() {
                if x > best[j] {
                    best[j] = x;
                    argmax[j] = k;
                }
            }
        }
        let value = Tensor::new(shape, best)?;
        Ok(self.push(
            value,
            Op::MaxPool {
                inputs: inputs.to_vec(),
                argmax,
            },
        ))
    }

    pub fn log_softmax(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a);
        if v.shape().len() != 1 || v.is_empty() {
            return Err(shape_err("log_softmax", format!("shape {:?}", v.shape())));
        }
        let max = v.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + v.data().iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        let data = v.data().iter().map(|x| x - lse).collect();
        Ok(self.push(Tensor::vector(data), Op::LogSoftmax(a)))
    }

    /// Entry `index` of a vector, as a scalar.
    pub fn pick(&mut self, src: NodeId, index: usize) -> Result<NodeId> {
        let v = self.value(src);
        if v.shape().len() != 1 || index >= v.len() {
            return Err(shape_err("pick", format!("index {} of shape {:?}", index, v.shape())));
        }
        let x = v.data()[index];
        Ok(self.push(Tensor::scalar(x), Op::Pick { src, index }))
    }

    /// Elementwise sum of same-shaped inputs.
    pub fn sum(&mut self, inputs: &[NodeId]) -> Result<NodeId> {
        let first = *inputs
            .first()
            .ok_or_else(|| shape_err("sum", "no inputs".into()))?;
        let shape = self.value(first).shape().to_vec();
        let mut acc = self.value(first).data().to_vec();
        for &id in &inputs[1..] {
            let v = self.value(id);
            if v.shape() != shape.as_slice() {
                return Err(shape_err("sum", format!("{:?} vs {:?}", shape, v.shape())));
            }
            add_into(&mut acc, v.data());
        }
        let value = Tensor::new(shape, acc)?;
        Ok(self.push(value, Op::Sum(inputs.to_vec())))
    }

    /// Sum of all entries, as a scalar.
    pub fn sum_all(&mut self, a: NodeId) -> NodeId {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::SumAll(a))
    }

    /// Reverse sweep from a scalar loss. May run once per recording.
    pub fn backward(&mut self, loss: NodeId) -> Result<Gradients> {
        if self.finished {
            return Err(Error::BackwardTwice);
        }
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(Error::NonScalarLoss(lv.shape().to_vec()));
        }
        self.finished = true;

        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let out = self.value(NodeId(idx));
            self.propagate(idx, &g, out, &mut grads);
            grads[idx] = Some(g);
        }

        Ok(Gradients {
            nodes: grads,
            param_nodes: self.param_nodes.clone(),
        })
    }

    fn propagate(&self, idx: usize, g: &[f64], out: &Tensor, grads: &mut [Option<Vec<f64>>]) {
        let acc = |id: NodeId, grads: &mut [Option<Vec<f64>>], f: &dyn Fn(&mut [f64])| {
            let n = self.value(id).len();
            let slot = grads[id.0].get_or_insert_with(|| vec![0.0; n]);
            f(slot);
        };
        match &self.nodes[idx].op {
            Op::Input | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, k) = (av.shape()[0], av.shape()[1]);
                let n = if bv.shape().len() == 1 { 1 } else { bv.shape()[1] };
                let (ad, bd) = (av.data(), bv.data());
                // dA = dY · Bᵀ
                acc(*a, grads, &|ga| {
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        for kk in 0..k {
                            let brow = &bd[kk * n..(kk + 1) * n];
                            ga[i * k + kk] += grow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
                        }
                    }
                });
                // dB = Aᵀ · dY
                acc(*b, grads, &|gb| {
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        for kk in 0..k {
                            let aik = ad[i * k + kk];
                            if aik == 0.0 {
                                continue;
                            }
                            for (o, &x) in gb[kk * n..(kk + 1) * n].iter_mut().zip(grow) {
                                *o += aik * x;
                            }
                        }
                    }
                });
            }
            Op::Add(a, b) => {
                acc(*a, grads, &|ga| add_into(ga, g));
                acc(*b, grads, &|gb| add_into(gb, g));
            }
            Op::Sub(a, b) => {
                acc(*a, grads, &|ga| add_into(ga, g));
                acc(*b, grads, &|gb| gb.iter_mut().zip(g).for_each(|(d, x)| *d -= x));
            }
            Op::Hadamard(a, b) => {
                let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                acc(*a, grads, &|ga| {
                    for ((d, x), y) in ga.iter_mut().zip(g).zip(bv) {
                        *d += x * y;
                    }
                });
                acc(*b, grads, &|gb| {
                    for ((d, x), y) in gb.iter_mut().zip(g).zip(av) {
                        *d += x * y;
                    }
                });
            }
            Op::Scale(a, factor) => {
                acc(*a, grads, &|ga| ga.iter_mut().zip(g).for_each(|(d, x)| *d += x * factor));
            }
            Op::OneMinus(a) => {
                acc(*a, grads, &|ga| ga.iter_mut().zip(g).for_each(|(d, x)| *d -= x));
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for p in parts {
                    let len = self.value(*p).len();
                    let chunk = &g[offset..offset + len];
                    acc(*p, grads, &|gp| add_into(gp, chunk));
                    offset += len;
                }
            }
            Op::Slice { src, start } => {
                acc(*src, grads, &|gs| add_into(&mut gs[*start..*start + g.len()], g));
            }
            Op::Sigmoid(a) => {
                let y = out.data();
                acc(*a, grads, &|ga| {
                    for ((d, x), y) in ga.iter_mut().zip(g).zip(y) {
                        *d += x * y * (1.0 - y);
                    }
                });
            }
            Op::Tanh(a) => {
                let y = out.data();
                acc(*a, grads, &|ga| {
                    for ((d, x), y) in ga.iter_mut().zip(g).zip(y) {
                        *d += x * (1.0 - y * y);
                    }
                });
            }
            Op::Lookup { table, row } => {
                let cols = g.len();
                acc(*table, grads, &|gt| add_into(&mut gt[row * cols..(row + 1) * cols], g));
            }
            Op::MaxPool { inputs, argmax } => {
                for (k, input) in inputs.iter().enumerate() {
                    if !argmax.contains(&k) {
                        continue;
                    }
                    acc(*input, grads, &|gi| {
                        for (j, &winner) in argmax.iter().enumerate() {
                            if winner == k {
                                gi[j] += g[j];
                            }
                        }
                    });
                }
            }
            Op::LogSoftmax(a) => {
                let total: f64 = g.iter().sum();
                let y = out.data();
                acc(*a, grads, &|ga| {
                    for ((d, x), y) in ga.iter_mut().zip(g).zip(y) {
                        *d += x - y.exp() * total;
                    }
                });
            }
            Op::Pick { src, index } => {
                acc(*src, grads, &|gs| gs[*index] += g[0]);
            }
            Op::Sum(inputs) => {
                for input in inputs {
                    acc(*input, grads, &|gi| add_into(gi, g));
                }
            }
            Op::SumAll(a) => {
                acc(*a, grads, &|ga| ga.iter_mut().for_each(|d| *d += g[0]));
            }
        }
    }
}
