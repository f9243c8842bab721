//! Tape-based reverse-mode automatic differentiation over dense matrices.
//!
//! A forward pass appends nodes to the [`Tape`] (parents always precede
//! children, so tape order is a topological order); [`Tape::backward`]
//! walks the nodes once in reverse, accumulating gradients in a fixed,
//! deterministic order. Shape mismatches are programming errors and panic;
//! recoverable conditions (non-scalar loss) surface as [`NnError`].

use super::tensor::Tensor2;
use crate::atmosphere;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("loss must be a 1x1 scalar, got {rows}x{cols}")]
    NonScalarLoss { rows: usize, cols: usize },
    #[error("missing input feature '{0}'")]
    MissingFeature(String),
    #[error("non-finite input for feature '{0}'")]
    NonFiniteInput(String),
    #[error("non-finite output at '{0}'")]
    NonFiniteOutput(String),
    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub(crate) usize);

#[derive(Debug, Clone)]
enum Op {
    /// Differentiable input (parameter).
    Leaf,
    /// Non-differentiable input (data).
    Constant,
    MatMul(NodeId, NodeId),
    /// `[B,H] + [1,H]` row broadcast (bias add).
    AddRow(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    Relu(NodeId),
    Sin(NodeId),
    Sqrt(NodeId),
    /// Elementwise x^p for constant p (x > 0).
    PowConst(NodeId, f64),
    /// scale * x + shift; only the scale matters for the backward pass.
    Affine(NodeId, f64),
    /// Smooth non-negativity map: softplus with sharpness beta.
    SoftplusBeta(NodeId, f64),
    /// Column-wise concatenation of same-height tensors.
    ConcatCols(Vec<NodeId>),
    /// ISA pressure profile applied elementwise to altitude.
    IsaPressure(NodeId),
    /// Mean over all entries, producing a 1x1 scalar.
    MeanAll(NodeId),
}

struct Node {
    op: Op,
    value: Tensor2,
    needs_grad: bool,
}

/// Recorded forward computation.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Per-node gradients produced by [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Tensor2>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&Tensor2> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    /// Gradient of a leaf, or zeros if the leaf never influenced the loss.
    pub fn get_or_zeros(&self, id: NodeId, shape: (usize, usize)) -> Tensor2 {
        self.get(id)
            .cloned()
            .unwrap_or_else(|| Tensor2::zeros(shape.0, shape.1))
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor2 {
        &self.nodes[id.0].value
    }

    fn push(&mut self, op: Op, value: Tensor2, needs_grad: bool) -> NodeId {
        self.nodes.push(Node {
            op,
            value,
            needs_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].needs_grad
    }

    /// Differentiable input: gradients are tracked back to it.
    pub fn leaf(&mut self, value: Tensor2) -> NodeId {
        self.push(Op::Leaf, value, true)
    }

    /// Non-differentiable input.
    pub fn constant(&mut self, value: Tensor2) -> NodeId {
        self.push(Op::Constant, value, false)
    }

    pub fn scalar_constant(&mut self, v: f64) -> NodeId {
        self.constant(Tensor2::scalar(v))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).matmul(self.value(b));
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::MatMul(a, b), v, ng)
    }

    pub fn add_row(&mut self, a: NodeId, bias: NodeId) -> NodeId {
        let (av, bv) = (self.value(a), self.value(bias));
        assert_eq!(bv.rows(), 1, "bias must be a row vector");
        assert_eq!(av.cols(), bv.cols(), "bias width mismatch");
        let mut out = av.clone();
        for r in 0..out.rows() {
            for c in 0..out.cols() {
                let v = out.get(r, c) + bv.get(0, c);
                out.set(r, c, v);
            }
        }
        let ng = self.needs(a) || self.needs(bias);
        self.push(Op::AddRow(a, bias), out, ng)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::Add(a, b), v, ng)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::Sub(a, b), v, ng)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::Mul(a, b), v, ng)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).zip_map(self.value(b), |x, y| x / y);
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::Div(a, b), v, ng)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(|x| if x > 0.0 { x } else { 0.0 });
        let ng = self.needs(a);
        self.push(Op::Relu(a), v, ng)
    }

    pub fn sin(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(f64::sin);
        let ng = self.needs(a);
        self.push(Op::Sin(a), v, ng)
    }

    pub fn sqrt(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(f64::sqrt);
        let ng = self.needs(a);
        self.push(Op::Sqrt(a), v, ng)
    }

    pub fn pow_const(&mut self, a: NodeId, p: f64) -> NodeId {
        let v = self.value(a).map(|x| x.powf(p));
        let ng = self.needs(a);
        self.push(Op::PowConst(a, p), v, ng)
    }

    pub fn affine(&mut self, a: NodeId, scale: f64, shift: f64) -> NodeId {
        let v = self.value(a).map(|x| scale * x + shift);
        let ng = self.needs(a);
        self.push(Op::Affine(a, scale), v, ng)
    }

    pub fn scale(&mut self, a: NodeId, s: f64) -> NodeId {
        self.affine(a, s, 0.0)
    }

    pub fn softplus_beta(&mut self, a: NodeId, beta: f64) -> NodeId {
        assert!(beta > 0.0);
        let v = self
            .value(a)
            .map(|x| x.max(0.0) + (-beta * x.abs()).exp().ln_1p() / beta);
        let ng = self.needs(a);
        self.push(Op::SoftplusBeta(a, beta), v, ng)
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty());
        let rows = self.value(parts[0]).rows();
        let total: usize = parts.iter().map(|p| self.value(*p).cols()).sum();
        let mut out = Tensor2::zeros(rows, total);
        let mut offset = 0;
        for &p in parts {
            let v = self.value(p);
            assert_eq!(v.rows(), rows, "concat_cols row mismatch");
            for r in 0..rows {
                for c in 0..v.cols() {
                    out.set(r, offset + c, v.get(r, c));
                }
            }
            offset += v.cols();
        }
        let ng = parts.iter().any(|&p| self.needs(p));
        self.push(Op::ConcatCols(parts.to_vec()), out, ng)
    }

    pub fn isa_pressure(&mut self, h: NodeId) -> NodeId {
        let v = self.value(h).map(atmosphere::isa_pressure_raw);
        let ng = self.needs(h);
        self.push(Op::IsaPressure(h), v, ng)
    }

    pub fn mean_all(&mut self, a: NodeId) -> NodeId {
        let av = self.value(a);
        let mean = av.data().iter().sum::<f64>() / av.len() as f64;
        let ng = self.needs(a);
        self.push(Op::MeanAll(a), Tensor2::scalar(mean), ng)
    }

    /// Reverse pass from a scalar root. Gradients accumulate in reverse tape
    /// order, one visit per node.
    pub fn backward(&self, root: NodeId) -> Result<Gradients, NnError> {
        let rv = self.value(root);
        if rv.shape() != (1, 1) {
            return Err(NnError::NonScalarLoss {
                rows: rv.rows(),
                cols: rv.cols(),
            });
        }
        let mut grads: Vec<Option<Tensor2>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(Tensor2::scalar(1.0));

        for i in (0..=root.0).rev() {
            if !self.nodes[i].needs_grad {
                grads[i] = None;
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            // Keep leaf gradients for extraction.
            if matches!(self.nodes[i].op, Op::Leaf) {
                grads[i] = Some(g);
            }
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, i: usize, g: &Tensor2, grads: &mut [Option<Tensor2>]) {
        let acc = |grads: &mut [Option<Tensor2>], id: NodeId, t: Tensor2| {
            match &mut grads[id.0] {
                Some(existing) => existing.add_assign(&t),
                slot => *slot = Some(t),
            }
        };
        match &self.nodes[i].op {
            Op::Leaf | Op::Constant => {}
            Op::MatMul(a, b) => {
                if self.needs(*a) {
                    acc(grads, *a, g.matmul_nt(self.value(*b)));
                }
                if self.needs(*b) {
                    acc(grads, *b, self.value(*a).matmul_tn(g));
                }
            }
            Op::AddRow(a, bias) => {
                if self.needs(*a) {
                    acc(grads, *a, g.clone());
                }
                if self.needs(*bias) {
                    acc(grads, *bias, g.col_sums());
                }
            }
            Op::Add(a, b) => {
                if self.needs(*a) {
                    acc(grads, *a, g.clone());
                }
                if self.needs(*b) {
                    acc(grads, *b, g.clone());
                }
            }
            Op::Sub(a, b) => {
                if self.needs(*a) {
                    acc(grads, *a, g.clone());
                }
                if self.needs(*b) {
                    acc(grads, *b, g.map(|x| -x));
                }
            }
            Op::Mul(a, b) => {
                if self.needs(*a) {
                    acc(grads, *a, g.zip_map(self.value(*b), |x, y| x * y));
                }
                if self.needs(*b) {
                    acc(grads, *b, g.zip_map(self.value(*a), |x, y| x * y));
                }
            }
            Op::Div(a, b) => {
                if self.needs(*a) {
                    acc(grads, *a, g.zip_map(self.value(*b), |x, y| x / y));
                }
                if self.needs(*b) {
                    let av = self.value(*a);
                    let bv = self.value(*b);
                    let mut t = g.zip_map(av, |x, y| x * y);
                    t = t.zip_map(bv, |x, y| -x / (y * y));
                    acc(grads, *b, t);
                }
            }
            Op::Relu(a) => {
                if self.needs(*a) {
                    // Subgradient at 0 is 0.
                    acc(
                        grads,
                        *a,
                        g.zip_map(self.value(*a), |x, v| if v > 0.0 { x } else { 0.0 }),
                    );
                }
            }
            Op::Sin(a) => {
                if self.needs(*a) {
                    acc(grads, *a, g.zip_map(self.value(*a), |x, v| x * v.cos()));
                }
            }
            Op::Sqrt(a) => {
                if self.needs(*a) {
                    // Use the output value: d sqrt(x)/dx = 1/(2 sqrt(x)).
                    let y = &self.nodes[i].value;
                    acc(grads, *a, g.zip_map(y, |x, v| x / (2.0 * v)));
                }
            }
            Op::PowConst(a, p) => {
                if self.needs(*a) {
                    let p = *p;
                    acc(
                        grads,
                        *a,
                        g.zip_map(self.value(*a), move |x, v| x * p * v.powf(p - 1.0)),
                    );
                }
            }
            Op::Affine(a, s) => {
                if self.needs(*a) {
                    let s = *s;
                    acc(grads, *a, g.map(|x| s * x));
                }
            }
            Op::SoftplusBeta(a, beta) => {
                if self.needs(*a) {
                    let beta = *beta;
                    acc(
                        grads,
                        *a,
                        g.zip_map(self.value(*a), move |x, v| {
                            x / (1.0 + (-beta * v).exp())
                        }),
                    );
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).cols();
                    if self.needs(p) {
                        let mut t = Tensor2::zeros(g.rows(), w);
                        for r in 0..g.rows() {
                            for c in 0..w {
                                t.set(r, c, g.get(r, offset + c));
                            }
                        }
                        acc(grads, p, t);
                    }
                    offset += w;
                }
            }
            Op::IsaPressure(a) => {
                if self.needs(*a) {
                    acc(
                        grads,
                        *a,
                        g.zip_map(self.value(*a), |x, h| {
                            x * atmosphere::isa_pressure_slope(h)
                        }),
                    );
                }
            }
            Op::MeanAll(a) => {
                if self.needs(*a) {
                    let av = self.value(*a);
                    let s = g.item() / av.len() as f64;
                    acc(grads, *a, Tensor2::filled(av.rows(), av.cols(), s));
                }
            }
        }
    }
}
