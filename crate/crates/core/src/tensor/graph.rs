//! Eager-recording computation graph.

use super::{GradBuffer, ParamId, ParamSet, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

/// Which of the two binary-cross-entropy forms to compute.
///
/// `Full` is the standard two-term form; `PaperLiteral` keeps only the
/// positive-class term and therefore gives no gradient to negative classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossMode {
    #[default]
    Full,
    PaperLiteral,
}

#[derive(Debug, Clone, Copy)]
enum Src {
    Node(usize),
    Param(ParamId),
}

#[derive(Debug, Clone)]
enum Op {
    /// Leaf holding a caller-supplied tensor.
    Const,
    /// Valid (unpadded) 2-D convolution, single image, multi-channel.
    Conv2d {
        input: Src,
        kernels: Src,
        stride: usize,
    },
    /// Adds a per-channel bias to a [C,H,W] map.
    BiasChannel { input: Src, bias: Src },
    /// weights[m,n] * input[n] + bias[m]
    Dense {
        input: Src,
        weights: Src,
        bias: Src,
    },
    Relu { input: Src },
    Sigmoid { input: Src },
    /// Numerically stable softmax over a vector.
    Softmax { input: Src },
    /// H = -sum p ln p over a probability vector; zero-probability terms
    /// contribute nothing.
    Entropy { probs: Src },
    /// ln(p[index]) of a probability vector.
    LogIndex { probs: Src, index: usize },
    /// Picks one scalar out of a vector.
    Index { input: Src, index: usize },
    Square { input: Src },
    Scale { input: Src, factor: f32 },
    AddScalar { input: Src },
    Add { a: Src, b: Src },
    Flatten { input: Src },
    /// Binary cross entropy on raw logits against a fixed 0/1 target.
    BceWithLogits {
        logits: Src,
        target: Vec<f32>,
        mode: LossMode,
    },
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
    needs_grad: bool,
    grad: Option<Vec<f32>>,
}

/// Tape of recorded operations over one forward pass.
///
/// Nodes are appended in execution order, so every operation's inputs
/// precede it and a single reverse sweep visits each node exactly once.
pub struct Graph<'p> {
    params: &'p ParamSet,
    nodes: Vec<Node>,
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamSet) -> Self {
        Graph {
            params,
            nodes: Vec::with_capacity(24),
        }
    }

    pub fn params(&self) -> &'p ParamSet {
        self.params
    }

    fn src_shape(&self, s: Src) -> &[usize] {
        match s {
            Src::Node(i) => self.nodes[i].value.shape(),
            Src::Param(p) => self.params.get(p).tensor.shape(),
        }
    }

    fn src_data(&self, s: Src) -> &[f32] {
        match s {
            Src::Node(i) => self.nodes[i].value.data(),
            Src::Param(p) => self.params.get(p).tensor.data(),
        }
    }

    fn src_needs_grad(&self, s: Src) -> bool {
        match s {
            Src::Node(i) => self.nodes[i].needs_grad,
            Src::Param(p) => self.params.get(p).tensor.requires_grad(),
        }
    }

    fn push(&mut self, op: Op, value: Tensor, needs_grad: bool) -> NodeId {
        self.nodes.push(Node {
            op,
            value,
            needs_grad,
            grad: None,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn src(&self, id: NodeId) -> Src {
        Src::Node(id.0)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn scalar_value(&self, id: NodeId) -> f32 {
        self.nodes[id.0].value.data()[0]
    }

    /// Gradient of the last backward pass at this node, if one was kept.
    pub fn node_grad(&self, id: NodeId) -> Option<&[f32]> {
        self.nodes[id.0].grad.as_deref()
    }

    // ---- leaves ----

    /// Records a constant input. Set `requires_grad` on the tensor to make
    /// backward keep a gradient for it (used by saliency).
    pub fn constant(&mut self, t: Tensor) -> NodeId {
        let ng = t.requires_grad();
        self.push(Op::Const, t, ng)
    }

    // ---- operations ----

    pub fn conv2d(&mut self, input: NodeId, kernels: ParamId, stride: usize) -> Result<NodeId> {
        self.conv2d_src(self.src(input), Src::Param(kernels), stride)
    }

    pub fn conv2d_nodes(
        &mut self,
        input: NodeId,
        kernels: NodeId,
        stride: usize,
    ) -> Result<NodeId> {
        self.conv2d_src(self.src(input), self.src(kernels), stride)
    }

    fn conv2d_src(&mut self, input: Src, kernels: Src, stride: usize) -> Result<NodeId> {
        let ishape = self.src_shape(input).to_vec();
        let kshape = self.src_shape(kernels).to_vec();
        if ishape.len() != 3 || kshape.len() != 4 {
            return Err(Error::shape(
                "conv2d",
                format!("want input [C,H,W], kernels [Co,Ci,kh,kw]; got {ishape:?}, {kshape:?}"),
            ));
        }
        let (ci, h, w) = (ishape[0], ishape[1], ishape[2]);
        let (co, kci, kh, kw) = (kshape[0], kshape[1], kshape[2], kshape[3]);
        if ci != kci {
            return Err(Error::shape(
                "conv2d",
                format!("input has {ci} channels, kernels expect {kci}"),
            ));
        }
        if stride == 0 || h < kh || w < kw {
            return Err(Error::shape(
                "conv2d",
                format!("{h}x{w} input too small for {kh}x{kw} kernel at stride {stride}"),
            ));
        }
        let oh = (h - kh) / stride + 1;
        let ow = (w - kw) / stride + 1;
        let mut out = vec![0.0f32; co * oh * ow];
        {
            let x = self.src_data(input);
            let k = self.src_data(kernels);
            conv2d_forward(x, k, &mut out, ci, h, w, co, kh, kw, stride, oh, ow);
        }
        let ng = self.src_needs_grad(input) || self.src_needs_grad(kernels);
        Ok(self.push(
            Op::Conv2d {
                input,
                kernels,
                stride,
            },
            Tensor::new(vec![co, oh, ow], out)?,
            ng,
        ))
    }

    pub fn bias_channel(&mut self, input: NodeId, bias: ParamId) -> Result<NodeId> {
        let input = self.src(input);
        let bias = Src::Param(bias);
        let ishape = self.src_shape(input).to_vec();
        let bshape = self.src_shape(bias).to_vec();
        if ishape.len() != 3 || bshape.len() != 1 || bshape[0] != ishape[0] {
            return Err(Error::shape(
                "bias_channel",
                format!("input {ishape:?} vs bias {bshape:?}"),
            ));
        }
        let plane = ishape[1] * ishape[2];
        let mut out = self.src_data(input).to_vec();
        {
            let b = self.src_data(bias);
            for (c, bc) in b.iter().enumerate() {
                for v in &mut out[c * plane..(c + 1) * plane] {
                    *v += *bc;
                }
            }
        }
        let ng = self.src_needs_grad(input) || self.src_needs_grad(bias);
        Ok(self.push(
            Op::BiasChannel { input, bias },
            Tensor::new(ishape, out)?,
            ng,
        ))
    }

    pub fn dense(&mut self, input: NodeId, weights: ParamId, bias: ParamId) -> Result<NodeId> {
        self.dense_src(self.src(input), Src::Param(weights), Src::Param(bias))
    }

    pub fn dense_nodes(&mut self, input: NodeId, weights: NodeId, bias: NodeId) -> Result<NodeId> {
        self.dense_src(self.src(input), self.src(weights), self.src(bias))
    }

    fn dense_src(&mut self, input: Src, weights: Src, bias: Src) -> Result<NodeId> {
        let ishape = self.src_shape(input).to_vec();
        let wshape = self.src_shape(weights).to_vec();
        let bshape = self.src_shape(bias).to_vec();
        if ishape.len() != 1 || wshape.len() != 2 || bshape.len() != 1 {
            return Err(Error::shape(
                "dense",
                format!("want input [n], weights [m,n], bias [m]; got {ishape:?}, {wshape:?}, {bshape:?}"),
            ));
        }
        let (m, n) = (wshape[0], wshape[1]);
        if ishape[0] != n || bshape[0] != m {
            return Err(Error::shape(
                "dense",
                format!("dimension mismatch: input {}, weights {m}x{n}, bias {}", ishape[0], bshape[0]),
            ));
        }
        let mut out = vec![0.0f32; m];
        {
            let x = self.src_data(input);
            let w = self.src_data(weights);
            let b = self.src_data(bias);
            for i in 0..m {
                let row = &w[i * n..(i + 1) * n];
                let mut acc = 0.0f32;
                for (wv, xv) in row.iter().zip(x) {
                    acc += wv * xv;
                }
                out[i] = acc + b[i];
            }
        }
        let ng = self.src_needs_grad(input)
            || self.src_needs_grad(weights)
            || self.src_needs_grad(bias);
        Ok(self.push(
            Op::Dense {
                input,
                weights,
                bias,
            },
            Tensor::new(vec![m], out)?,
            ng,
        ))
    }

    pub fn relu(&mut self, input: NodeId) -> NodeId {
        let input = self.src(input);
        let out: Vec<f32> = self.src_data(input).iter().map(|x| x.max(0.0)).collect();
        let shape = self.src_shape(input).to_vec();
        let ng = self.src_needs_grad(input);
        self.push(Op::Relu { input }, Tensor { shape, data: out, requires_grad: false, grad: None }, ng)
    }

    pub fn sigmoid(&mut self, input: NodeId) -> NodeId {
        let input = self.src(input);
        let out: Vec<f32> = self.src_data(input).iter().map(|&x| stable_sigmoid(x)).collect();
        let shape = self.src_shape(input).to_vec();
        let ng = self.src_needs_grad(input);
        self.push(Op::Sigmoid { input }, Tensor { shape, data: out, requires_grad: false, grad: None }, ng)
    }

    pub fn softmax(&mut self, input: NodeId) -> Result<NodeId> {
        let input = self.src(input);
        let x = self.src_data(input);
        if x.is_empty() {
            return Err(Error::shape("softmax", "empty input"));
        }
        let out = softmax_stable(x);
        let shape = self.src_shape(input).to_vec();
        let ng = self.src_needs_grad(input);
        Ok(self.push(Op::Softmax { input }, Tensor { shape, data: out, requires_grad: false, grad: None }, ng))
    }

    pub fn entropy(&mut self, probs: NodeId) -> NodeId {
        let probs = self.src(probs);
        let h: f32 = self
            .src_data(probs)
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum();
        let ng = self.src_needs_grad(probs);
        self.push(Op::Entropy { probs }, Tensor::scalar(h), ng)
    }

    pub fn log_index(&mut self, probs: NodeId, index: usize) -> Result<NodeId> {
        let probs = self.src(probs);
        let p = self.src_data(probs);
        if index >= p.len() {
            return Err(Error::shape(
                "log_index",
                format!("index {index} out of {}", p.len()),
            ));
        }
        let v = p[index].ln();
        let ng = self.src_needs_grad(probs);
        Ok(self.push(Op::LogIndex { probs, index }, Tensor::scalar(v), ng))
    }

    pub fn index(&mut self, input: NodeId, index: usize) -> Result<NodeId> {
        let input = self.src(input);
        let x = self.src_data(input);
        if index >= x.len() {
            return Err(Error::shape(
                "index",
                format!("index {index} out of {}", x.len()),
            ));
        }
        let v = x[index];
        let ng = self.src_needs_grad(input);
        Ok(self.push(Op::Index { input, index }, Tensor::scalar(v), ng))
    }

    pub fn square(&mut self, input: NodeId) -> NodeId {
        let input = self.src(input);
        let out: Vec<f32> = self.src_data(input).iter().map(|x| x * x).collect();
        let shape = self.src_shape(input).to_vec();
        let ng = self.src_needs_grad(input);
        self.push(Op::Square { input }, Tensor { shape, data: out, requires_grad: false, grad: None }, ng)
    }

    pub fn scale(&mut self, input: NodeId, factor: f32) -> NodeId {
        let input = self.src(input);
        let out: Vec<f32> = self.src_data(input).iter().map(|x| x * factor).collect();
        let shape = self.src_shape(input).to_vec();
        let ng = self.src_needs_grad(input);
        self.push(Op::Scale { input, factor }, Tensor { shape, data: out, requires_grad: false, grad: None }, ng)
    }

    pub fn add_scalar(&mut self, input: NodeId, offset: f32) -> NodeId {
        let input = self.src(input);
        let out: Vec<f32> = self.src_data(input).iter().map(|x| x + offset).collect();
        let shape = self.src_shape(input).to_vec();
        let ng = self.src_needs_grad(input);
        self.push(Op::AddScalar { input }, Tensor { shape, data: out, requires_grad: false, grad: None }, ng)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (a, b) = (self.src(a), self.src(b));
        if self.src_shape(a) != self.src_shape(b) {
            return Err(Error::shape(
                "add",
                format!("{:?} vs {:?}", self.src_shape(a), self.src_shape(b)),
            ));
        }
        let out: Vec<f32> = self
            .src_data(a)
            .iter()
            .zip(self.src_data(b))
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.src_shape(a).to_vec();
        let ng = self.src_needs_grad(a) || self.src_needs_grad(b);
        Ok(self.push(Op::Add { a, b }, Tensor { shape, data: out, requires_grad: false, grad: None }, ng))
    }

    pub fn flatten(&mut self, input: NodeId) -> NodeId {
        let input = self.src(input);
        let out = self.src_data(input).to_vec();
        let n = out.len();
        let ng = self.src_needs_grad(input);
        self.push(Op::Flatten { input }, Tensor { shape: vec![n], data: out, requires_grad: false, grad: None }, ng)
    }

    pub fn bce_with_logits(
        &mut self,
        logits: NodeId,
        target: &[f32],
        mode: LossMode,
    ) -> Result<NodeId> {
        let logits = self.src(logits);
        let x = self.src_data(logits);
        if x.len() != target.len() {
            return Err(Error::shape(
                "bce_with_logits",
                format!("{} logits vs {} targets", x.len(), target.len()),
            ));
        }
        let loss = bce_with_logits_value(x, target, mode);
        let ng = self.src_needs_grad(logits);
        Ok(self.push(
            Op::BceWithLogits {
                logits,
                target: target.to_vec(),
                mode,
            },
            Tensor::scalar(loss),
            ng,
        ))
    }

    // ---- backward ----

    /// Reverse sweep from a scalar loss node. Parameter gradients are
    /// accumulated into `grads`; node gradients stay readable on the graph
    /// until the next backward call.
    pub fn backward(&mut self, loss: NodeId, grads: &mut GradBuffer) -> Result<()> {
        if self.nodes[loss.0].value.numel() != 1 {
            return Err(Error::contract(
                "backward",
                format!(
                    "loss must be scalar, got shape {:?}",
                    self.nodes[loss.0].value.shape()
                ),
            ));
        }
        for n in &mut self.nodes {
            n.grad = None;
        }
        self.nodes[loss.0].grad = Some(vec![1.0]);

        for i in (0..self.nodes.len()).rev() {
            if self.nodes[i].grad.is_none() || !self.nodes[i].needs_grad {
                continue;
            }
            let gout = self.nodes[i].grad.take().unwrap();
            let op = self.nodes[i].op.clone();
            self.propagate(&op, &gout, grads);
            self.nodes[i].grad = Some(gout);
        }
        Ok(())
    }

    fn add_to_src(&mut self, s: Src, contrib: &[f32], grads: &mut GradBuffer) {
        match s {
            Src::Node(i) => {
                if !self.nodes[i].needs_grad {
                    return;
                }
                let slot = self.nodes[i]
                    .grad
                    .get_or_insert_with(|| vec![0.0; contrib.len()]);
                for (g, c) in slot.iter_mut().zip(contrib) {
                    *g += *c;
                }
            }
            Src::Param(p) => {
                let slot = grads.slot_mut(p);
                for (g, c) in slot.iter_mut().zip(contrib) {
                    *g += *c;
                }
            }
        }
    }

    fn propagate(&mut self, op: &Op, gout: &[f32], grads: &mut GradBuffer) {
        match op {
            Op::Const => {}
            Op::Flatten { input } => {
                if self.src_needs_grad(*input) {
                    self.add_to_src(*input, gout, grads);
                }
            }
            Op::Conv2d {
                input,
                kernels,
                stride,
            } => {
                let ishape = self.src_shape(*input).to_vec();
                let kshape = self.src_shape(*kernels).to_vec();
                let (ci, h, w) = (ishape[0], ishape[1], ishape[2]);
                let (co, kh, kw) = (kshape[0], kshape[2], kshape[3]);
                let oh = (h - kh) / stride + 1;
                let ow = (w - kw) / stride + 1;
                let need_in = self.src_needs_grad(*input);
                let need_k = self.src_needs_grad(*kernels);
                let mut gin = if need_in { vec![0.0f32; ci * h * w] } else { Vec::new() };
                let mut gk = if need_k {
                    vec![0.0f32; co * ci * kh * kw]
                } else {
                    Vec::new()
                };
                {
                    let x = self.src_data(*input);
                    let k = self.src_data(*kernels);
                    conv2d_backward(
                        x, k, gout, &mut gin, &mut gk, ci, h, w, co, kh, kw, *stride, oh, ow,
                        need_in, need_k,
                    );
                }
                if need_in {
                    self.add_to_src(*input, &gin, grads);
                }
                if need_k {
                    self.add_to_src(*kernels, &gk, grads);
                }
            }
            Op::BiasChannel { input, bias } => {
                if self.src_needs_grad(*input) {
                    self.add_to_src(*input, gout, grads);
                }
                if self.src_needs_grad(*bias) {
                    let c = self.src_shape(*bias)[0];
                    let plane = gout.len() / c;
                    let gb: Vec<f32> = (0..c)
                        .map(|i| gout[i * plane..(i + 1) * plane].iter().sum())
                        .collect();
                    self.add_to_src(*bias, &gb, grads);
                }
            }
            Op::Dense {
                input,
                weights,
                bias,
            } => {
                let n = self.src_shape(*input)[0];
                let m = gout.len();
                if self.src_needs_grad(*weights) {
                    let x = self.src_data(*input);
                    let mut gw = vec![0.0f32; m * n];
                    for i in 0..m {
                        let g = gout[i];
                        if g != 0.0 {
                            let row = &mut gw[i * n..(i + 1) * n];
                            for (r, xv) in row.iter_mut().zip(x) {
                                *r = g * xv;
                            }
                        }
                    }
                    self.add_to_src(*weights, &gw, grads);
                }
                if self.src_needs_grad(*bias) {
                    self.add_to_src(*bias, gout, grads);
                }
                if self.src_needs_grad(*input) {
                    let w = self.src_data(*weights);
                    let mut gx = vec![0.0f32; n];
                    for i in 0..m {
                        let g = gout[i];
                        if g != 0.0 {
                            let row = &w[i * n..(i + 1) * n];
                            for (gv, wv) in gx.iter_mut().zip(row) {
                                *gv += g * wv;
                            }
                        }
                    }
                    self.add_to_src(*input, &gx, grads);
                }
            }
            Op::Relu { input } => {
                let gin: Vec<f32> = self
                    .src_data(*input)
                    .iter()
                    .zip(gout)
                    .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
                    .collect();
                self.add_to_src(*input, &gin, grads);
            }
            Op::Sigmoid { input } => {
                // y(1-y) from the forward output
                let y: Vec<f32> = self.src_data(*input).iter().map(|&x| stable_sigmoid(x)).collect();
                let gin: Vec<f32> = y.iter().zip(gout).map(|(&y, &g)| g * y * (1.0 - y)).collect();
                self.add_to_src(*input, &gin, grads);
            }
            Op::Softmax { input } => {
                let p = softmax_stable(self.src_data(*input));
                let dot: f32 = p.iter().zip(gout).map(|(a, b)| a * b).sum();
                let gin: Vec<f32> = p.iter().zip(gout).map(|(&pi, &gi)| pi * (gi - dot)).collect();
                self.add_to_src(*input, &gin, grads);
            }
            Op::Entropy { probs } => {
                let g = gout[0];
                let gin: Vec<f32> = self
                    .src_data(*probs)
                    .iter()
                    .map(|&p| if p > 0.0 { -g * (p.ln() + 1.0) } else { 0.0 })
                    .collect();
                self.add_to_src(*probs, &gin, grads);
            }
            Op::LogIndex { probs, index } => {
                let p = self.src_data(*probs);
                let mut gin = vec![0.0f32; p.len()];
                gin[*index] = gout[0] / p[*index];
                self.add_to_src(*probs, &gin, grads);
            }
            Op::Index { input, index } => {
                let n = self.src_data(*input).len();
                let mut gin = vec![0.0f32; n];
                gin[*index] = gout[0];
                self.add_to_src(*input, &gin, grads);
            }
            Op::Square { input } => {
                let gin: Vec<f32> = self
                    .src_data(*input)
                    .iter()
                    .zip(gout)
                    .map(|(&x, &g)| 2.0 * x * g)
                    .collect();
                self.add_to_src(*input, &gin, grads);
            }
            Op::Scale { input, factor } => {
                let gin: Vec<f32> = gout.iter().map(|g| g * factor).collect();
                self.add_to_src(*input, &gin, grads);
            }
            Op::AddScalar { input } => {
                self.add_to_src(*input, gout, grads);
            }
            Op::Add { a, b } => {
                if self.src_needs_grad(*a) {
                    self.add_to_src(*a, gout, grads);
                }
                if self.src_needs_grad(*b) {
                    self.add_to_src(*b, gout, grads);
                }
            }
            Op::BceWithLogits {
                logits,
                target,
                mode,
            } => {
                let g = gout[0];
                let x = self.src_data(*logits);
                let gin: Vec<f32> = x
                    .iter()
                    .zip(target)
                    .map(|(&xi, &yi)| match mode {
                        LossMode::Full => g * (stable_sigmoid(xi) - yi),
                        LossMode::PaperLiteral => g * yi * (stable_sigmoid(xi) - 1.0),
                    })
                    .collect();
                self.add_to_src(*logits, &gin, grads);
            }
        }
    }
}

// ---- shared kernels ----

pub(crate) fn stable_sigmoid(x: f32) -> f32 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax_stable(x: &[f32]) -> Vec<f32> {
    let max = x.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
    let exps: Vec<f32> = x.iter().map(|&v| (v - max).exp()).collect();
    let sum: f32 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// ln(1 + e^t) without overflow.
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Forward value of binary cross entropy with logits, in f64 for the
/// closed-form unit fixtures.
pub fn bce_with_logits_value(logits: &[f32], target: &[f32], mode: LossMode) -> f32 {
    let mut loss = 0.0f64;
    for (&x, &y) in logits.iter().zip(target) {
        let (x, y) = (x as f64, y as f64);
        match mode {
            // max(x,0) - x*y + ln(1 + e^-|x|)
            LossMode::Full => loss += x.max(0.0) - x * y + (-x.abs()).exp().ln_1p(),
            // -y * ln sigmoid(x) = y * softplus(-x)
            LossMode::PaperLiteral => loss += y * softplus(-x),
        }
    }
    loss as f32
}

#[allow(clippy::too_many_arguments)]
fn conv2d_forward(
    x: &[f32],
    k: &[f32],
    out: &mut [f32],
    ci: usize,
    h: usize,
    w: usize,
    co: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    oh: usize,
    ow: usize,
) {
    let kplane = kh * kw;
    for o in 0..co {
        let kbase = o * ci * kplane;
        let obase = o * oh * ow;
        for oy in 0..oh {
            let iy0 = oy * stride;
            for ox in 0..ow {
                let ix0 = ox * stride;
                let mut acc = 0.0f32;
                for c in 0..ci {
                    let kc = &k[kbase + c * kplane..kbase + (c + 1) * kplane];
                    let cbase = c * h * w;
                    for ky in 0..kh {
                        let row = &x[cbase + (iy0 + ky) * w + ix0..cbase + (iy0 + ky) * w + ix0 + kw];
                        let krow = &kc[ky * kw..(ky + 1) * kw];
                        for (xv, kv) in row.iter().zip(krow) {
                            acc += xv * kv;
                        }
                    }
                }
                out[obase + oy * ow + ox] = acc;
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn conv2d_backward(
    x: &[f32],
    k: &[f32],
    gout: &[f32],
    gin: &mut [f32],
    gk: &mut [f32],
    ci: usize,
    h: usize,
    w: usize,
    co: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    oh: usize,
    ow: usize,
    need_in: bool,
    need_k: bool,
) {
    let kplane = kh * kw;
    for o in 0..co {
        let kbase = o * ci * kplane;
        let obase = o * oh * ow;
        for oy in 0..oh {
            let iy0 = oy * stride;
            for ox in 0..ow {
                let g = gout[obase + oy * ow + ox];
                if g == 0.0 {
                    continue;
                }
                let ix0 = ox * stride;
                for c in 0..ci {
                    let cbase = c * h * w;
                    let kc = kbase + c * kplane;
                    for ky in 0..kh {
                        let xoff = cbase + (iy0 + ky) * w + ix0;
                        let koff = kc + ky * kw;
                        if need_k {
                            let xrow = &x[xoff..xoff + kw];
                            let gkrow = &mut gk[koff..koff + kw];
                            for (gkv, xv) in gkrow.iter_mut().zip(xrow) {
                                *gkv += g * xv;
                            }
                        }
                        if need_in {
                            let krow = &k[koff..koff + kw];
                            let ginrow = &mut gin[xoff..xoff + kw];
                            for (gv, kv) in ginrow.iter_mut().zip(krow) {
                                *gv += g * kv;
                            }
                        }
                    }
                }
            }
        }
    }
}
