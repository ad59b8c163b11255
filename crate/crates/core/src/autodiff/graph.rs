use super::conv::{
    conv1d_backward, conv1d_forward, tconv1d_backward, tconv1d_forward, ConvGeometry, TConvGeometry,
};
use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Handle to a node recorded on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Identifies a parameter inside a parameter store: `store` tags which
/// store (generator, discriminator, ...) and `index` is the slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamRef {
    pub store: u32,
    pub index: usize,
}

#[derive(Debug)]
enum Op<T> {
    Leaf { param: Option<ParamRef> },
    Conv1d { x: Var, w: Var, b: Option<Var>, geom: ConvGeometry },
    TConv1d { x: Var, w: Var, b: Option<Var>, geom: TConvGeometry },
    ReflectPad { x: Var, left: usize },
    ChannelSoftmax(Var),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    PRelu { x: Var, slope: Var },
    LeakyRelu { x: Var, slope: T },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Concat(Var, Var),
    Scale(Var, T),
    AddScalar(Var, T),
    AbsMean(Var),
    Mean(Var),
    SpectralNorm { w: Var, u: Vec<T>, v: Vec<T>, sigma: T, floored: bool },
}

impl<T> Op<T> {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf { param: Some(_) } => "param",
            Op::Leaf { param: None } => "input",
            Op::Conv1d { .. } => "conv1d",
            Op::TConv1d { .. } => "tconv1d",
            Op::ReflectPad { .. } => "reflect_pad",
            Op::ChannelSoftmax(_) => "channel_softmax",
            Op::Tanh(_) => "tanh",
            Op::Sigmoid(_) => "sigmoid",
            Op::Relu(_) => "relu",
            Op::PRelu { .. } => "prelu",
            Op::LeakyRelu { .. } => "leaky_relu",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Concat(..) => "concat_channels",
            Op::Scale(..) => "scale",
            Op::AddScalar(..) => "add_scalar",
            Op::AbsMean(_) => "abs_mean",
            Op::Mean(_) => "mean",
            Op::SpectralNorm { .. } => "spectral_norm",
        }
    }
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
    label: Option<String>,
}

/// Define-by-run tape. Nodes are appended in evaluation order, so the
/// node vector is already a topological order and backward simply walks it
/// in reverse.
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
    check_finite: bool,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Graph<T> {
    /// Empty tape. Also switches the calling thread to flush-to-zero, see
    /// [`flush_subnormals`](super::flush_subnormals).
    pub fn new() -> Self {
        super::flush_subnormals();
        Self {
            nodes: Vec::new(),
            check_finite: cfg!(debug_assertions),
        }
    }

    /// Enables or disables the per-op NaN/Inf check.
    pub fn with_finite_checks(mut self, on: bool) -> Self {
        self.check_finite = on;
        self
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

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Attaches a human-readable label used in non-finite diagnostics.
    pub fn label(&mut self, v: Var, label: impl Into<String>) {
        self.nodes[v.0].label = Some(label.into());
    }

    pub fn describe(&self, v: Var) -> String {
        let n = &self.nodes[v.0];
        let (c, l) = n.value.shape();
        match &n.label {
            Some(lbl) => format!("{lbl} ({} #{}, {c}x{l})", n.op.name(), v.0),
            None => format!("{} #{} ({c}x{l})", n.op.name(), v.0),
        }
    }

    /// First node (in evaluation order) holding a NaN or infinity.
    pub fn first_non_finite(&self) -> Option<String> {
        (0..self.nodes.len())
            .find(|&i| !self.nodes[i].value.is_finite())
            .map(|i| self.describe(Var(i)))
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, inputs: &[Var]) -> Result<Var> {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        let id = Var(self.nodes.len());
        let check = self.check_finite && !value.is_finite();
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
            label: None,
        });
        if check {
            return Err(Error::NonFinite(self.describe(id)));
        }
        Ok(id)
    }

    pub fn input(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        let id = Var(self.nodes.len());
        self.nodes.push(Node {
            value,
            op: Op::Leaf { param: None },
            requires_grad,
            label: None,
        });
        id
    }

    /// Records a parameter leaf. Frozen parameters still propagate
    /// gradients to their consumers' other inputs but receive none.
    pub fn param(&mut self, value: Tensor<T>, param: ParamRef, trainable: bool) -> Var {
        let id = Var(self.nodes.len());
        self.nodes.push(Node {
            value,
            op: Op::Leaf { param: Some(param) },
            requires_grad: trainable,
            label: None,
        });
        id
    }

    pub fn conv1d(&mut self, x: Var, w: Var, b: Option<Var>, geom: ConvGeometry) -> Result<Var> {
        let out = conv1d_forward(self.value(x), self.value(w), b.map(|b| self.value(b)), geom)?;
        let mut inputs = vec![x, w];
        inputs.extend(b);
        self.push(out, Op::Conv1d { x, w, b, geom }, &inputs)
    }

    pub fn tconv1d(&mut self, x: Var, w: Var, b: Option<Var>, geom: TConvGeometry) -> Result<Var> {
        let out = tconv1d_forward(self.value(x), self.value(w), b.map(|b| self.value(b)), geom)?;
        let mut inputs = vec![x, w];
        inputs.extend(b);
        self.push(out, Op::TConv1d { x, w, b, geom }, &inputs)
    }

    pub fn reflect_pad(&mut self, x: Var, left: usize, right: usize) -> Result<Var> {
        let src = self.value(x);
        let len = src.length();
        if left >= len || right >= len {
            return Err(Error::shape(format!(
                "reflect pad ({left}, {right}) needs input longer than the pad, got {len}"
            )));
        }
        if left == 0 && right == 0 {
            let out = src.clone();
            return self.push(out, Op::ReflectPad { x, left }, &[x]);
        }
        let out_len = len + left + right;
        let mut out = Tensor::zeros(src.channels(), out_len);
        for c in 0..src.channels() {
            let row = src.row(c);
            let dst = out.row_mut(c);
            for (j, d) in dst.iter_mut().enumerate() {
                *d = row[reflect_index(j, left, len)];
            }
        }
        self.push(out, Op::ReflectPad { x, left }, &[x])
    }

    pub fn channel_softmax(&mut self, x: Var) -> Result<Var> {
        let src = self.value(x);
        let (ch, len) = src.shape();
        let mut out = Tensor::zeros(ch, len);
        let mut max = vec![T::neg_infinity(); len];
        for c in 0..ch {
            for (m, &v) in max.iter_mut().zip(src.row(c)) {
                *m = m.max(v);
            }
        }
        let mut sum = vec![T::zero(); len];
        for c in 0..ch {
            let row = src.row(c);
            let dst = &mut out.data_mut()[c * len..(c + 1) * len];
            for t in 0..len {
                let e = (row[t] - max[t]).exp();
                dst[t] = e;
                sum[t] = sum[t] + e;
            }
        }
        for c in 0..ch {
            for (v, &s) in out.row_mut(c).iter_mut().zip(&sum) {
                *v = *v / s;
            }
        }
        self.push(out, Op::ChannelSoftmax(x), &[x])
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        let out = self.value(x).map(|v| v.tanh());
        self.push(out, Op::Tanh(x), &[x])
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        let out = self.value(x).map(sigmoid);
        self.push(out, Op::Sigmoid(x), &[x])
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        let out = self.value(x).map(|v| v.max(T::zero()));
        self.push(out, Op::Relu(x), &[x])
    }

    /// PReLU with a single learned slope shared across the whole tensor.
    pub fn prelu(&mut self, x: Var, slope: Var) -> Result<Var> {
        if !self.value(slope).is_scalar() {
            return Err(Error::shape("prelu slope must be a single value"));
        }
        let a = self.value(slope).item();
        let out = self.value(x).map(|v| if v > T::zero() { v } else { a * v });
        self.push(out, Op::PRelu { x, slope }, &[x, slope])
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Result<Var> {
        let a = T::from_f64(slope);
        let out = self.value(x).map(|v| if v > T::zero() { v } else { a * v });
        self.push(out, Op::LeakyRelu { x, slope: a }, &[x])
    }

    fn binary(&mut self, a: Var, b: Var, what: &str, f: impl Fn(T, T) -> T) -> Result<Tensor<T>> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(Error::shape(format!(
                "{what}: shapes {:?} and {:?} differ",
                va.shape(),
                vb.shape()
            )));
        }
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::from_vec(va.channels(), va.length(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.binary(a, b, "add", |x, y| x + y)?;
        self.push(out, Op::Add(a, b), &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.binary(a, b, "sub", |x, y| x - y)?;
        self.push(out, Op::Sub(a, b), &[a, b])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.binary(a, b, "mul", |x, y| x * y)?;
        self.push(out, Op::Mul(a, b), &[a, b])
    }

    /// Stacks `b`'s channels below `a`'s.
    pub fn concat_channels(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.length() != vb.length() {
            return Err(Error::shape(format!(
                "concat: lengths {} and {} differ",
                va.length(),
                vb.length()
            )));
        }
        let mut data = Vec::with_capacity(va.len() + vb.len());
        data.extend_from_slice(va.data());
        data.extend_from_slice(vb.data());
        let out = Tensor::from_vec(va.channels() + vb.channels(), va.length(), data)?;
        self.push(out, Op::Concat(a, b), &[a, b])
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var> {
        let c = T::from_f64(c);
        let out = self.value(x).map(|v| v * c);
        self.push(out, Op::Scale(x, c), &[x])
    }

    pub fn add_scalar(&mut self, x: Var, c: f64) -> Result<Var> {
        let c = T::from_f64(c);
        let out = self.value(x).map(|v| v + c);
        self.push(out, Op::AddScalar(x, c), &[x])
    }

    /// Mean of absolute values, as a 1x1 tensor.
    pub fn abs_mean(&mut self, x: Var) -> Result<Var> {
        let src = self.value(x);
        let n = T::from_f64(src.len() as f64);
        let s: T = src.data().iter().map(|v| v.abs()).sum();
        self.push(Tensor::scalar(s / n), Op::AbsMean(x), &[x])
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        let src = self.value(x);
        let n = T::from_f64(src.len() as f64);
        let s: T = src.data().iter().copied().sum();
        self.push(Tensor::scalar(s / n), Op::Mean(x), &[x])
    }

    /// `w / sigma` with `sigma = u^T W v`, where `W` is `w` viewed as a
    /// `channels x length` matrix and `u`, `v` are fixed singular-vector
    /// estimates. Gradients flow through `sigma`'s dependence on `W`.
    pub fn spectral_norm(&mut self, w: Var, u: &[T], v: &[T]) -> Result<Var> {
        let wt = self.value(w);
        if u.len() != wt.channels() || v.len() != wt.length() {
            return Err(Error::shape(format!(
                "spectral norm vectors ({}, {}) do not match weight {:?}",
                u.len(),
                v.len(),
                wt.shape()
            )));
        }
        let raw = bilinear(wt, u, v);
        let floor = T::from_f64(1e-12);
        let floored = raw < floor;
        let sigma = if floored { floor } else { raw };
        let out = wt.map(|x| x / sigma);
        self.push(
            out,
            Op::SpectralNorm {
                w,
                u: u.to_vec(),
                v: v.to_vec(),
                sigma,
                floored,
            },
            &[w],
        )
    }

    /// Reverse pass from a scalar `loss`. Returns gradients for every node
    /// that requires them; parameter gradients are read off the result and
    /// accumulated by the caller.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if self.nodes.is_empty() {
            return Err(Error::invalid("backward on an empty tape"));
        }
        if !self.value(loss).is_scalar() {
            return Err(Error::shape(format!(
                "backward needs a scalar loss, got {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        if !self.nodes[loss.0].requires_grad {
            return Ok(Gradients { grads, params: self.param_leaves() });
        }
        grads[loss.0] = Some(Tensor::scalar(T::one()));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if node.requires_grad {
                self.backprop_node(node, &g, &mut grads);
            }
            grads[i] = Some(g);
        }
        Ok(Gradients {
            grads,
            params: self.param_leaves(),
        })
    }

    /// Every parameter leaf on the tape with its handle, in tape order.
    pub fn bound_params(&self) -> Vec<(ParamRef, Var)> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n.op {
                Op::Leaf { param: Some(p) } => Some((p, Var(i))),
                _ => None,
            })
            .collect()
    }

    fn param_leaves(&self) -> Vec<(ParamRef, usize)> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n.op {
                Op::Leaf { param: Some(p) } if n.requires_grad => Some((p, i)),
                _ => None,
            })
            .collect()
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn backprop_node(&self, node: &Node<T>, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) {
        match &node.op {
            Op::Leaf { .. } => {}
            Op::Conv1d { x, w, b, geom } => {
                let r = conv1d_backward(
                    self.value(*x),
                    self.value(*w),
                    g,
                    *geom,
                    self.needs(*x),
                    self.needs(*w),
                    b.is_some_and(|b| self.needs(b)),
                );
                accumulate_opt(grads, *x, r.input);
                accumulate_opt(grads, *w, r.weight);
                if let Some(b) = b {
                    accumulate_opt(grads, *b, r.bias);
                }
            }
            Op::TConv1d { x, w, b, geom } => {
                let r = tconv1d_backward(
                    self.value(*x),
                    self.value(*w),
                    g,
                    *geom,
                    self.needs(*x),
                    self.needs(*w),
                    b.is_some_and(|b| self.needs(b)),
                );
                accumulate_opt(grads, *x, r.input);
                accumulate_opt(grads, *w, r.weight);
                if let Some(b) = b {
                    accumulate_opt(grads, *b, r.bias);
                }
            }
            Op::ReflectPad { x, left, .. } => {
                let src = self.value(*x);
                let len = src.length();
                let mut dx = Tensor::zeros(src.channels(), len);
                for c in 0..src.channels() {
                    let gr = g.row(c);
                    let dst = dx.row_mut(c);
                    for (j, &gv) in gr.iter().enumerate() {
                        let s = reflect_index(j, *left, len);
                        dst[s] = dst[s] + gv;
                    }
                }
                accumulate(grads, *x, dx);
            }
            Op::ChannelSoftmax(x) => {
                let y = &node.value;
                let (ch, len) = y.shape();
                let mut dot = vec![T::zero(); len];
                for c in 0..ch {
                    for ((d, &gv), &yv) in dot.iter_mut().zip(g.row(c)).zip(y.row(c)) {
                        *d = *d + gv * yv;
                    }
                }
                let mut dx = Tensor::zeros(ch, len);
                for c in 0..ch {
                    let (gr, yr) = (g.row(c), y.row(c));
                    for (t, d) in dx.row_mut(c).iter_mut().enumerate() {
                        *d = yr[t] * (gr[t] - dot[t]);
                    }
                }
                accumulate(grads, *x, dx);
            }
            Op::Tanh(x) => {
                let dx = zip_map(g, &node.value, |gv, y| gv * (T::one() - y * y));
                accumulate(grads, *x, dx);
            }
            Op::Sigmoid(x) => {
                let dx = zip_map(g, &node.value, |gv, y| gv * y * (T::one() - y));
                accumulate(grads, *x, dx);
            }
            Op::Relu(x) => {
                let dx = zip_map(g, self.value(*x), |gv, xv| if xv > T::zero() { gv } else { T::zero() });
                accumulate(grads, *x, dx);
            }
            Op::PRelu { x, slope } => {
                let a = self.value(*slope).item();
                let xv = self.value(*x);
                if self.needs(*x) {
                    let dx = zip_map(g, xv, |gv, v| if v > T::zero() { gv } else { a * gv });
                    accumulate(grads, *x, dx);
                }
                if self.needs(*slope) {
                    let da: T = g
                        .data()
                        .iter()
                        .zip(xv.data())
                        .filter(|(_, &v)| v <= T::zero())
                        .map(|(&gv, &v)| gv * v)
                        .sum();
                    accumulate(grads, *slope, Tensor::scalar(da));
                }
            }
            Op::LeakyRelu { x, slope } => {
                let a = *slope;
                let dx = zip_map(g, self.value(*x), |gv, v| if v > T::zero() { gv } else { a * gv });
                accumulate(grads, *x, dx);
            }
            Op::Add(a, b) => {
                if self.needs(*a) {
                    accumulate(grads, *a, g.clone());
                }
                if self.needs(*b) {
                    accumulate(grads, *b, g.clone());
                }
            }
            Op::Sub(a, b) => {
                if self.needs(*a) {
                    accumulate(grads, *a, g.clone());
                }
                if self.needs(*b) {
                    accumulate(grads, *b, g.map(|v| -v));
                }
            }
            Op::Mul(a, b) => {
                if self.needs(*a) {
                    accumulate(grads, *a, zip_map(g, self.value(*b), |gv, bv| gv * bv));
                }
                if self.needs(*b) {
                    accumulate(grads, *b, zip_map(g, self.value(*a), |gv, av| gv * av));
                }
            }
            Op::Concat(a, b) => {
                let split = self.value(*a).len();
                let len = g.length();
                if self.needs(*a) {
                    let ga = Tensor::from_vec(split / len, len, g.data()[..split].to_vec()).expect("concat split");
                    accumulate(grads, *a, ga);
                }
                if self.needs(*b) {
                    let rest = g.data()[split..].to_vec();
                    let gb = Tensor::from_vec(rest.len() / len, len, rest).expect("concat split");
                    accumulate(grads, *b, gb);
                }
            }
            Op::Scale(x, c) => {
                let c = *c;
                accumulate(grads, *x, g.map(|v| v * c));
            }
            Op::AddScalar(x, _) => accumulate(grads, *x, g.clone()),
            Op::AbsMean(x) => {
                let src = self.value(*x);
                let scale = g.item() / T::from_f64(src.len() as f64);
                let dx = src.map(|v| {
                    if v > T::zero() {
                        scale
                    } else if v < T::zero() {
                        -scale
                    } else {
                        T::zero()
                    }
                });
                accumulate(grads, *x, dx);
            }
            Op::Mean(x) => {
                let src = self.value(*x);
                let gv = g.item() / T::from_f64(src.len() as f64);
                let mut dx = Tensor::zeros(src.channels(), src.length());
                dx.fill(gv);
                accumulate(grads, *x, dx);
            }
            Op::SpectralNorm { w, u, v, sigma, floored } => {
                let sigma = *sigma;
                let mut dw = g.map(|gv| gv / sigma);
                if !floored {
                    // d(W/s)/dW contracted with G: G/s - <G, W/s>/s * u v^T
                    let coeff = g.dot(&node.value) / sigma;
                    let cols = v.len();
                    for (r, &ur) in u.iter().enumerate() {
                        let row = &mut dw.data_mut()[r * cols..(r + 1) * cols];
                        for (d, &vc) in row.iter_mut().zip(v) {
                            *d = *d - coeff * ur * vc;
                        }
                    }
                }
                accumulate(grads, *w, dw);
            }
        }
    }
}

/// Gradients produced by [`Graph::backward`].
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
    params: Vec<(ParamRef, usize)>,
}

impl<T: Scalar> Gradients<T> {
    pub fn wrt(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradients of every trainable parameter leaf, in tape order.
    pub fn params(&self) -> impl Iterator<Item = (ParamRef, &Tensor<T>)> {
        self.params
            .iter()
            .filter_map(|&(p, i)| self.grads[i].as_ref().map(|g| (p, g)))
    }
}

fn sigmoid<T: Scalar>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

/// Source index for position `j` of a reflect-padded row of length `len`.
fn reflect_index(j: usize, left: usize, len: usize) -> usize {
    let p = j as isize - left as isize;
    let last = len as isize - 1;
    let s = if p < 0 {
        -p
    } else if p > last {
        2 * last - p
    } else {
        p
    };
    s as usize
}

fn bilinear<T: Scalar>(w: &Tensor<T>, u: &[T], v: &[T]) -> T {
    (0..w.channels())
        .map(|r| {
            let rv: T = w.row(r).iter().zip(v).map(|(&a, &b)| a * b).sum();
            u[r] * rv
        })
        .sum()
}

fn zip_map<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::from_vec(a.channels(), a.length(), data).expect("same shape")
}

fn accumulate<T: Scalar>(grads: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

fn accumulate_opt<T: Scalar>(grads: &mut [Option<Tensor<T>>], v: Var, g: Option<Tensor<T>>) {
    if let Some(g) = g {
        accumulate(grads, v, g);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(ch: usize, v: &[f64]) -> Tensor<f64> {
        Tensor::from_vec(ch, v.len() / ch, v.to_vec()).unwrap()
    }

    #[test]
    fn reflect_pad_mirrors_without_repeating_edge() {
        let mut g = Graph::<f64>::new();
        let x = g.input(t(1, &[1., 2., 3.]), true);
        let y = g.reflect_pad(x, 2, 2).unwrap();
        assert_eq!(g.value(y).data(), &[3., 2., 1., 2., 3., 2., 1.]);
        let id = g.reflect_pad(x, 0, 0).unwrap();
        assert_eq!(g.value(id).data(), &[1., 2., 3.]);
        assert!(g.reflect_pad(x, 3, 0).is_err());
    }

    #[test]
    fn reflect_pad_gradient_folds_back() {
        let mut g = Graph::<f64>::new();
        let x = g.input(t(1, &[1., 2., 3.]), true);
        let y = g.reflect_pad(x, 2, 2).unwrap();
        let s = g.mean(y).unwrap();
        let s = g.scale(s, 7.0).unwrap();
        let grads = g.backward(s).unwrap();
        // padded = [3,2,1,2,3,2,1]: sample "2" appears 3 times
        assert_eq!(grads.wrt(x).unwrap().data(), &[2.0, 3.0, 2.0]);
    }

    #[test]
    fn softmax_columns() {
        let mut g = Graph::<f64>::new();
        let x = g.input(t(2, &[0.0, 1.0, 3f64.ln(), 1.0]), false);
        let y = g.channel_softmax(x).unwrap();
        let v = g.value(y);
        assert!((v.get(0, 0) - 0.25).abs() < 1e-15);
        assert!((v.get(1, 0) - 0.75).abs() < 1e-15);
        assert!((v.get(0, 1) - 0.5).abs() < 1e-15);

        let one = g.input(t(1, &[5.0, -3.0]), false);
        let y = g.channel_softmax(one).unwrap();
        assert_eq!(g.value(y).data(), &[1.0, 1.0]);
    }

    #[test]
    fn pointwise_examples() {
        let mut g = Graph::<f64>::new();
        let x = g.input(t(1, &[-2.0]), true);
        let a = g.input(Tensor::scalar(0.25), true);
        let y = g.prelu(x, a).unwrap();
        assert_eq!(g.value(y).item(), -0.5);
        let m = g.input(t(1, &[-1.0]), true);
        let y = g.leaky_relu(m, 0.2).unwrap();
        assert!((g.value(y).item() + 0.2).abs() < 1e-15);

        let a = g.input(Tensor::zeros(32, 2000), false);
        let b = g.input(Tensor::zeros(32, 2000), false);
        let c = g.concat_channels(a, b).unwrap();
        assert_eq!(g.shape(c), (64, 2000));
        let short = g.input(Tensor::zeros(32, 10), false);
        assert!(g.add(a, short).is_err());
        assert!(g.mul(a, short).is_err());
    }

    #[test]
    fn tanh_gradient_at_zero() {
        let mut g = Graph::<f64>::new();
        let x = g.input(Tensor::scalar(0.0), true);
        let y = g.tanh(x).unwrap();
        let grads = g.backward(y).unwrap();
        assert_eq!(grads.wrt(x).unwrap().item(), 1.0);
    }

    #[test]
    fn backward_errors() {
        let g = Graph::<f64>::new();
        assert!(g.backward(Var(0)).is_err());
        let mut g = Graph::<f64>::new();
        let x = g.input(t(1, &[1.0, 2.0]), true);
        assert!(g.backward(x).is_err());
    }

    #[test]
    fn non_finite_values_are_reported_with_op_name() {
        let mut g = Graph::<f64>::new().with_finite_checks(true);
        let x = g.input(t(1, &[f64::MAX, 1.0]), false);
        let err = g.scale(x, 10.0).unwrap_err();
        assert!(err.to_string().contains("scale"), "{err}");
    }

    #[test]
    fn frozen_params_get_no_gradient_but_pass_it_on() {
        let mut g = Graph::<f64>::new();
        let x = g.input(t(1, &[1.0, 2.0, 3.0]), true);
        let w = g.param(t(1, &[2.0]), ParamRef { store: 0, index: 0 }, false);
        let geom = ConvGeometry { kernel: 1, stride: 1, pad_left: 0, pad_right: 0 };
        let y = g.conv1d(x, w, None, geom).unwrap();
        let l = g.mean(y).unwrap();
        let grads = g.backward(l).unwrap();
        assert!(grads.wrt(w).is_none());
        assert_eq!(grads.params().count(), 0);
        let dx = grads.wrt(x).unwrap();
        assert!((dx.data()[0] - 2.0 / 3.0).abs() < 1e-15);
    }
}
