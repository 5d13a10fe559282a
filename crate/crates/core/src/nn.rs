//! Dense multilayer perceptrons with exact first and second order gradients.
//!
//! A layer computes `z = a W + b` followed by an elementwise activation, with
//! `W` stored `n_in x n_out` row-major and inputs batched over rows.

use crate::error::{Error, Result};
use crate::scalar::Real;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Norms below this are treated as this value when differentiating `‖v‖`.
pub const NORM_EPS: f64 = 1e-12;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{rows}x{cols} tensor needs {} values, got {}", rows * cols, data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Shape(format!("row {i} has {} values, expected {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::Shape(format!("vstack: {} vs {} columns", self.cols, other.cols)));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self { rows: self.rows + other.rows, cols: self.cols, data })
    }

    /// Concatenates columns of two tensors with the same row count.
    pub fn hstack(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::Shape(format!("hstack: {} vs {} rows", self.rows, other.rows)));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Self { rows: self.rows, cols, data })
    }

    /// Columns `start..end`.
    pub fn slice_cols(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.cols);
        let mut data = Vec::with_capacity(self.rows * (end - start));
        for i in 0..self.rows {
            data.extend_from_slice(&self.row(i)[start..end]);
        }
        Self { rows: self.rows, cols: end - start, data }
    }

    /// Rows `start..end`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.rows);
        Self { rows: end - start, cols: self.cols, data: self.data[start * self.cols..end * self.cols].to_vec() }
    }

    /// `self · other`, optionally transposing either operand.
    fn matmul(&self, ta: bool, other: &Self, tb: bool) -> Self {
        let (m, k) = if ta { (self.cols, self.rows) } else { (self.rows, self.cols) };
        let (k2, n) = if tb { (other.cols, other.rows) } else { (other.rows, other.cols) };
        assert_eq!(k, k2, "matmul inner dimensions");
        let mut out = Self::zeros(m, n);
        T::gemm(m, k, n, T::one(), &self.data, ta, &other.data, tb, T::zero(), &mut out.data);
        out
    }

    /// Element-wise conversion to another scalar type (rounding to nearest).
    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| U::lit(v.to_f64().unwrap_or(f64::NAN))).collect() }
    }

    /// `self += otherᵀ-aware product`, used for gradient accumulation.
    fn add_matmul(&mut self, a: &Self, ta: bool, b: &Self, tb: bool) {
        let (m, k) = if ta { (a.cols, a.rows) } else { (a.rows, a.cols) };
        let n = if tb { b.rows } else { b.cols };
        assert_eq!((m, n), (self.rows, self.cols), "accumulation shape");
        T::gemm(m, k, n, T::one(), &a.data, ta, &b.data, tb, T::one(), &mut self.data);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HiddenActivation {
    /// `max(z, slope·z)`. The derivative at `z = 0` is taken as `slope`.
    LeakyRelu { slope: f64 },
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Identity,
    Sigmoid,
}

/// Layer widths and activations of a perceptron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_widths: Vec<usize>,
    pub hidden: HiddenActivation,
    pub output: OutputActivation,
}

impl MlpSpec {
    pub fn new(layer_widths: Vec<usize>, hidden: HiddenActivation, output: OutputActivation) -> Result<Self> {
        let s = Self { layer_widths, hidden, output };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 {
            return Err(Error::Config("a perceptron needs at least two layer widths".into()));
        }
        if self.layer_widths.contains(&0) {
            return Err(Error::Config(format!("layer widths must be positive: {:?}", self.layer_widths)));
        }
        if let HiddenActivation::LeakyRelu { slope } = self.hidden {
            if !(slope > 0.0 && slope < 1.0) {
                return Err(Error::Config(format!("leaky ReLU slope must lie in (0, 1), got {slope}")));
            }
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_widths.last().expect("validated")
    }

    pub fn n_layers(&self) -> usize {
        self.layer_widths.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.layer_widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn activation<T: Real>(&self, layer: usize) -> Act<T> {
        if layer + 1 == self.n_layers() {
            match self.output {
                OutputActivation::Identity => Act::Identity,
                OutputActivation::Sigmoid => Act::Sigmoid,
            }
        } else {
            match self.hidden {
                HiddenActivation::LeakyRelu { slope } => Act::LeakyRelu(T::lit(slope)),
                HiddenActivation::Tanh => Act::Tanh,
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Act<T> {
    LeakyRelu(T),
    Tanh,
    Identity,
    Sigmoid,
}

impl<T: Real> Act<T> {
    fn apply(self, z: T) -> T {
        match self {
            Act::LeakyRelu(s) => {
                if z > T::zero() {
                    z
                } else {
                    s * z
                }
            }
            Act::Tanh => z.tanh(),
            Act::Identity => z,
            Act::Sigmoid => {
                if z >= T::zero() {
                    T::one() / (T::one() + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (T::one() + e)
                }
            }
        }
    }

    /// First derivative given pre-activation `z` and output `a`.
    fn d1(self, z: T, a: T) -> T {
        match self {
            Act::LeakyRelu(s) => {
                if z > T::zero() {
                    T::one()
                } else {
                    s
                }
            }
            Act::Tanh => T::one() - a * a,
            Act::Identity => T::one(),
            Act::Sigmoid => a * (T::one() - a),
        }
    }

    /// Second derivative given pre-activation `z` and output `a`.
    fn d2(self, _z: T, a: T) -> T {
        match self {
            Act::LeakyRelu(_) | Act::Identity => T::zero(),
            Act::Tanh => -(a + a) * (T::one() - a * a),
            Act::Sigmoid => a * (T::one() - a) * (T::one() - (a + a)),
        }
    }

    fn is_piecewise_linear(self) -> bool {
        matches!(self, Act::LeakyRelu(_) | Act::Identity)
    }
}

/// Weights (`n_in x n_out`) and biases of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub w: Tensor<T>,
    pub b: Vec<T>,
}

/// Parameters of a perceptron together with its spec.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams<T> {
    pub spec: MlpSpec,
    pub layers: Vec<Layer<T>>,
}

impl<T: Real> MlpParams<T> {
    pub fn zeros(spec: &MlpSpec) -> Self {
        let layers = spec
            .layer_widths
            .windows(2)
            .map(|w| Layer { w: Tensor::zeros(w[0], w[1]), b: vec![T::zero(); w[1]] })
            .collect();
        Self { spec: spec.clone(), layers }
    }

    /// Element-wise conversion to another scalar type (rounding to nearest).
    pub fn cast<U: Real>(&self) -> MlpParams<U> {
        let layers = self
            .layers
            .iter()
            .map(|l| Layer { w: l.w.cast(), b: l.b.iter().map(|&v| U::lit(v.to_f64().unwrap_or(f64::NAN))).collect() })
            .collect();
        MlpParams { spec: self.spec.clone(), layers }
    }

    /// Builds parameters from flat tensors in storage order (`W1, b1, W2, ...`).
    pub fn from_flat_tensors(spec: &MlpSpec, tensors: Vec<Vec<T>>) -> Result<Self> {
        spec.validate()?;
        if tensors.len() != 2 * spec.n_layers() {
            return Err(Error::Shape(format!("expected {} tensors, got {}", 2 * spec.n_layers(), tensors.len())));
        }
        let mut it = tensors.into_iter();
        let mut layers = Vec::with_capacity(spec.n_layers());
        for w in spec.layer_widths.windows(2) {
            let wt = Tensor::new(w[0], w[1], it.next().expect("counted"))?;
            let b = it.next().expect("counted");
            if b.len() != w[1] {
                return Err(Error::Shape(format!("bias has {} values, expected {}", b.len(), w[1])));
            }
            layers.push(Layer { w: wt, b });
        }
        Ok(Self { spec: spec.clone(), layers })
    }

    /// Checks that every tensor matches the spec.
    pub fn check(&self) -> Result<()> {
        self.spec.validate()?;
        if self.layers.len() != self.spec.n_layers() {
            return Err(Error::Shape(format!("{} layers for a {}-layer spec", self.layers.len(), self.spec.n_layers())));
        }
        for (l, (layer, w)) in self.layers.iter().zip(self.spec.layer_widths.windows(2)).enumerate() {
            if layer.w.shape() != (w[0], w[1]) || layer.b.len() != w[1] {
                return Err(Error::Shape(format!(
                    "layer {l}: weights {:?}, bias {}, expected ({}, {})",
                    layer.w.shape(),
                    layer.b.len(),
                    w[0],
                    w[1]
                )));
            }
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.spec.layer_widths != other.spec.layer_widths {
            return Err(Error::Shape(format!(
                "parameter shapes differ: {:?} vs {:?}",
                self.spec.layer_widths, other.spec.layer_widths
            )));
        }
        Ok(())
    }

    /// Tensors in storage order.
    pub fn tensors(&self) -> impl Iterator<Item = &[T]> {
        self.layers.iter().flat_map(|l| [l.w.data(), l.b.as_slice()])
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut [T]> {
        self.layers.iter_mut().flat_map(|l| [l.w.data.as_mut_slice(), l.b.as_mut_slice()])
    }

    pub fn param_count(&self) -> usize {
        self.tensors().map(<[T]>::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// `self += alpha · other`.
    pub fn add_scaled(&mut self, alpha: T, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.tensors_mut().zip(other.tensors()) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x = *x + alpha * y;
            }
        }
        Ok(())
    }

    /// Euclidean norm over all parameters.
    pub fn norm(&self) -> T {
        self.tensors().flat_map(|t| t.iter()).map(|&v| v * v).sum::<T>().sqrt()
    }

    /// Reads parameter `index` in storage order.
    pub fn get_flat(&self, index: usize) -> T {
        let mut i = index;
        for t in self.tensors() {
            if i < t.len() {
                return t[i];
            }
            i -= t.len();
        }
        panic!("parameter index {index} out of range");
    }

    /// Writes parameter `index` in storage order.
    pub fn set_flat(&mut self, index: usize, v: T) {
        let mut i = index;
        for t in self.tensors_mut() {
            if i < t.len() {
                t[i] = v;
                return;
            }
            i -= t.len();
        }
        panic!("parameter index {index} out of range");
    }
}

/// Pre-activations and activations of every layer for one batch.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// `z_1 ..= z_L`.
    pub pre: Vec<Tensor<T>>,
    /// `a_0 = x, a_1 ..= a_L`.
    pub post: Vec<Tensor<T>>,
}

impl<T> ForwardCache<T> {
    pub fn output(&self) -> &Tensor<T> {
        self.post.last().expect("non-empty cache")
    }

    pub fn into_output(mut self) -> Tensor<T> {
        self.post.pop().expect("non-empty cache")
    }
}

fn check_input<T: Real>(p: &MlpParams<T>, x: &Tensor<T>) -> Result<()> {
    if x.cols() != p.spec.input_width() {
        return Err(Error::Shape(format!("input has {} columns, network expects {}", x.cols(), p.spec.input_width())));
    }
    Ok(())
}

/// Forward pass keeping every intermediate.
pub fn forward_cached<T: Real>(p: &MlpParams<T>, x: &Tensor<T>) -> Result<ForwardCache<T>> {
    check_input(p, x)?;
    let mut pre = Vec::with_capacity(p.layers.len());
    let mut post = Vec::with_capacity(p.layers.len() + 1);
    post.push(x.clone());
    for (l, layer) in p.layers.iter().enumerate() {
        let act = p.spec.activation::<T>(l);
        let mut z = post[l].matmul(false, &layer.w, false);
        for row in z.data.chunks_exact_mut(layer.b.len()) {
            for (v, &b) in row.iter_mut().zip(&layer.b) {
                *v = *v + b;
            }
        }
        let a = Tensor { rows: z.rows, cols: z.cols, data: z.data.iter().map(|&v| act.apply(v)).collect() };
        pre.push(z);
        post.push(a);
    }
    Ok(ForwardCache { pre, post })
}

/// Network output for a batch of inputs.
pub fn forward<T: Real>(p: &MlpParams<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
    Ok(forward_cached(p, x)?.into_output())
}

fn col_sums<T: Real>(t: &Tensor<T>, out: &mut [T]) {
    for row in t.data.chunks_exact(t.cols) {
        for (o, &v) in out.iter_mut().zip(row) {
            *o = *o + v;
        }
    }
}

/// Gradients of `⟨upstream, forward(x)⟩`. The input gradient is computed
/// only when `want_input_grad` is set.
pub fn backward_cached<T: Real>(
    p: &MlpParams<T>,
    cache: &ForwardCache<T>,
    upstream: &Tensor<T>,
    want_input_grad: bool,
) -> Result<(MlpParams<T>, Option<Tensor<T>>)> {
    let out = cache.output();
    if upstream.shape() != out.shape() {
        return Err(Error::Shape(format!("upstream {:?} does not match output {:?}", upstream.shape(), out.shape())));
    }
    let mut grads = MlpParams::zeros(&p.spec);
    let mut g = upstream.clone();
    for l in (0..p.layers.len()).rev() {
        let act = p.spec.activation::<T>(l);
        let (z, a) = (&cache.pre[l], &cache.post[l + 1]);
        for ((gv, &zv), &av) in g.data.iter_mut().zip(&z.data).zip(&a.data) {
            *gv = *gv * act.d1(zv, av);
        }
        grads.layers[l].w.add_matmul(&cache.post[l], true, &g, false);
        col_sums(&g, &mut grads.layers[l].b);
        if l > 0 || want_input_grad {
            g = g.matmul(false, &p.layers[l].w, true);
        }
    }
    Ok((grads, want_input_grad.then_some(g)))
}

/// Input gradient of `⟨upstream, forward(x)⟩`, skipping parameter gradients.
pub fn input_grad_cached<T: Real>(p: &MlpParams<T>, cache: &ForwardCache<T>, upstream: &Tensor<T>) -> Result<Tensor<T>> {
    let out = cache.output();
    if upstream.shape() != out.shape() {
        return Err(Error::Shape(format!("upstream {:?} does not match output {:?}", upstream.shape(), out.shape())));
    }
    let mut g = upstream.clone();
    for l in (0..p.layers.len()).rev() {
        let act = p.spec.activation::<T>(l);
        let (z, a) = (&cache.pre[l], &cache.post[l + 1]);
        for ((gv, &zv), &av) in g.data.iter_mut().zip(&z.data).zip(&a.data) {
            *gv = *gv * act.d1(zv, av);
        }
        g = g.matmul(false, &p.layers[l].w, true);
    }
    Ok(g)
}

/// Parameter and input gradients of `⟨upstream, forward(x)⟩`.
pub fn backward<T: Real>(p: &MlpParams<T>, x: &Tensor<T>, upstream: &Tensor<T>) -> Result<(MlpParams<T>, Tensor<T>)> {
    let cache = forward_cached(p, x)?;
    let (grads, gx) = backward_cached(p, &cache, upstream, true)?;
    Ok((grads, gx.expect("requested")))
}

/// Value and parameter gradients of the gradient penalty.
#[derive(Debug, Clone)]
pub struct GradPenalty<T> {
    /// `mean_b (‖∇ₓD(x_b)‖ − 1)²`.
    pub value: T,
    pub grads: MlpParams<T>,
    /// Per-sample input-gradient norms.
    pub norms: Vec<T>,
}

/// Gradient penalty of a scalar-output network at `x_hat`, restricted to
/// the first `penalized_cols` input columns, with exact parameter gradients.
///
/// The gradients differentiate through the input-gradient computation. A
/// sample whose input gradient vanishes contributes zero gradient (the norm
/// derivative is taken with its denominator floored at [`NORM_EPS`]).
pub fn grad_penalty_value_and_grads<T: Real>(
    p: &MlpParams<T>,
    x_hat: &Tensor<T>,
    penalized_cols: usize,
) -> Result<GradPenalty<T>> {
    if p.spec.output_width() != 1 {
        return Err(Error::Shape(format!("gradient penalty needs a scalar output, got width {}", p.spec.output_width())));
    }
    if penalized_cols > p.spec.input_width() {
        return Err(Error::Shape(format!(
            "{penalized_cols} penalized columns exceed input width {}",
            p.spec.input_width()
        )));
    }
    let cache = forward_cached(p, x_hat)?;
    let n_layers = p.layers.len();
    let batch = x_hat.rows();

    // Input-gradient pass: g_L = 1, δ_l = g_l ⊙ φ'(z_l), g_{l-1} = δ_l W_lᵀ.
    let mut g_up: Vec<Tensor<T>> = vec![Tensor::zeros(0, 0); n_layers + 1];
    let mut deltas: Vec<Tensor<T>> = vec![Tensor::zeros(0, 0); n_layers];
    g_up[n_layers] = Tensor { rows: batch, cols: 1, data: vec![T::one(); batch] };
    for l in (0..n_layers).rev() {
        let act = p.spec.activation::<T>(l);
        let (z, a) = (&cache.pre[l], &cache.post[l + 1]);
        let mut d = g_up[l + 1].clone();
        for ((dv, &zv), &av) in d.data.iter_mut().zip(&z.data).zip(&a.data) {
            *dv = *dv * act.d1(zv, av);
        }
        g_up[l] = d.matmul(false, &p.layers[l].w, true);
        deltas[l] = d;
    }

    let v = &g_up[0];
    let inv_b = T::one() / T::from_usize(batch).expect("batch size");
    let eps = T::lit(NORM_EPS);
    let mut value = T::zero();
    let mut norms = Vec::with_capacity(batch);
    let mut gbar = Tensor::zeros(batch, v.cols());
    for b in 0..batch {
        let row = &v.row(b)[..penalized_cols];
        let n = row.iter().map(|&x| x * x).sum::<T>().sqrt();
        value = value + (n - T::one()).powi(2);
        norms.push(n);
        let scale = (T::one() + T::one()) * inv_b * (n - T::one()) / n.max(eps);
        for (o, &x) in gbar.data[b * v.cols()..b * v.cols() + penalized_cols].iter_mut().zip(row) {
            *o = scale * x;
        }
    }
    value = value * inv_b;

    // Reverse of the input-gradient pass, bottom layer first.
    let mut grads = MlpParams::zeros(&p.spec);
    let mut zbar: Vec<Option<Tensor<T>>> = vec![None; n_layers];
    for l in 0..n_layers {
        let act = p.spec.activation::<T>(l);
        grads.layers[l].w.add_matmul(&gbar, true, &deltas[l], false);
        let dbar = gbar.matmul(false, &p.layers[l].w, false);
        let (z, a) = (&cache.pre[l], &cache.post[l + 1]);
        if !act.is_piecewise_linear() {
            let mut zb = dbar.clone();
            for (((o, &gv), &zv), &av) in zb.data.iter_mut().zip(&g_up[l + 1].data).zip(&z.data).zip(&a.data) {
                *o = *o * gv * act.d2(zv, av);
            }
            zbar[l] = Some(zb);
        }
        if l + 1 < n_layers {
            let mut next = dbar;
            for ((o, &zv), &av) in next.data.iter_mut().zip(&z.data).zip(&a.data) {
                *o = *o * act.d1(zv, av);
            }
            gbar = next;
        }
    }

    // Second-order terms flow back through the forward pass.
    let mut abar: Option<Tensor<T>> = None;
    for l in (0..n_layers).rev() {
        let act = p.spec.activation::<T>(l);
        let mut zdot = match (abar.take(), zbar[l].take()) {
            (None, None) => continue,
            (Some(mut ab), zb) => {
                let (z, a) = (&cache.pre[l], &cache.post[l + 1]);
                for ((o, &zv), &av) in ab.data.iter_mut().zip(&z.data).zip(&a.data) {
                    *o = *o * act.d1(zv, av);
                }
                if let Some(zb) = zb {
                    for (o, &x) in ab.data.iter_mut().zip(&zb.data) {
                        *o = *o + x;
                    }
                }
                ab
            }
            (None, Some(zb)) => zb,
        };
        grads.layers[l].w.add_matmul(&cache.post[l], true, &zdot, false);
        col_sums(&zdot, &mut grads.layers[l].b);
        if l > 0 {
            zdot = zdot.matmul(false, &p.layers[l].w, true);
            abar = Some(zdot);
        }
    }
    Ok(GradPenalty { value, grads, norms })
}

/// Seeded initialization: He-scaled normals for layers followed by a leaky
/// ReLU, Xavier-scaled otherwise; zero biases.
pub fn init_params<T: Real>(spec: &MlpSpec, seed: u64) -> MlpParams<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    init_params_with(spec, &mut rng)
}

pub fn init_params_with<T: Real, R: rand::Rng>(spec: &MlpSpec, rng: &mut R) -> MlpParams<T> {
    let mut p = MlpParams::zeros(spec);
    for (l, layer) in p.layers.iter_mut().enumerate() {
        let (n_in, n_out) = layer.w.shape();
        let std = match spec.activation::<f64>(l) {
            Act::LeakyRelu(_) => (2.0 / n_in as f64).sqrt(),
            _ => (2.0 / (n_in + n_out) as f64).sqrt(),
        };
        for w in layer.w.data.iter_mut() {
            let s: f64 = StandardNormal.sample(rng);
            *w = T::lit(std * s);
        }
    }
    p
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-4, beta1: 0.0, beta2: 0.9, eps: 1e-8 }
    }
}

/// Moment estimates of an Adam optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub m: MlpParams<T>,
    pub v: MlpParams<T>,
    pub step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(spec: &MlpSpec, config: AdamConfig) -> Self {
        Self { config, m: MlpParams::zeros(spec), v: MlpParams::zeros(spec), step: 0 }
    }
}

/// One bias-corrected Adam update of `params` along `-grads`.
pub fn adam_step<T: Real>(state: &mut AdamState<T>, params: &mut MlpParams<T>, grads: &MlpParams<T>) -> Result<()> {
    params.check_same_shape(grads)?;
    params.check_same_shape(&state.m)?;
    state.step += 1;
    let c = state.config;
    let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
    let t = state.step as i32;
    let bc1 = T::one() - T::lit(c.beta1.powi(t));
    let bc2 = T::one() - T::lit(c.beta2.powi(t));
    let (lr, eps) = (T::lit(c.lr), T::lit(c.eps));
    let one = T::one();
    for (((p, g), m), v) in params.tensors_mut().zip(grads.tensors()).zip(state.m.tensors_mut()).zip(state.v.tensors_mut()) {
        for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            let mh = *m / bc1;
            let vh = *v / bc2;
            *p = *p - lr * mh / (vh.sqrt() + eps);
        }
    }
    Ok(())
}
