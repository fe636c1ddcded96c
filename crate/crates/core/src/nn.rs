//! Small fully connected networks with hand-written backpropagation.
//!
//! Parameters live in one flat `f64` vector. For each layer the weight matrix
//! (`out x in`, row-major) comes first, followed by the bias vector.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::rng::SeededRng;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// Raw outputs (Q-values).
    Linear,
    /// A probability vector.
    Softmax,
    /// Independent probabilities per unit.
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    SquaredError,
    SoftmaxCrossEntropy,
    /// `KL(target || output)`.
    KlDivergence,
    /// Squared Euclidean distance between target and output.
    L2Distance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApproximatorSpec {
    /// Input width, hidden widths, output width.
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub head: Head,
}

impl ApproximatorSpec {
    pub fn new(input: usize, hidden: &[usize], output: usize, activation: Activation, head: Head) -> Self {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(input);
        widths.extend_from_slice(hidden);
        widths.push(output);
        Self { widths, activation, head }
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 3 {
            return Err(config_err("an approximator needs at least one hidden layer"));
        }
        if self.widths.contains(&0) {
            return Err(config_err(format!("zero-width layer in {:?}", self.widths)));
        }
        Ok(())
    }

    fn layer_offsets(&self) -> Vec<(usize, usize, usize)> {
        let mut off = 0;
        self.widths
            .windows(2)
            .map(|w| {
                let here = off;
                off += w[0] * w[1] + w[1];
                (here, w[0], w[1])
            })
            .collect()
    }
}

/// What a single example is trained toward.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// Only output `index` is penalized, toward `value` (TD regression on one action).
    Index { index: usize, value: f64 },
    /// A class label; equivalent to a one-hot dense target.
    Class(usize),
    Dense(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Vec<f64>,
    pub target: Target,
    pub loss: LossKind,
    pub weight: f64,
}

impl Example {
    pub fn new(input: Vec<f64>, target: Target, loss: LossKind) -> Self {
        Self { input, target, loss, weight: 1.0 }
    }
}

/// A flat parameter array together with the spec that interprets it.
///
/// Serializes as the checkpoint object `{"version", "spec", "params"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Checkpoint", into = "Checkpoint")]
pub struct ParamVector {
    pub spec: ApproximatorSpec,
    pub values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    spec: ApproximatorSpec,
    params: Vec<f64>,
}

impl From<ParamVector> for Checkpoint {
    fn from(p: ParamVector) -> Self {
        Checkpoint { version: CHECKPOINT_FORMAT_VERSION, spec: p.spec, params: p.values }
    }
}

impl TryFrom<Checkpoint> for ParamVector {
    type Error = Error;

    fn try_from(ck: Checkpoint) -> Result<Self> {
        if ck.version != CHECKPOINT_FORMAT_VERSION {
            return Err(config_err(format!("unsupported checkpoint version {}", ck.version)));
        }
        ParamVector::from_values(ck.spec, ck.params)
    }
}

struct Trace {
    /// Post-activation values per layer, starting with the input.
    activations: Vec<Array2<f64>>,
    /// Final pre-head values.
    logits: Array2<f64>,
}

impl ParamVector {
    pub fn zeros(spec: ApproximatorSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.num_params();
        Ok(Self { spec, values: vec![0.0; n] })
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn init(spec: ApproximatorSpec, rng: &mut SeededRng) -> Result<Self> {
        let mut p = Self::zeros(spec)?;
        for (off, fan_in, fan_out) in p.spec.layer_offsets() {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in &mut p.values[off..off + fan_in * fan_out] {
                *v = (2.0 * rng.uniform() - 1.0) * bound;
            }
        }
        Ok(p)
    }

    pub fn from_values(spec: ApproximatorSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.num_params() {
            return Err(Error::Shape { expected: spec.num_params(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite parameter".into()));
        }
        Ok(Self { spec, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn layer(&self, off: usize, fan_in: usize, fan_out: usize) -> (ArrayView2<'_, f64>, &[f64]) {
        let w = ArrayView2::from_shape((fan_out, fan_in), &self.values[off..off + fan_in * fan_out]).unwrap();
        let b = &self.values[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
        (w, b)
    }

    fn run(&self, input: Array2<f64>) -> Trace {
        let layers = self.spec.layer_offsets();
        let last = layers.len() - 1;
        let mut activations = Vec::with_capacity(layers.len());
        let mut x = input;
        let mut logits = None;
        for (li, &(off, fan_in, fan_out)) in layers.iter().enumerate() {
            let (w, b) = self.layer(off, fan_in, fan_out);
            let mut z = x.dot(&w.t());
            for mut row in z.rows_mut() {
                for (zi, bi) in row.iter_mut().zip(b) {
                    *zi += bi;
                }
            }
            activations.push(x);
            if li == last {
                logits = Some(z);
                break;
            }
            match self.spec.activation {
                Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
                Activation::Tanh => z.mapv_inplace(f64::tanh),
            }
            x = z;
        }
        Trace { activations, logits: logits.unwrap() }
    }

    fn apply_head(&self, logits: &Array2<f64>) -> Array2<f64> {
        let mut out = logits.clone();
        match self.spec.head {
            Head::Linear => {}
            Head::Sigmoid => out.mapv_inplace(sigmoid),
            Head::Softmax => {
                for mut row in out.rows_mut() {
                    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    row.mapv_inplace(|v| (v - max).exp());
                    let s = row.sum();
                    row.mapv_inplace(|v| v / s);
                }
            }
        }
        out
    }

    fn check_width(&self, got: usize) -> Result<()> {
        if got != self.spec.input_dim() {
            return Err(Error::Shape { expected: self.spec.input_dim(), got });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_width(input.len())?;
        let x = Array2::from_shape_vec((1, input.len()), input.to_vec()).unwrap();
        Ok(self.apply_head(&self.run(x).logits).into_raw_vec_and_offset().0)
    }

    /// Row-wise forward over a `rows x input_dim` matrix stored row-major.
    pub fn forward_batch(&self, inputs: &[f64], rows: usize) -> Result<Array2<f64>> {
        let width = self.spec.input_dim();
        if inputs.len() != rows * width {
            return Err(Error::Shape { expected: rows * width, got: inputs.len() });
        }
        let x = Array2::from_shape_vec((rows, width), inputs.to_vec()).unwrap();
        Ok(self.apply_head(&self.run(x).logits))
    }

    /// Mean weighted loss over `batch` and its gradient with respect to the parameters.
    pub fn loss_and_grad(&self, batch: &[Example]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Ok((0.0, vec![0.0; self.values.len()]));
        }
        let width = self.spec.input_dim();
        let out_dim = self.spec.output_dim();
        let mut flat = Vec::with_capacity(batch.len() * width);
        for ex in batch {
            self.check_width(ex.input.len())?;
            flat.extend_from_slice(&ex.input);
        }
        let x = Array2::from_shape_vec((batch.len(), width), flat).unwrap();
        let trace = self.run(x);
        let out = self.apply_head(&trace.logits);
        let n = batch.len() as f64;

        let mut total = 0.0;
        let mut dlogits = Array2::<f64>::zeros((batch.len(), out_dim));
        for (r, ex) in batch.iter().enumerate() {
            let y = out.row(r);
            let z = trace.logits.row(r);
            let scale = ex.weight / n;
            let mut dz = dlogits.row_mut(r);
            match ex.loss {
                LossKind::SquaredError | LossKind::L2Distance => {
                    let mut dy = vec![0.0; out_dim];
                    match &ex.target {
                        Target::Index { index, value } => {
                            check_index(*index, out_dim)?;
                            let e = y[*index] - value;
                            total += scale * e * e;
                            dy[*index] = 2.0 * e;
                        }
                        Target::Class(c) => {
                            check_index(*c, out_dim)?;
                            for i in 0..out_dim {
                                let t = if i == *c { 1.0 } else { 0.0 };
                                let e = y[i] - t;
                                total += scale * e * e;
                                dy[i] = 2.0 * e;
                            }
                        }
                        Target::Dense(t) => {
                            if t.len() != out_dim {
                                return Err(Error::Shape { expected: out_dim, got: t.len() });
                            }
                            for i in 0..out_dim {
                                let e = y[i] - t[i];
                                total += scale * e * e;
                                dy[i] = 2.0 * e;
                            }
                        }
                    }
                    // chain through the head
                    match self.spec.head {
                        Head::Linear => {
                            for i in 0..out_dim {
                                dz[i] = scale * dy[i];
                            }
                        }
                        Head::Sigmoid => {
                            for i in 0..out_dim {
                                dz[i] = scale * dy[i] * y[i] * (1.0 - y[i]);
                            }
                        }
                        Head::Softmax => {
                            let dot: f64 = (0..out_dim).map(|i| dy[i] * y[i]).sum();
                            for i in 0..out_dim {
                                dz[i] = scale * y[i] * (dy[i] - dot);
                            }
                        }
                    }
                }
                LossKind::SoftmaxCrossEntropy | LossKind::KlDivergence => {
                    if self.spec.head != Head::Softmax {
                        return Err(config_err(format!("{:?} requires a softmax head", ex.loss)));
                    }
                    let p = match &ex.target {
                        Target::Class(c) => {
                            check_index(*c, out_dim)?;
                            let mut p = vec![0.0; out_dim];
                            p[*c] = 1.0;
                            p
                        }
                        Target::Dense(t) if t.len() == out_dim => t.clone(),
                        Target::Dense(t) => return Err(Error::Shape { expected: out_dim, got: t.len() }),
                        Target::Index { .. } => {
                            return Err(config_err("index targets only apply to squared error"))
                        }
                    };
                    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                    let mass: f64 = p.iter().sum();
                    for i in 0..out_dim {
                        if p[i] > 0.0 {
                            let log_q = z[i] - lse;
                            total += scale * match ex.loss {
                                LossKind::KlDivergence => p[i] * (p[i].ln() - log_q),
                                _ => -p[i] * log_q,
                            };
                        }
                        dz[i] = scale * (y[i] * mass - p[i]);
                    }
                }
            }
        }
        if !total.is_finite() {
            return Err(Error::Numeric(format!("loss is {total}")));
        }

        let grad = self.backward(&trace, dlogits);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric("non-finite gradient".into()));
        }
        Ok((total, grad))
    }

    fn backward(&self, trace: &Trace, mut delta: Array2<f64>) -> Vec<f64> {
        let layers = self.spec.layer_offsets();
        let mut grad = vec![0.0; self.values.len()];
        for li in (0..layers.len()).rev() {
            let (off, fan_in, fan_out) = layers[li];
            let a_in = &trace.activations[li];
            let gw = delta.t().dot(a_in);
            grad[off..off + fan_in * fan_out].copy_from_slice(gw.as_slice().unwrap());
            let gb = delta.sum_axis(Axis(0));
            grad[off + fan_in * fan_out..off + fan_in * fan_out + fan_out].copy_from_slice(gb.as_slice().unwrap());
            if li == 0 {
                break;
            }
            let (w, _) = self.layer(off, fan_in, fan_out);
            let mut d_prev = delta.dot(&w);
            // a_in is the post-activation of the previous layer
            match self.spec.activation {
                Activation::Relu => d_prev.zip_mut_with(a_in, |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0
                    }
                }),
                Activation::Tanh => d_prev.zip_mut_with(a_in, |d, &a| *d *= 1.0 - a * a),
            }
            delta = d_prev;
        }
        grad
    }

    /// Smallest absolute hidden-layer pre-activation for `input`. ReLU networks
    /// are not differentiable where this is zero.
    pub fn min_hidden_preactivation(&self, input: &[f64]) -> Result<f64> {
        self.check_width(input.len())?;
        let layers = self.spec.layer_offsets();
        let mut x = Array2::from_shape_vec((1, input.len()), input.to_vec()).unwrap();
        let mut min = f64::INFINITY;
        for &(off, fan_in, fan_out) in &layers[..layers.len() - 1] {
            let (w, b) = self.layer(off, fan_in, fan_out);
            let mut z = x.dot(&w.t());
            z.row_mut(0).iter_mut().zip(b).for_each(|(zi, bi)| *zi += bi);
            min = z.iter().fold(min, |m, v| m.min(v.abs()));
            match self.spec.activation {
                Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
                Activation::Tanh => z.mapv_inplace(f64::tanh),
            }
            x = z;
        }
        Ok(min)
    }

    /// Deterministic 64-bit fingerprint of the parameters.
    pub fn fingerprint(&self) -> u64 {
        // FNV-1a over the raw bits
        let mut h: u64 = 0xcbf29ce484222325;
        for v in &self.values {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        h
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn check_index(index: usize, dim: usize) -> Result<()> {
    if index >= dim {
        return Err(Error::Shape { expected: dim, got: index });
    }
    Ok(())
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Per-parameter-set optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, num_params: usize) -> Self {
        Self {
            kind,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Plain descent: `p -= lr * g`.
    /// Adam: bias-corrected first and second moments, `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
        if params.len() != grad.len() || params.len() != self.m.len() {
            return Err(Error::Shape { expected: params.len(), got: grad.len() });
        }
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::Adam => {
                self.t += 1;
                let c1 = 1.0 - self.beta1.powi(self.t as i32);
                let c2 = 1.0 - self.beta2.powi(self.t as i32);
                for i in 0..params.len() {
                    let g = grad[i];
                    self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
                    self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
                    let m_hat = self.m[i] / c1;
                    let v_hat = self.v[i] / c2;
                    params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
                }
            }
        }
        Ok(())
    }
}

/// Scale `grad` in place so its Euclidean norm is at most `max_norm`.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if max_norm > 0.0 && norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

/// Largest relative error between the analytic gradient and central finite differences.
///
/// Relative error per coordinate is `|a - n| / max(|a|, |n|, floor)`.
pub fn gradient_check(params: &ParamVector, batch: &[Example], step: f64, floor: f64) -> Result<f64> {
    let (_, analytic) = params.loss_and_grad(batch)?;
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    for i in 0..params.values.len() {
        let orig = probe.values[i];
        probe.values[i] = orig + step;
        let (plus, _) = probe.loss_and_grad(batch)?;
        probe.values[i] = orig - step;
        let (minus, _) = probe.loss_and_grad(batch)?;
        probe.values[i] = orig;
        let numeric = (plus - minus) / (2.0 * step);
        let denom = analytic[i].abs().max(numeric.abs()).max(floor);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    Ok(worst)
}
