//! Small fully connected classifier on generated Gaussian blobs, with a
//! hand-written backward pass.
//!
//! Parameters are flattened layer by layer: the weight matrix (row-major,
//! `out x in`) followed by the bias vector.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ParamVector, RngStream};

use super::Problem;

#[cfg(not(feature = "mlp-f32"))]
type Scalar = f64;
#[cfg(feature = "mlp-f32")]
type Scalar = f32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: Scalar) -> Scalar {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation.
    fn derivative(self, z: Scalar) -> Scalar {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    pub n_samples: usize,
    pub n_classes: usize,
    /// Within-class standard deviation.
    pub blob_sigma: f64,
    pub seed: u64,
    /// Standard deviation of the class centers around the origin.
    #[serde(default = "default_center_spread")]
    pub center_spread: f64,
}

fn default_center_spread() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    /// Input width, hidden widths, number of classes.
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub dataset: BlobSpec,
    pub batch_size: usize,
    /// Seed for the initial weights.
    #[serde(default)]
    pub init_seed: u64,
}

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 || self.layer_sizes.contains(&0) {
            return Err(Error::Config(
                "layer_sizes needs at least an input and an output width, all positive".into(),
            ));
        }
        if *self.layer_sizes.last().expect("len >= 2") != self.dataset.n_classes {
            return Err(Error::Config(
                "output layer size must equal dataset.n_classes".into(),
            ));
        }
        if self.dataset.n_classes < 2 || self.dataset.n_samples == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "need >= 2 classes, >= 1 sample and batch_size >= 1".into(),
            ));
        }
        if !(self.dataset.blob_sigma >= 0.0) || !(self.dataset.center_spread >= 0.0) {
            return Err(Error::Config(
                "blob_sigma and center_spread must be >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    /// Offsets of (weights, biases) for each layer in the flat vector.
    fn layout(&self) -> Vec<(usize, usize, usize, usize)> {
        let mut offset = 0;
        self.layer_sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let w_off = offset;
                let b_off = w_off + fan_in * fan_out;
                offset = b_off + fan_out;
                (fan_in, fan_out, w_off, b_off)
            })
            .collect()
    }

    /// Weights uniform in `+-1/sqrt(fan_in)`, biases zero.
    pub fn init_params(&self, seed: u64) -> ParamVector {
        let mut rng = RngStream::new(seed);
        let mut out = vec![0.0; self.param_count()];
        for (fan_in, fan_out, w_off, _) in self.layout() {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in &mut out[w_off..w_off + fan_in * fan_out] {
                *v = rng.uniform(-bound, bound);
            }
        }
        ParamVector::new(out).expect("nonempty network")
    }

    /// Deterministic blob dataset; sample `i` belongs to class `i % k`.
    pub fn generate_dataset(&self) -> Batch {
        let ds = &self.dataset;
        let d = self.input_dim();
        let mut rng = RngStream::new(ds.seed);
        let centers: Vec<f64> = (0..ds.n_classes * d)
            .map(|_| ds.center_spread * rng.standard_normal())
            .collect();
        let mut inputs = Vec::with_capacity(ds.n_samples * d);
        let mut labels = Vec::with_capacity(ds.n_samples);
        for i in 0..ds.n_samples {
            let c = i % ds.n_classes;
            for j in 0..d {
                inputs.push(centers[c * d + j] + ds.blob_sigma * rng.standard_normal());
            }
            labels.push(c);
        }
        Batch {
            input_dim: d,
            inputs,
            labels,
        }
    }
}

/// Row-major inputs with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub input_dim: usize,
    pub inputs: Vec<f64>,
    pub labels: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn select(&self, indices: &[usize]) -> Batch {
        let mut inputs = Vec::with_capacity(indices.len() * self.input_dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            inputs.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Batch {
            input_dim: self.input_dim,
            inputs,
            labels,
        }
    }
}

/// Mean softmax cross-entropy over the batch and its exact gradient.
pub fn mlp_forward_backward(
    spec: &MlpSpec,
    params: &ParamVector,
    batch: &Batch,
) -> Result<(f64, ParamVector)> {
    let (loss, grad) = forward(spec, params, batch, true)?;
    Ok((loss, grad.expect("requested")))
}

/// Mean cross-entropy without the backward pass.
pub fn mlp_loss(spec: &MlpSpec, params: &ParamVector, batch: &Batch) -> Result<f64> {
    forward(spec, params, batch, false).map(|(l, _)| l)
}

// the casts are real under `mlp-f32`
#[allow(clippy::unnecessary_cast)]
fn forward(
    spec: &MlpSpec,
    params: &ParamVector,
    batch: &Batch,
    with_grad: bool,
) -> Result<(f64, Option<ParamVector>)> {
    spec.validate()?;
    if params.dim() != spec.param_count() {
        return Err(Error::DimensionMismatch {
            expected: spec.param_count(),
            actual: params.dim(),
        });
    }
    if batch.is_empty() || batch.input_dim != spec.input_dim() {
        return Err(Error::Config(
            "batch is empty or has the wrong input width".into(),
        ));
    }
    let n_classes = spec.dataset.n_classes;
    if let Some(&bad) = batch.labels.iter().find(|&&y| y >= n_classes) {
        return Err(Error::Config(format!("label {bad} out of range")));
    }

    let p: Vec<Scalar> = params.iter().map(|&v| v as Scalar).collect();
    let layout = spec.layout();
    let n = batch.len();
    let last = layout.len() - 1;

    // pre-activations and activations, each n x width
    let mut pre: Vec<Vec<Scalar>> = Vec::with_capacity(layout.len());
    let mut acts: Vec<Vec<Scalar>> = Vec::with_capacity(layout.len() + 1);
    acts.push(batch.inputs.iter().map(|&v| v as Scalar).collect());

    for (l, &(fan_in, fan_out, w_off, b_off)) in layout.iter().enumerate() {
        let a = &acts[l];
        let mut z = vec![0.0 as Scalar; n * fan_out];
        for i in 0..n {
            let row = &a[i * fan_in..(i + 1) * fan_in];
            for o in 0..fan_out {
                let w = &p[w_off + o * fan_in..w_off + (o + 1) * fan_in];
                let mut acc = p[b_off + o];
                for k in 0..fan_in {
                    acc += w[k] * row[k];
                }
                z[i * fan_out + o] = acc;
            }
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::MlpNonFinite { layer: l });
        }
        let next = if l == last {
            z.clone()
        } else {
            z.iter().map(|&v| spec.activation.apply(v)).collect()
        };
        pre.push(z);
        acts.push(next);
    }

    // softmax cross-entropy on the logits
    let logits = &acts[last + 1];
    let mut loss = 0.0f64;
    let mut delta = vec![0.0 as Scalar; n * n_classes];
    let inv_n = 1.0 / n as Scalar;
    for i in 0..n {
        let row = &logits[i * n_classes..(i + 1) * n_classes];
        let max = row.iter().cloned().fold(Scalar::NEG_INFINITY, Scalar::max);
        let sum: Scalar = row.iter().map(|&v| (v - max).exp()).sum();
        let log_z = max + sum.ln();
        let y = batch.labels[i];
        loss += (log_z - row[y]) as f64;
        for c in 0..n_classes {
            let prob = (row[c] - log_z).exp();
            let target = if c == y { 1.0 } else { 0.0 };
            delta[i * n_classes + c] = (prob - target) * inv_n;
        }
    }
    loss /= n as f64;
    if !loss.is_finite() {
        return Err(Error::MlpNonFinite { layer: last });
    }
    if !with_grad {
        return Ok((loss, None));
    }

    let mut grad = vec![0.0 as Scalar; p.len()];
    for l in (0..layout.len()).rev() {
        let (fan_in, fan_out, w_off, b_off) = layout[l];
        let a = &acts[l];
        for i in 0..n {
            let row = &a[i * fan_in..(i + 1) * fan_in];
            for o in 0..fan_out {
                let d = delta[i * fan_out + o];
                grad[b_off + o] += d;
                let gw = &mut grad[w_off + o * fan_in..w_off + (o + 1) * fan_in];
                for k in 0..fan_in {
                    gw[k] += d * row[k];
                }
            }
        }
        if l == 0 {
            break;
        }
        let z_prev = &pre[l - 1];
        let mut prev = vec![0.0 as Scalar; n * fan_in];
        for i in 0..n {
            for k in 0..fan_in {
                let mut acc = 0.0 as Scalar;
                for o in 0..fan_out {
                    acc += delta[i * fan_out + o] * p[w_off + o * fan_in + k];
                }
                prev[i * fan_in + k] = acc * spec.activation.derivative(z_prev[i * fan_in + k]);
            }
        }
        delta = prev;
    }

    let grad = ParamVector::new(grad.into_iter().map(|v| v as f64).collect())?;
    grad.ensure_finite("mlp gradient")?;
    Ok((loss, Some(grad)))
}

/// Gradient norm of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerGradNorm {
    pub layer: usize,
    pub weight_norm: f64,
    pub bias_norm: f64,
    /// Weights and biases together.
    pub norm: f64,
}

/// Per-layer l2 gradient norms of the loss on `batch` at `params`.
pub fn heterogeneity_report(
    spec: &MlpSpec,
    params: &ParamVector,
    batch: &Batch,
) -> Result<Vec<LayerGradNorm>> {
    let (_, grad) = mlp_forward_backward(spec, params, batch)?;
    let g = grad.as_slice();
    Ok(spec
        .layout()
        .into_iter()
        .enumerate()
        .map(|(layer, (fan_in, fan_out, w_off, b_off))| {
            let sq = |s: &[f64]| s.iter().map(|v| v * v).sum::<f64>();
            let w = sq(&g[w_off..w_off + fan_in * fan_out]);
            let b = sq(&g[b_off..b_off + fan_out]);
            LayerGradNorm {
                layer,
                weight_norm: w.sqrt(),
                bias_norm: b.sqrt(),
                norm: (w + b).sqrt(),
            }
        })
        .collect())
}

pub fn write_heterogeneity_csv(rows: &[LayerGradNorm], path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "layer,norm,weight_norm,bias_norm")?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{}",
            r.layer, r.norm, r.weight_norm, r.bias_norm
        )?;
    }
    f.flush()?;
    Ok(())
}

/// The classifier as an optimization problem: `loss`/`grad` use the whole
/// dataset, `stochastic_grad` a minibatch drawn with replacement.
#[derive(Debug, Clone)]
pub struct Mlp {
    spec: MlpSpec,
    data: Batch,
}

impl Mlp {
    pub fn new(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let data = spec.generate_dataset();
        Ok(Self { spec, data })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn data(&self) -> &Batch {
        &self.data
    }

    pub fn sample_batch(&self, rng: &mut RngStream) -> Batch {
        if self.spec.batch_size >= self.data.len() {
            return self.data.clone();
        }
        let idx: Vec<usize> = (0..self.spec.batch_size)
            .map(|_| rng.below(self.data.len()))
            .collect();
        self.data.select(&idx)
    }
}

impl Problem for Mlp {
    fn name(&self) -> &str {
        "mlp"
    }

    fn dim(&self) -> usize {
        self.spec.param_count()
    }

    fn loss(&self, x: &ParamVector) -> Result<f64> {
        mlp_loss(&self.spec, x, &self.data)
    }

    fn grad(&self, x: &ParamVector) -> Result<ParamVector> {
        mlp_forward_backward(&self.spec, x, &self.data).map(|(_, g)| g)
    }

    /// Minibatch noise is not additive Gaussian; reported as zero.
    fn noise_sigma(&self) -> f64 {
        0.0
    }

    fn initial_point(&self) -> ParamVector {
        self.spec.init_params(self.spec.init_seed)
    }

    fn sample_point(&self, rng: &mut RngStream) -> ParamVector {
        let seed = rng.below(usize::MAX) as u64;
        self.spec.init_params(seed).scaled(2.0)
    }

    fn stochastic_grad(&self, x: &ParamVector, rng: &mut RngStream) -> Result<ParamVector> {
        let batch = self.sample_batch(rng);
        mlp_forward_backward(&self.spec, x, &batch).map(|(_, g)| g)
    }
}
