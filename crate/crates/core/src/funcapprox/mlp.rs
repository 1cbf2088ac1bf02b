//! Fully connected ReLU network over a flat parameter vector.
//!
//! Each layer `k` owns two named slices, `layer{k}.weight` (stored input-major,
//! shape `fan_in x fan_out`) and `layer{k}.bias`. Hidden layers apply ReLU; the
//! output layer is linear. Input-major storage lets the forward and backward
//! passes skip zero inputs, which dominate the one-hot grid-world observations.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
}

impl NetSpec {
    pub fn new(input_dim: usize, hidden: Vec<usize>, output_dim: usize) -> Result<Self> {
        let spec = Self {
            input_dim,
            hidden,
            output_dim,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "network dimensions must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` for every affine layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut prev = self.input_dim;
        for &h in self.hidden.iter().chain(std::iter::once(&self.output_dim)) {
            dims.push((prev, h));
            prev = h;
        }
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }

    pub fn layout(&self) -> Vec<ParamSlice> {
        let mut slices = Vec::new();
        let mut offset = 0;
        for (k, (fan_in, fan_out)) in self.layer_dims().into_iter().enumerate() {
            slices.push(ParamSlice {
                name: format!("layer{k}.weight"),
                offset,
                len: fan_in * fan_out,
            });
            offset += fan_in * fan_out;
            slices.push(ParamSlice {
                name: format!("layer{k}.bias"),
                offset,
                len: fan_out,
            });
            offset += fan_out;
        }
        slices
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSlice {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

impl ParamSlice {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Flat parameter storage with a named slice map.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    slices: Vec<ParamSlice>,
}

impl ParamVector {
    pub fn zeros(spec: &NetSpec) -> Self {
        Self {
            values: vec![0.0; spec.param_count()],
            slices: spec.layout(),
        }
    }

    /// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
    pub fn init(spec: &NetSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Self::zeros(spec);
        for ((fan_in, _), slice) in spec
            .layer_dims()
            .into_iter()
            .zip(params.slices.iter().step_by(2))
        {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound);
            for v in &mut params.values[slice.range()] {
                *v = dist.sample(&mut rng);
            }
        }
        params
    }

    pub fn from_values(spec: &NetSpec, values: Vec<f64>) -> Result<Self> {
        check_len("parameter vector", spec.param_count(), values.len())?;
        Ok(Self {
            values,
            slices: spec.layout(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn slices(&self) -> &[ParamSlice] {
        &self.slices
    }

    pub fn slice(&self, name: &str) -> Option<&[f64]> {
        self.slices
            .iter()
            .find(|s| s.name == name)
            .map(|s| &self.values[s.range()])
    }
}

/// Per-layer activations cached by a forward pass, reused across calls.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    // acts[0] is the input; acts[k] is the post-ReLU output of hidden layer k.
    acts: Vec<Vec<f64>>,
    out: Vec<f64>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        &self.out
    }
}

#[derive(Debug, Clone)]
pub struct Mlp {
    spec: NetSpec,
    dims: Vec<(usize, usize)>,
    // (weight offset, bias offset) per layer
    offsets: Vec<(usize, usize)>,
    param_count: usize,
}

impl Mlp {
    pub fn new(spec: NetSpec) -> Result<Self> {
        spec.validate()?;
        let dims = spec.layer_dims();
        let mut offsets = Vec::with_capacity(dims.len());
        let mut off = 0;
        for &(i, o) in &dims {
            offsets.push((off, off + i * o));
            off += i * o + o;
        }
        Ok(Self {
            spec,
            dims,
            offsets,
            param_count: off,
        })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim
    }

    pub fn check_params(&self, params: &[f64]) -> Result<()> {
        check_len("parameter vector", self.param_count, params.len())
    }

    pub fn check_input(&self, x: &[f64]) -> Result<()> {
        check_len("observation", self.spec.input_dim, x.len())
    }

    /// Forward pass, recording activations into `trace`. Returns the linear output.
    pub fn forward<'t>(&self, params: &[f64], x: &[f64], trace: &'t mut Trace) -> &'t [f64] {
        debug_assert_eq!(params.len(), self.param_count);
        debug_assert_eq!(x.len(), self.spec.input_dim);
        let n_layers = self.dims.len();
        trace.acts.resize_with(n_layers, Vec::new);
        trace.acts[0].clear();
        trace.acts[0].extend_from_slice(x);
        for (k, (&(fan_in, fan_out), &(w_off, b_off))) in
            self.dims.iter().zip(&self.offsets).enumerate()
        {
            let mut z = std::mem::take(if k + 1 < n_layers {
                &mut trace.acts[k + 1]
            } else {
                &mut trace.out
            });
            z.clear();
            z.extend_from_slice(&params[b_off..b_off + fan_out]);
            let input = &trace.acts[k];
            for i in 0..fan_in {
                let xi = input[i];
                if xi == 0.0 {
                    continue;
                }
                let row = &params[w_off + i * fan_out..w_off + (i + 1) * fan_out];
                for (zo, &w) in z.iter_mut().zip(row) {
                    *zo += xi * w;
                }
            }
            if k + 1 < n_layers {
                for v in z.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
                trace.acts[k + 1] = z;
            } else {
                trace.out = z;
            }
        }
        &trace.out
    }

    /// Accumulates `grad += scale * d(dout . output)/d(params)` using the
    /// activations of the most recent `forward` on `trace`.
    pub fn backward(&self, params: &[f64], trace: &mut Trace, dout: &[f64], scale: f64, grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.param_count);
        debug_assert_eq!(dout.len(), self.spec.output_dim);
        let mut delta = std::mem::take(&mut trace.delta);
        let mut delta_prev = std::mem::take(&mut trace.delta_prev);
        delta.clear();
        delta.extend(dout.iter().map(|d| d * scale));

        for k in (0..self.dims.len()).rev() {
            let (fan_in, fan_out) = self.dims[k];
            let (w_off, b_off) = self.offsets[k];
            let input = &trace.acts[k];

            for (g, d) in grad[b_off..b_off + fan_out].iter_mut().zip(&delta) {
                *g += d;
            }
            for i in 0..fan_in {
                let xi = input[i];
                if xi == 0.0 {
                    continue;
                }
                let g_row = &mut grad[w_off + i * fan_out..w_off + (i + 1) * fan_out];
                for (g, d) in g_row.iter_mut().zip(&delta) {
                    *g += xi * d;
                }
            }

            if k > 0 {
                // ReLU derivative: the layer input is the post-ReLU activation,
                // which is zero exactly where the gate is closed.
                delta_prev.clear();
                delta_prev.resize(fan_in, 0.0);
                for i in 0..fan_in {
                    if input[i] <= 0.0 {
                        continue;
                    }
                    let row = &params[w_off + i * fan_out..w_off + (i + 1) * fan_out];
                    delta_prev[i] = row.iter().zip(&delta).map(|(w, d)| w * d).sum();
                }
                std::mem::swap(&mut delta, &mut delta_prev);
            }
        }
        trace.delta = delta;
        trace.delta_prev = delta_prev;
    }
}
