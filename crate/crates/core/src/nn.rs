//! Minimal neural substrate: sequential stacks of dense, 1-D convolution and
//! 1-D transposed-convolution layers with exact analytic gradients and an
//! adaptive-moment optimizer. No autodiff graph; the models here are plain
//! layer sequences, so fixed-order backprop is all that is needed.
//!
//! Parameters of a whole network live in one flat `Vec<f64>` (layer-major),
//! which keeps the optimizer, serialization and finite-difference checks
//! trivial.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("layer {index} ({kind}): {detail}")]
    Shape { index: usize, kind: String, detail: String },
    #[error("stale cache: cache does not match this network/input")]
    StaleCache,
    #[error("parameter vector length {got} does not match network ({want})")]
    ParamLength { got: usize, want: usize },
}

/// Values with a `(channels, length)` shape; flat vectors use one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub ch: usize,
    pub len: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn flat(data: Vec<f64>) -> Self {
        let len = data.len();
        Self { ch: 1, len, data }
    }

    pub fn shaped(ch: usize, len: usize, data: Vec<f64>) -> Self {
        assert_eq!(ch * len, data.len(), "shape inconsistent with value count");
        Self { ch, len, data }
    }

    pub fn zeros(ch: usize, len: usize) -> Self {
        Self { ch, len, data: vec![0.0; ch * len] }
    }

    pub fn size(&self) -> usize {
        self.ch * self.len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

/// One layer of a sequential network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "layer", rename_all = "snake_case")]
pub enum LayerKind {
    Dense { in_dim: usize, out_dim: usize },
    Conv1d { in_ch: usize, out_ch: usize, kernel: usize, stride: usize, pad: usize },
    /// Exact adjoint of the matching `Conv1d` as a linear map; the weight is
    /// stored in the matching conv's `[in_ch][out_ch][kernel]` layout.
    Deconv1d { in_ch: usize, out_ch: usize, kernel: usize, stride: usize, pad: usize },
    Act(Activation),
    Reshape { ch: usize, len: usize },
}

impl LayerKind {
    pub fn param_count(&self) -> usize {
        match *self {
            LayerKind::Dense { in_dim, out_dim } => in_dim * out_dim + out_dim,
            LayerKind::Conv1d { in_ch, out_ch, kernel, .. }
            | LayerKind::Deconv1d { in_ch, out_ch, kernel, .. } => {
                in_ch * out_ch * kernel + out_ch
            }
            LayerKind::Act(_) | LayerKind::Reshape { .. } => 0,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            LayerKind::Dense { .. } => "dense",
            LayerKind::Conv1d { .. } => "conv1d",
            LayerKind::Deconv1d { .. } => "deconv1d",
            LayerKind::Act(_) => "activation",
            LayerKind::Reshape { .. } => "reshape",
        }
    }

    /// Output shape for an input shape, or a description of the mismatch.
    fn out_shape(&self, ch: usize, len: usize) -> Result<(usize, usize), String> {
        match *self {
            LayerKind::Dense { in_dim, out_dim } => {
                if ch * len != in_dim {
                    Err(format!("expected {in_dim} inputs, got {ch}x{len}"))
                } else {
                    Ok((1, out_dim))
                }
            }
            LayerKind::Conv1d { in_ch, out_ch, kernel, stride, pad } => {
                if ch != in_ch {
                    return Err(format!("expected {in_ch} channels, got {ch}"));
                }
                let padded = len + 2 * pad;
                if padded < kernel || stride == 0 {
                    return Err(format!("kernel {kernel} exceeds padded length {padded}"));
                }
                Ok((out_ch, (padded - kernel) / stride + 1))
            }
            LayerKind::Deconv1d { in_ch, out_ch, kernel, stride, pad } => {
                if ch != in_ch {
                    return Err(format!("expected {in_ch} channels, got {ch}"));
                }
                if len == 0 || stride == 0 {
                    return Err("empty input".into());
                }
                let full = (len - 1) * stride + kernel;
                if full < 2 * pad + 1 {
                    return Err(format!("padding {pad} swallows the whole output"));
                }
                Ok((out_ch, full - 2 * pad))
            }
            LayerKind::Act(_) => Ok((ch, len)),
            LayerKind::Reshape { ch: rch, len: rlen } => {
                if rch * rlen != ch * len {
                    Err(format!("cannot reshape {ch}x{len} into {rch}x{rlen}"))
                } else {
                    Ok((rch, rlen))
                }
            }
        }
    }
}

/// Intermediate values from one forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct Cache {
    inputs: Vec<Tensor>,
    out_ch: usize,
    out_len: usize,
    param_len: usize,
}

/// A sequential network with a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<LayerKind>,
    offsets: Vec<usize>,
    params: Vec<f64>,
}

impl Network {
    /// Builds the network with fan-scaled uniform initialization
    /// (`+-sqrt(6/(fan_in+fan_out))`), biases zero, seed-deterministic.
    pub fn new(layers: Vec<LayerKind>, seed: u64) -> Self {
        let mut offsets = Vec::with_capacity(layers.len() + 1);
        let mut total = 0usize;
        for l in &layers {
            offsets.push(total);
            total += l.param_count();
        }
        offsets.push(total);
        let mut params = vec![0.0; total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (i, l) in layers.iter().enumerate() {
            let (w_count, limit) = match *l {
                LayerKind::Dense { in_dim, out_dim } => {
                    (in_dim * out_dim, (6.0 / (in_dim + out_dim) as f64).sqrt())
                }
                LayerKind::Conv1d { in_ch, out_ch, kernel, .. }
                | LayerKind::Deconv1d { in_ch, out_ch, kernel, .. } => (
                    in_ch * out_ch * kernel,
                    (6.0 / ((in_ch * kernel) + (out_ch * kernel)) as f64).sqrt(),
                ),
                _ => (0, 0.0),
            };
            let base = offsets[i];
            for w in params[base..base + w_count].iter_mut() {
                *w = rng.random_range(-limit..limit);
            }
            // biases stay zero
        }
        Self { layers, offsets, params }
    }

    pub fn layers(&self) -> &[LayerKind] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<(), NnError> {
        if p.len() != self.params.len() {
            return Err(NnError::ParamLength { got: p.len(), want: self.params.len() });
        }
        self.params.copy_from_slice(p);
        Ok(())
    }

    /// Zeroes the parameters of the last parameterized layer. Used for
    /// encoder heads that must start at the latent prior.
    pub fn zero_last_parameterized(&mut self) {
        for (i, l) in self.layers.iter().enumerate().rev() {
            let n = l.param_count();
            if n > 0 {
                let base = self.offsets[i];
                self.params[base..base + n].fill(0.0);
                return;
            }
        }
    }

    fn shape_err(&self, index: usize, detail: String) -> NnError {
        NnError::Shape { index, kind: self.layers[index].name().to_string(), detail }
    }

    /// Runs the stack, returning the output and the cache for `backward`.
    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, Cache), NnError> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut cur = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let (och, olen) = layer
                .out_shape(cur.ch, cur.len)
                .map_err(|d| self.shape_err(i, d))?;
            let p = &self.params[self.offsets[i]..self.offsets[i + 1]];
            let out = apply_layer(layer, p, &cur, och, olen);
            debug_assert!(out.data.iter().all(|v| v.is_finite()), "non-finite value after layer {i}");
            inputs.push(cur);
            cur = out;
        }
        let cache =
            Cache { inputs, out_ch: cur.ch, out_len: cur.len, param_len: self.params.len() };
        Ok((cur, cache))
    }

    /// Exact gradients of the forward map: parameter gradients (flat, same
    /// layout as `params`) and the gradient w.r.t. the input.
    pub fn backward(&self, cache: &Cache, grad_out: &Tensor) -> Result<(Vec<f64>, Tensor), NnError> {
        let mut grads = vec![0.0; self.params.len()];
        let gx = self.backward_into(cache, grad_out, &mut grads)?;
        Ok((grads, gx))
    }

    /// As [`Network::backward`] but accumulates (`+=`) the parameter
    /// gradients into a caller-owned buffer, avoiding one allocation per
    /// sample on the training path.
    pub fn backward_into(
        &self,
        cache: &Cache,
        grad_out: &Tensor,
        grads: &mut [f64],
    ) -> Result<Tensor, NnError> {
        if cache.inputs.len() != self.layers.len()
            || cache.param_len != self.params.len()
            || grad_out.ch != cache.out_ch
            || grad_out.len != cache.out_len
        {
            return Err(NnError::StaleCache);
        }
        if grads.len() != self.params.len() {
            return Err(NnError::ParamLength { got: grads.len(), want: self.params.len() });
        }
        let mut gy = grad_out.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let x = &cache.inputs[i];
            let p = &self.params[self.offsets[i]..self.offsets[i + 1]];
            let gp = &mut grads[self.offsets[i]..self.offsets[i + 1]];
            gy = backprop_layer(layer, p, x, &gy, gp);
        }
        Ok(gy)
    }
}

fn apply_layer(layer: &LayerKind, p: &[f64], x: &Tensor, och: usize, olen: usize) -> Tensor {
    match *layer {
        LayerKind::Dense { in_dim, out_dim } => {
            let (w, b) = p.split_at(in_dim * out_dim);
            let mut y = vec![0.0; out_dim];
            for o in 0..out_dim {
                let row = &w[o * in_dim..(o + 1) * in_dim];
                let mut acc = b[o];
                for (wi, xi) in row.iter().zip(&x.data) {
                    acc += wi * xi;
                }
                y[o] = acc;
            }
            Tensor::flat(y)
        }
        LayerKind::Conv1d { in_ch, out_ch, kernel, stride, pad } => {
            let (w, b) = p.split_at(in_ch * out_ch * kernel);
            let l_in = x.len;
            let mut y = vec![0.0; out_ch * olen];
            for oc in 0..out_ch {
                for t in 0..olen {
                    let base = (t * stride) as isize - pad as isize;
                    let mut acc = b[oc];
                    for ic in 0..in_ch {
                        let wrow = &w[(oc * in_ch + ic) * kernel..(oc * in_ch + ic + 1) * kernel];
                        let xrow = &x.data[ic * l_in..(ic + 1) * l_in];
                        for (kk, wv) in wrow.iter().enumerate() {
                            let j = base + kk as isize;
                            if j >= 0 && (j as usize) < l_in {
                                acc += wv * xrow[j as usize];
                            }
                        }
                    }
                    y[oc * olen + t] = acc;
                }
            }
            Tensor::shaped(och, olen, y)
        }
        LayerKind::Deconv1d { in_ch, out_ch, kernel, stride, pad } => {
            let (w, b) = p.split_at(in_ch * out_ch * kernel);
            let l_in = x.len;
            let mut y = vec![0.0; out_ch * olen];
            for oc in 0..out_ch {
                for v in &mut y[oc * olen..(oc + 1) * olen] {
                    *v = b[oc];
                }
            }
            for ic in 0..in_ch {
                let xrow = &x.data[ic * l_in..(ic + 1) * l_in];
                for (t, xv) in xrow.iter().enumerate() {
                    let base = (t * stride) as isize - pad as isize;
                    for oc in 0..out_ch {
                        let wrow = &w[(ic * out_ch + oc) * kernel..(ic * out_ch + oc + 1) * kernel];
                        let yrow = &mut y[oc * olen..(oc + 1) * olen];
                        for (kk, wv) in wrow.iter().enumerate() {
                            let j = base + kk as isize;
                            if j >= 0 && (j as usize) < olen {
                                yrow[j as usize] += wv * xv;
                            }
                        }
                    }
                }
            }
            Tensor::shaped(och, olen, y)
        }
        LayerKind::Act(a) => {
            let data = x
                .data
                .iter()
                .map(|&v| match a {
                    Activation::Relu => v.max(0.0),
                    Activation::Tanh => v.tanh(),
                    Activation::Identity => v,
                })
                .collect();
            Tensor { ch: x.ch, len: x.len, data }
        }
        LayerKind::Reshape { ch, len } => Tensor::shaped(ch, len, x.data.clone()),
    }
}

fn backprop_layer(layer: &LayerKind, p: &[f64], x: &Tensor, gy: &Tensor, gp: &mut [f64]) -> Tensor {
    match *layer {
        LayerKind::Dense { in_dim, out_dim } => {
            let w = &p[..in_dim * out_dim];
            let (gw, gb) = gp.split_at_mut(in_dim * out_dim);
            let mut gx = vec![0.0; in_dim];
            for o in 0..out_dim
            {
                let g = gy.data[o];
                gb[o] += g;
                let wrow = &w[o * in_dim..(o + 1) * in_dim];
                let gwrow = &mut gw[o * in_dim..(o + 1) * in_dim];
                for i in 0..in_dim {
                    gwrow[i] += g * x.data[i];
                    gx[i] += g * wrow[i];
                }
            }
            Tensor { ch: x.ch, len: x.len, data: gx }
        }
        LayerKind::Conv1d { in_ch, out_ch, kernel, stride, pad } => {
            let w = &p[..in_ch * out_ch * kernel];
            let (gw, gb) = gp.split_at_mut(in_ch * out_ch * kernel);
            let l_in = x.len;
            let l_out = gy.len;
            let mut gx = vec![0.0; in_ch * l_in];
            for oc in 0..out_ch {
                for t in 0..l_out {
                    let g = gy.data[oc * l_out + t];
                    gb[oc] += g;
                    let base = (t * stride) as isize - pad as isize;
                    for ic in 0..in_ch {
                        let wrow = &w[(oc * in_ch + ic) * kernel..(oc * in_ch + ic + 1) * kernel];
                        let gwrow =
                            &mut gw[(oc * in_ch + ic) * kernel..(oc * in_ch + ic + 1) * kernel];
                        for kk in 0..kernel {
                            let j = base + kk as isize;
                            if j >= 0 && (j as usize) < l_in {
                                let ju = j as usize;
                                gwrow[kk] += g * x.data[ic * l_in + ju];
                                gx[ic * l_in + ju] += g * wrow[kk];
                            }
                        }
                    }
                }
            }
            Tensor { ch: in_ch, len: l_in, data: gx }
        }
        LayerKind::Deconv1d { in_ch, out_ch, kernel, stride, pad } => {
            let w = &p[..in_ch * out_ch * kernel];
            let (gw, gb) = gp.split_at_mut(in_ch * out_ch * kernel);
            let l_in = x.len;
            let l_out = gy.len;
            let mut gx = vec![0.0; in_ch * l_in];
            for oc in 0..out_ch {
                for j in 0..l_out {
                    gb[oc] += gy.data[oc * l_out + j];
                }
            }
            for ic in 0..in_ch {
                for t in 0..l_in {
                    let xv = x.data[ic * l_in + t];
                    let base = (t * stride) as isize - pad as isize;
                    let mut acc = 0.0;
                    for oc in 0..out_ch {
                        let wrow = &w[(ic * out_ch + oc) * kernel..(ic * out_ch + oc + 1) * kernel];
                        let gwrow =
                            &mut gw[(ic * out_ch + oc) * kernel..(ic * out_ch + oc + 1) * kernel];
                        for kk in 0..kernel {
                            let j = base + kk as isize;
                            if j >= 0 && (j as usize) < l_out {
                                let g = gy.data[oc * l_out + j as usize];
                                gwrow[kk] += g * xv;
                                acc += g * wrow[kk];
                            }
                        }
                    }
                    gx[ic * l_in + t] += acc;
                }
            }
            Tensor { ch: in_ch, len: l_in, data: gx }
        }
        LayerKind::Act(a) => {
            let data = x
                .data
                .iter()
                .zip(&gy.data)
                .map(|(&v, &g)| match a {
                    Activation::Relu => {
                        if v > 0.0 {
                            g
                        } else {
                            0.0
                        }
                    }
                    Activation::Tanh => {
                        let t = v.tanh();
                        g * (1.0 - t * t)
                    }
                    Activation::Identity => g,
                })
                .collect();
            Tensor { ch: x.ch, len: x.len, data }
        }
        LayerKind::Reshape { .. } => Tensor { ch: x.ch, len: x.len, data: gy.data.clone() },
    }
}

/// Adam optimizer state over one flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n: usize, lr: f64) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], step: 0, lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    /// Bias-corrected adaptive-moment update in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}
