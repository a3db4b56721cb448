//! Conditional VAE over attenuation profiles.
//!
//! The encoder maps a normalized profile plus a 6-dim condition vector to a
//! Gaussian latent posterior (mu, log-variance); the decoder maps a latent
//! draw plus the condition back to a normalized profile. Training maximizes
//! the evidence lower bound: Gaussian reconstruction log-likelihood with a
//! fixed observation scale minus `beta` times the KL divergence between the
//! posterior and the standard-normal latent prior. Generation draws
//! `z ~ N(0, I)` and decodes, conditioned on states never seen in training.
//!
//! The latent prior is fixed to N(0, I): conditioning enters encoder and
//! decoder as concatenated inputs rather than through a learned prior
//! network.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffraction::AttenuationProfile;
use crate::geometry::TargetState;
use crate::nn::{Activation, LayerKind, Network, NnError, AdamState, Tensor};
use crate::sampler::{Normalization, TrainingSet};
use crate::seeding::{randn, seed_stream};

/// Condition vector dimension: (x, y, phi, h_s, w_s1, w_s2).
pub const COND_DIM: usize = 6;

const LOGVAR_CLAMP: f64 = 10.0;

/// Batch slice processed per parallel task; fixed so gradient reduction
/// order (and therefore training) is bit-identical at any thread count.
const GRAD_CHUNK: usize = 8;

#[derive(Debug, Error)]
pub enum CvaeError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("invalid configuration: {0}")]
    BadConfig(&'static str),
    #[error("input shape mismatch: {0}")]
    BadInput(String),
}

/// Width/channel plan of the encoder/decoder stacks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvaeArch {
    pub enc_embed: usize,
    pub enc_shape: (usize, usize),
    /// (out_ch, kernel, stride, pad) per stage.
    pub enc_convs: Vec<(usize, usize, usize, usize)>,
    pub enc_hidden: usize,
    pub dec_embed: usize,
    pub dec_shape: (usize, usize),
    pub dec_deconvs: Vec<(usize, usize, usize, usize)>,
}

impl CvaeArch {
    /// Default stacks: dense embedding, two strided conv stages and a dense
    /// head on the encoder; mirrored deconv stages on the decoder.
    pub fn standard() -> Self {
        Self {
            enc_embed: 256,
            enc_shape: (16, 16),
            enc_convs: vec![(32, 3, 2, 1), (64, 3, 2, 1)],
            enc_hidden: 128,
            dec_embed: 64,
            dec_shape: (16, 4),
            dec_deconvs: vec![(16, 3, 2, 1), (8, 3, 2, 1)],
        }
    }

    /// Scaled-down stacks with the same layer kinds, for gradient checks.
    pub fn tiny() -> Self {
        Self {
            enc_embed: 32,
            enc_shape: (8, 4),
            enc_convs: vec![(8, 3, 2, 1), (8, 3, 2, 1)],
            enc_hidden: 16,
            dec_embed: 16,
            dec_shape: (8, 2),
            dec_deconvs: vec![(8, 3, 2, 1), (4, 3, 2, 1)],
        }
    }

    pub fn encoder_layers(&self, f: usize, z: usize) -> Vec<LayerKind> {
        let mut layers = vec![
            LayerKind::Dense { in_dim: f + COND_DIM, out_dim: self.enc_embed },
            LayerKind::Act(Activation::Relu),
            LayerKind::Reshape { ch: self.enc_shape.0, len: self.enc_shape.1 },
        ];
        let mut ch = self.enc_shape.0;
        let mut len = self.enc_shape.1;
        for &(oc, k, s, p) in &self.enc_convs {
            layers.push(LayerKind::Conv1d { in_ch: ch, out_ch: oc, kernel: k, stride: s, pad: p });
            layers.push(LayerKind::Act(Activation::Relu));
            ch = oc;
            len = (len + 2 * p - k) / s + 1;
        }
        layers.push(LayerKind::Dense { in_dim: ch * len, out_dim: self.enc_hidden });
        layers.push(LayerKind::Act(Activation::Relu));
        layers.push(LayerKind::Dense { in_dim: self.enc_hidden, out_dim: 2 * z });
        layers
    }

    pub fn decoder_layers(&self, f: usize, z: usize) -> Vec<LayerKind> {
        let mut layers = vec![
            LayerKind::Dense { in_dim: z + COND_DIM, out_dim: self.dec_embed },
            LayerKind::Act(Activation::Relu),
            LayerKind::Reshape { ch: self.dec_shape.0, len: self.dec_shape.1 },
        ];
        let mut ch = self.dec_shape.0;
        let mut len = self.dec_shape.1;
        for &(oc, k, s, p) in &self.dec_deconvs {
            layers
                .push(LayerKind::Deconv1d { in_ch: ch, out_ch: oc, kernel: k, stride: s, pad: p });
            layers.push(LayerKind::Act(Activation::Relu));
            ch = oc;
            len = (len - 1) * s + k - 2 * p;
        }
        layers.push(LayerKind::Dense { in_dim: ch * len, out_dim: f });
        layers
    }
}

/// Trained (or training) conditional VAE.
#[derive(Debug, Clone, PartialEq)]
pub struct CvaeModel {
    pub f: usize,
    pub z: usize,
    pub beta: f64,
    /// Fixed observation scale of the decoder likelihood, normalized units.
    pub recon_sigma: f64,
    pub norm: Normalization,
    pub encoder: Network,
    pub decoder: Network,
}

impl CvaeModel {
    /// Fresh model with seed-deterministic initialization. The encoder head
    /// starts zeroed so an untrained model emits the latent prior exactly.
    pub fn new(
        f: usize,
        z: usize,
        beta: f64,
        recon_sigma: f64,
        norm: Normalization,
        arch: &CvaeArch,
        seed: u64,
    ) -> Result<Self, CvaeError> {
        if f == 0 || z == 0 {
            return Err(CvaeError::BadConfig("F and Z must be >= 1"));
        }
        if beta < 0.0 {
            return Err(CvaeError::BadConfig("beta must be >= 0"));
        }
        if !(recon_sigma > 0.0) {
            return Err(CvaeError::BadConfig("recon_sigma must be positive"));
        }
        if norm.profile_mean.len() != f {
            return Err(CvaeError::BadConfig("normalization length does not match F"));
        }
        let mut encoder = Network::new(arch.encoder_layers(f, z), seed ^ 0x5ca1ab1e);
        encoder.zero_last_parameterized();
        let decoder = Network::new(arch.decoder_layers(f, z), seed ^ 0xdecade);
        Ok(Self { f, z, beta, recon_sigma, norm, encoder, decoder })
    }

    /// Reassembles a model from serialized parts, validating parameter
    /// counts against the architecture descriptor.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        f: usize,
        z: usize,
        beta: f64,
        recon_sigma: f64,
        norm: Normalization,
        encoder_layers: Vec<LayerKind>,
        decoder_layers: Vec<LayerKind>,
        encoder_params: &[f64],
        decoder_params: &[f64],
    ) -> Result<Self, CvaeError> {
        if f == 0 || z == 0 || norm.profile_mean.len() != f {
            return Err(CvaeError::BadConfig("inconsistent model header"));
        }
        let mut encoder = Network::new(encoder_layers, 0);
        encoder.set_params(encoder_params)?;
        let mut decoder = Network::new(decoder_layers, 0);
        decoder.set_params(decoder_params)?;
        // reject stacks whose shapes cannot process an F-length profile
        let probe = Tensor::flat(vec![0.0; f + COND_DIM]);
        let (enc_out, _) = encoder.forward(&probe)?;
        if enc_out.size() != 2 * z {
            return Err(CvaeError::BadConfig("encoder output does not match 2Z"));
        }
        let probe_dec = Tensor::flat(vec![0.0; z + COND_DIM]);
        let (dec_out, _) = decoder.forward(&probe_dec)?;
        if dec_out.size() != f {
            return Err(CvaeError::BadConfig("decoder output does not match F"));
        }
        Ok(Self { f, z, beta, recon_sigma, norm, encoder, decoder })
    }

    /// Posterior parameters for a profile (dB) under a condition. The
    /// log-variance is clamped to [-10, 10].
    pub fn encode(
        &self,
        profile_db: &[f64],
        condition: &TargetState,
    ) -> Result<(Vec<f64>, Vec<f64>), CvaeError> {
        if profile_db.len() != self.f {
            return Err(CvaeError::BadInput(format!(
                "profile length {} != F = {}",
                profile_db.len(),
                self.f
            )));
        }
        let x = self.norm.normalize_profile(profile_db);
        let c = self.norm.normalize_condition(condition);
        let mut input = x;
        input.extend_from_slice(&c);
        let (out, _) = self.encoder.forward(&Tensor::flat(input))?;
        let mu = out.data[..self.z].to_vec();
        let log_var =
            out.data[self.z..].iter().map(|v| v.clamp(-LOGVAR_CLAMP, LOGVAR_CLAMP)).collect();
        Ok((mu, log_var))
    }

    /// Decodes a latent vector under a normalized condition; returns the
    /// normalized profile.
    fn decode_normalized(&self, z: &[f64], cond_norm: &[f64; 6]) -> Result<Vec<f64>, CvaeError> {
        let mut input = z.to_vec();
        input.extend_from_slice(cond_norm);
        let (out, _) = self.decoder.forward(&Tensor::flat(input))?;
        Ok(out.data)
    }

    /// Decodes the posterior mean for a profile: encode, take mu, decode.
    pub fn reconstruct(
        &self,
        profile_db: &[f64],
        condition: &TargetState,
    ) -> Result<Vec<f64>, CvaeError> {
        let (mu, _) = self.encode(profile_db, condition)?;
        let c = self.norm.normalize_condition(condition);
        Ok(self.norm.denormalize_profile(&self.decode_normalized(&mu, &c)?))
    }

    /// `n` conditional draws: `z ~ N(0, I_Z)`, decoded and de-normalized to
    /// dB. Deterministic under a fixed rng stream.
    pub fn generate(
        &self,
        condition: &TargetState,
        n: usize,
        rng: &mut impl Rng,
    ) -> Result<Vec<AttenuationProfile>, CvaeError> {
        let c = self.norm.normalize_condition(condition);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let z: Vec<f64> = (0..self.z).map(|_| randn(rng)).collect();
            let values = self.norm.denormalize_profile(&self.decode_normalized(&z, &c)?);
            out.push(AttenuationProfile { values, condition: *condition });
        }
        Ok(out)
    }

    /// As `generate` but over pre-drawn latent vectors; used by the MAP
    /// search so every candidate sees common random numbers.
    pub fn generate_with_latents(
        &self,
        condition: &TargetState,
        latents: &[Vec<f64>],
    ) -> Result<Vec<Vec<f64>>, CvaeError> {
        let c = self.norm.normalize_condition(condition);
        latents
            .iter()
            .map(|z| Ok(self.norm.denormalize_profile(&self.decode_normalized(z, &c)?)))
            .collect()
    }

    /// Negative mean ELBO and parameter gradients over a batch of raw
    /// (profile-dB, condition) pairs with externally supplied latent noise.
    pub fn elbo(
        &self,
        batch: &[(Vec<f64>, TargetState)],
        eps: &[Vec<f64>],
    ) -> Result<ElboOutput, CvaeError> {
        if batch.is_empty() {
            return Err(CvaeError::BadConfig("batch must be non-empty"));
        }
        if batch.len() != eps.len() {
            return Err(CvaeError::BadInput("eps count != batch size".into()));
        }
        let items: Vec<NormalizedItem> = batch
            .iter()
            .map(|(p, c)| {
                if p.len() != self.f {
                    return Err(CvaeError::BadInput(format!(
                        "profile length {} != F = {}",
                        p.len(),
                        self.f
                    )));
                }
                Ok(NormalizedItem {
                    x: self.norm.normalize_profile(p),
                    c: self.norm.normalize_condition(c),
                })
            })
            .collect::<Result<_, _>>()?;
        let idx: Vec<usize> = (0..items.len()).collect();
        self.elbo_normalized(&items, &idx, eps)
    }

    /// Batch ELBO over pre-normalized items (training hot path).
    fn elbo_normalized(
        &self,
        items: &[NormalizedItem],
        indices: &[usize],
        eps: &[Vec<f64>],
    ) -> Result<ElboOutput, CvaeError> {
        let chunks: Vec<(f64, Vec<f64>, Vec<f64>)> = indices
            .par_chunks(GRAD_CHUNK)
            .enumerate()
            .map(|(ci, chunk)| {
                let mut loss = 0.0;
                let mut genc = vec![0.0; self.encoder.param_count()];
                let mut gdec = vec![0.0; self.decoder.param_count()];
                for (off, &i) in chunk.iter().enumerate() {
                    let e = &eps[ci * GRAD_CHUNK + off];
                    loss += self.elbo_item(&items[i], e, &mut genc, &mut gdec)?;
                }
                Ok((loss, genc, gdec))
            })
            .collect::<Result<_, CvaeError>>()?;
        let n = indices.len() as f64;
        let mut loss = 0.0;
        let mut genc = vec![0.0; self.encoder.param_count()];
        let mut gdec = vec![0.0; self.decoder.param_count()];
        for (l, ge, gd) in &chunks {
            loss += l;
            for (a, b) in genc.iter_mut().zip(ge) {
                *a += b;
            }
            for (a, b) in gdec.iter_mut().zip(gd) {
                *a += b;
            }
        }
        loss /= n;
        for g in &mut genc {
            *g /= n;
        }
        for g in &mut gdec {
            *g /= n;
        }
        Ok(ElboOutput { loss, encoder_grads: genc, decoder_grads: gdec })
    }

    /// Single-item loss; gradients accumulate into the chunk buffers.
    fn elbo_item(
        &self,
        item: &NormalizedItem,
        eps: &[f64],
        genc: &mut [f64],
        gdec: &mut [f64],
    ) -> Result<f64, CvaeError> {
        let zdim = self.z;
        let mut enc_in = item.x.clone();
        enc_in.extend_from_slice(&item.c);
        let (enc_out, enc_cache) = self.encoder.forward(&Tensor::flat(enc_in))?;
        let mu = &enc_out.data[..zdim];
        let lv_raw = &enc_out.data[zdim..];
        let lv: Vec<f64> = lv_raw.iter().map(|v| v.clamp(-LOGVAR_CLAMP, LOGVAR_CLAMP)).collect();
        let sigma_half: Vec<f64> = lv.iter().map(|v| (0.5 * v).exp()).collect();
        let zvec: Vec<f64> =
            mu.iter().zip(&sigma_half).zip(eps).map(|((m, s), e)| m + s * e).collect();

        let mut dec_in = zvec;
        dec_in.extend_from_slice(&item.c);
        let (xhat, dec_cache) = self.decoder.forward(&Tensor::flat(dec_in))?;

        let inv_s2 = 1.0 / (self.recon_sigma * self.recon_sigma);
        let norm_const =
            self.f as f64 * (self.recon_sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
        let mut recon = norm_const;
        let mut g_xhat = vec![0.0; self.f];
        for i in 0..self.f {
            let r = xhat.data[i] - item.x[i];
            recon += 0.5 * r * r * inv_s2;
            g_xhat[i] = r * inv_s2;
        }
        let kl = kl_standard_normal(mu, &lv);
        let loss = recon + self.beta * kl;

        let g_dec_in = self.decoder.backward_into(&dec_cache, &Tensor::flat(g_xhat), gdec)?;
        let gz = &g_dec_in.data[..zdim];

        let mut g_enc_out = vec![0.0; 2 * zdim];
        for i in 0..zdim {
            g_enc_out[i] = gz[i] + self.beta * mu[i];
            let within = lv_raw[i].abs() < LOGVAR_CLAMP;
            if within {
                let g_from_z = gz[i] * 0.5 * sigma_half[i] * eps[i];
                let g_from_kl = self.beta * 0.5 * (lv[i].exp() - 1.0);
                g_enc_out[zdim + i] = g_from_z + g_from_kl;
            }
        }
        self.encoder.backward_into(&enc_cache, &Tensor::flat(g_enc_out), genc)?;
        Ok(loss)
    }

    /// Validation loss with fixed noise, no gradients.
    fn loss_only(&self, items: &[NormalizedItem], indices: &[usize], eps: &[Vec<f64>]) -> Result<f64, CvaeError> {
        let losses: Vec<f64> = indices
            .par_iter()
            .enumerate()
            .map(|(j, &i)| {
                let item = &items[i];
                let zdim = self.z;
                let mut enc_in = item.x.clone();
                enc_in.extend_from_slice(&item.c);
                let (enc_out, _) = self.encoder.forward(&Tensor::flat(enc_in))?;
                let mu = &enc_out.data[..zdim];
                let lv: Vec<f64> = enc_out.data[zdim..]
                    .iter()
                    .map(|v| v.clamp(-LOGVAR_CLAMP, LOGVAR_CLAMP))
                    .collect();
                let zvec: Vec<f64> = mu
                    .iter()
                    .zip(&lv)
                    .zip(&eps[j])
                    .map(|((m, v), e)| m + (0.5 * v).exp() * e)
                    .collect();
                let mut dec_in = zvec;
                dec_in.extend_from_slice(&item.c);
                let (xhat, _) = self.decoder.forward(&Tensor::flat(dec_in))?;
                let inv_s2 = 1.0 / (self.recon_sigma * self.recon_sigma);
                let mut recon = self.f as f64
                    * (self.recon_sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
                for i in 0..self.f {
                    let r = xhat.data[i] - item.x[i];
                    recon += 0.5 * r * r * inv_s2;
                }
                Ok(recon + self.beta * kl_standard_normal(mu, &lv))
            })
            .collect::<Result<_, CvaeError>>()?;
        Ok(losses.iter().sum::<f64>() / losses.len() as f64)
    }
}

struct NormalizedItem {
    x: Vec<f64>,
    c: [f64; 6],
}

/// Loss and gradients of one ELBO evaluation.
#[derive(Debug, Clone)]
pub struct ElboOutput {
    /// Negative mean ELBO (minimization objective).
    pub loss: f64,
    pub encoder_grads: Vec<f64>,
    pub decoder_grads: Vec<f64>,
}

/// `z = mu + exp(log_var / 2) .* eps`.
pub fn reparameterize(mu: &[f64], log_var: &[f64], eps: &[f64]) -> Vec<f64> {
    mu.iter().zip(log_var).zip(eps).map(|((m, v), e)| m + (0.5 * v).exp() * e).collect()
}

/// Closed-form KL divergence of `N(mu, sigma^2)` against the standard
/// normal: `0.5 * sum(mu^2 + sigma^2 - 1 - log sigma^2)`.
pub fn kl_standard_normal(mu: &[f64], log_var: &[f64]) -> f64 {
    mu.iter()
        .zip(log_var)
        .map(|(m, v)| 0.5 * (m * m + v.exp() - 1.0 - v))
        .sum()
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub beta: f64,
    pub z: usize,
    pub patience: usize,
    pub recon_sigma: f64,
    pub arch: CvaeArch,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 64,
            learning_rate: 1e-3,
            seed: 42,
            beta: 0.05,
            z: 16,
            patience: 20,
            recon_sigma: 0.1,
            arch: CvaeArch::standard(),
        }
    }
}

/// Per-epoch losses; `best_val` is the running minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub best_val: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub history: Vec<EpochStats>,
    pub encoder_params: usize,
    pub decoder_params: usize,
    pub stopped_early: bool,
}

/// Trains a model on the set with a 90/10 train/validation split, Adam, and
/// early stopping; returns the parameters with the best validation loss.
/// Seed-deterministic at any thread count.
pub fn train(dataset: &TrainingSet, cfg: &TrainConfig) -> Result<(CvaeModel, TrainReport), CvaeError> {
    if dataset.records.is_empty() {
        return Err(CvaeError::BadConfig("dataset must be non-empty"));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(CvaeError::BadConfig("epochs and batch_size must be positive"));
    }
    if cfg.batch_size > dataset.records.len() {
        return Err(CvaeError::BadConfig("batch_size exceeds dataset size"));
    }
    let mut rng = seed_stream(cfg.seed, 0);
    let n = dataset.records.len();
    let items: Vec<NormalizedItem> = dataset
        .records
        .iter()
        .map(|r| NormalizedItem {
            x: dataset.normalization.normalize_profile(&r.profile),
            c: dataset.normalization.normalize_condition(&r.condition),
        })
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    shuffle(&mut order, &mut rng);
    let val_count = n / 10;
    let (train_idx, val_idx): (Vec<usize>, Vec<usize>) = if val_count == 0 {
        (order.clone(), order.clone())
    } else {
        let split = n - val_count;
        (order[..split].to_vec(), order[split..].to_vec())
    };

    let mut model = CvaeModel::new(
        dataset.f,
        cfg.z,
        cfg.beta,
        cfg.recon_sigma,
        dataset.normalization.clone(),
        &cfg.arch,
        cfg.seed,
    )?;
    let val_eps: Vec<Vec<f64>> =
        val_idx.iter().map(|_| (0..cfg.z).map(|_| randn(&mut rng)).collect()).collect();

    let mut adam_enc = AdamState::new(model.encoder.param_count(), cfg.learning_rate);
    let mut adam_dec = AdamState::new(model.decoder.param_count(), cfg.learning_rate);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best_val = f64::INFINITY;
    let mut best_params: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut bad_epochs = 0usize;
    let mut stopped_early = false;

    let mut epoch_order = train_idx.clone();
    for epoch in 0..cfg.epochs {
        shuffle(&mut epoch_order, &mut rng);
        let eps: Vec<Vec<f64>> =
            epoch_order.iter().map(|_| (0..cfg.z).map(|_| randn(&mut rng)).collect()).collect();
        let mut train_loss = 0.0;
        let mut seen = 0usize;
        for (batch, batch_eps) in
            epoch_order.chunks(cfg.batch_size).zip(eps.chunks(cfg.batch_size))
        {
            let out = model.elbo_normalized(&items, batch, batch_eps)?;
            if !out.loss.is_finite() {
                return Err(CvaeError::Diverged { epoch });
            }
            train_loss += out.loss * batch.len() as f64;
            seen += batch.len();
            adam_enc.step(model.encoder.params_mut(), &out.encoder_grads);
            adam_dec.step(model.decoder.params_mut(), &out.decoder_grads);
        }
        train_loss /= seen as f64;
        let val_loss = model.loss_only(&items, &val_idx, &val_eps)?;
        if !val_loss.is_finite() {
            return Err(CvaeError::Diverged { epoch });
        }
        if val_loss < best_val {
            best_val = val_loss;
            best_params =
                Some((model.encoder.params().to_vec(), model.decoder.params().to_vec()));
            bad_epochs = 0;
        } else {
            bad_epochs += 1;
        }
        history.push(EpochStats { epoch, train_loss, val_loss, best_val });
        if bad_epochs > cfg.patience {
            stopped_early = true;
            break;
        }
    }
    if let Some((pe, pd)) = best_params {
        model.encoder.set_params(&pe)?;
        model.decoder.set_params(&pd)?;
    }
    let report = TrainReport {
        history,
        encoder_params: model.encoder.param_count(),
        decoder_params: model.decoder.param_count(),
        stopped_early,
    };
    Ok((model, report))
}

/// Fisher-Yates with the given stream.
fn shuffle(v: &mut [usize], rng: &mut impl Rng) {
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
}
