//! Received-power model: free-space link budget, Gaussian fading, the
//! observation likelihood, and RSS marginalization through the generator.
//!
//! Per frequency, the received power is `P0 + w0` in free space and
//! `P0 - A + wT` with a body present, with `w0 ~ N(0, sigma0^2)` and
//! `wT ~ N(mu_T, sigma_T^2)` drawn independently per frequency.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cvae::{CvaeError, CvaeModel};
use crate::diffraction::{attenuation_profile, DiffractionError, QuadratureConfig};
use crate::geometry::{wavelength, GeometryError, LinkGeometry, TargetState};
use crate::seeding::randn;

#[derive(Debug, Error)]
pub enum RssError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Diffraction(#[from] DiffractionError),
    #[error(transparent)]
    Cvae(#[from] CvaeError),
    #[error("noise model invalid: {0}")]
    BadNoise(&'static str),
    #[error("length mismatch: {0}")]
    Shape(String),
}

/// Fading model: free-space std, and mean/std of the with-target term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Free-space fading std, dB.
    pub sigma0: f64,
    /// Mean excess term with a target present, dB.
    pub mu_t: f64,
    /// With-target fading std, dB; at least `sigma0`.
    pub sigma_t: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { sigma0: 1.0, mu_t: 2.0, sigma_t: 2.0 }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), RssError> {
        if !(self.sigma0 > 0.0) {
            return Err(RssError::BadNoise("sigma0 must be positive"));
        }
        if self.sigma_t < self.sigma0 {
            return Err(RssError::BadNoise("sigma_t must be >= sigma0"));
        }
        Ok(())
    }
}

/// Transmit power and boresight antenna gains for the Friis budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self { tx_power_dbm: 0.0, tx_gain_dbi: 0.0, rx_gain_dbi: 0.0 }
    }
}

/// Ground-truth class of a synthetic observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TruthLabel {
    FreeSpace,
    Target(TargetState),
}

/// Received power samples over the frequency grid, dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RssObservation {
    pub values: Vec<f64>,
    pub index: u64,
    pub truth: TruthLabel,
}

/// Free-space received power by the Friis equation:
/// `P0 = Ptx + Gtx + Grx + 20 log10(lambda / (4 pi d))`.
pub fn free_space_power(
    geom: &LinkGeometry,
    freq: f64,
    budget: &LinkBudget,
) -> Result<f64, RssError> {
    let lambda = wavelength(freq)?;
    Ok(budget.tx_power_dbm
        + budget.tx_gain_dbi
        + budget.rx_gain_dbi
        + 20.0 * (lambda / (4.0 * std::f64::consts::PI * geom.d)).log10())
}

/// `P0` per grid frequency.
pub fn free_space_power_grid(geom: &LinkGeometry, budget: &LinkBudget) -> Result<Vec<f64>, RssError> {
    geom.freq_grid.iter().map(|&f| free_space_power(geom, f, budget)).collect()
}

/// Synthesizes one observation: free-space fading only, or the diffraction
/// profile of `target` plus with-target fading, independently per frequency.
pub fn synth_rss(
    geom: &LinkGeometry,
    maybe_target: Option<&TargetState>,
    noise: &NoiseModel,
    quad: &QuadratureConfig,
    budget: &LinkBudget,
    index: u64,
    rng: &mut impl Rng,
) -> Result<RssObservation, RssError> {
    noise.validate()?;
    let p0 = free_space_power_grid(geom, budget)?;
    match maybe_target {
        None => {
            let values =
                p0.iter().map(|p| p + noise.sigma0 * randn(rng)).collect();
            Ok(RssObservation { values, index, truth: TruthLabel::FreeSpace })
        }
        Some(t) => {
            let profile = attenuation_profile(geom, t, quad)?;
            let values = p0
                .iter()
                .zip(&profile.values)
                .map(|(p, a)| p - a + noise.mu_t + noise.sigma_t * randn(rng))
                .collect();
            Ok(RssObservation { values, index, truth: TruthLabel::Target(*t) })
        }
    }
}

/// Log-density of an observation given an attenuation profile:
/// independent Gaussians `N(P0_f - A_f + mu_T, sigma_T^2)` per frequency.
pub fn likelihood(
    s_t: &[f64],
    attenuation: &[f64],
    noise: &NoiseModel,
    p0: &[f64],
) -> Result<f64, RssError> {
    if s_t.len() != attenuation.len() || s_t.len() != p0.len() {
        return Err(RssError::Shape(format!(
            "s_t {}, attenuation {}, p0 {}",
            s_t.len(),
            attenuation.len(),
            p0.len()
        )));
    }
    noise.validate()?;
    let ln_norm = (noise.sigma_t * (2.0 * std::f64::consts::PI).sqrt()).ln();
    let inv2s2 = 0.5 / (noise.sigma_t * noise.sigma_t);
    let mut acc = 0.0;
    for i in 0..s_t.len() {
        let r = s_t[i] - (p0[i] - attenuation[i] + noise.mu_t);
        acc -= ln_norm + r * r * inv2s2;
    }
    Ok(acc)
}

/// Binned mass function with fixed-width bins aligned to multiples of the
/// width; empty bins are omitted and masses sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// `(bin_low, bin_high, mass)` sorted by bin_low.
    pub bins: Vec<(f64, f64, f64)>,
}

impl Histogram {
    pub fn from_samples(samples: &[f64], bin_width: f64) -> Self {
        let mut counts: std::collections::BTreeMap<i64, usize> = std::collections::BTreeMap::new();
        for &s in samples {
            *counts.entry((s / bin_width).floor() as i64).or_insert(0) += 1;
        }
        let n = samples.len().max(1) as f64;
        let bins = counts
            .into_iter()
            .map(|(k, c)| (k as f64 * bin_width, (k + 1) as f64 * bin_width, c as f64 / n))
            .collect();
        Self { bin_width, bins }
    }

    pub fn total_mass(&self) -> f64 {
        self.bins.iter().map(|b| b.2).sum()
    }
}

/// Draws from the generated-RSS distribution at one frequency: sample an
/// attenuation profile from the generator, then the observation noise.
/// Returns the samples and their 0.5 dB-binned mass function.
pub fn marginal_rss(
    model: &CvaeModel,
    condition: &TargetState,
    noise: &NoiseModel,
    p0: &[f64],
    freq_index: usize,
    n: usize,
    rng: &mut impl Rng,
) -> Result<(Vec<f64>, Histogram), RssError> {
    noise.validate()?;
    if freq_index >= p0.len() || p0.len() != model.f {
        return Err(RssError::Shape(format!(
            "freq_index {} out of range for F = {}",
            freq_index,
            model.f
        )));
    }
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let profile = &model.generate(condition, 1, rng)?[0];
        let s = p0[freq_index] - profile.values[freq_index] + noise.mu_t
            + noise.sigma_t * randn(rng);
        samples.push(s);
    }
    Ok((samples.clone(), Histogram::from_samples(&samples, 0.5)))
}
