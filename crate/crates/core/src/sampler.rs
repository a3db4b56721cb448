//! Uncertainty sampling around nominal target states and training-set
//! construction.
//!
//! A nominal state stands for a marked position with imperfectly known
//! body placement: the true state is drawn uniformly from a small box
//! around it (position), an orientation interval, and an optional
//! multiplicative size jitter. Mapping draws through the diffraction model
//! yields samples of the physics prior for that nominal state.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffraction::{attenuation_profile, AttenuationProfile, DiffractionError, QuadratureConfig};
use crate::geometry::{GeometryError, LinkGeometry, TargetState};
use crate::seeding::seed_stream;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Diffraction(#[from] DiffractionError),
    #[error("100 consecutive draws left the link slab; nominal x = {x} too close to an antenna for a {dx} m box")]
    BoxLeavesLink { x: f64, dx: f64 },
    #[error("uncertainty config invalid: {0}")]
    BadConfig(&'static str),
    #[error("condition grid must be non-empty")]
    EmptyGrid,
}

/// Nominal condition: the marked state the generator is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NominalCondition {
    pub theta: TargetState,
}

impl NominalCondition {
    pub fn new(theta: TargetState) -> Self {
        Self { theta }
    }
}

/// Uniform uncertainty around a nominal condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyConfig {
    /// Side length of the uniform box along the LoS, m.
    pub dx: f64,
    /// Side length across the LoS, m.
    pub dy: f64,
    /// Orientation interval, subset of [-pi/2, pi/2].
    pub phi_range: (f64, f64),
    /// Relative uniform jitter on (h_s, w_s1, w_s2); 0 disables.
    pub size_jitter: f64,
}

impl Default for UncertaintyConfig {
    fn default() -> Self {
        let half_pi = std::f64::consts::FRAC_PI_2;
        Self { dx: 0.1, dy: 0.1, phi_range: (-half_pi, half_pi), size_jitter: 0.0 }
    }
}

impl UncertaintyConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if !(self.dx >= 0.0 && self.dy >= 0.0) {
            return Err(SamplerError::BadConfig("dx and dy must be >= 0"));
        }
        let half_pi = std::f64::consts::FRAC_PI_2 + 1e-12;
        if self.phi_range.0 > self.phi_range.1
            || self.phi_range.0 < -half_pi
            || self.phi_range.1 > half_pi
        {
            return Err(SamplerError::BadConfig("phi_range must be ordered inside [-pi/2, pi/2]"));
        }
        if !(0.0..1.0).contains(&self.size_jitter) {
            return Err(SamplerError::BadConfig("size_jitter must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Affine per-dimension normalization of condition vectors and profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    /// `(lo, hi)` physical range per condition dimension, mapped to [-1, 1].
    pub cond_ranges: [(f64, f64); 6],
    /// Per-frequency mean of profile values, dB.
    pub profile_mean: Vec<f64>,
    /// Per-frequency scale of profile values, dB.
    pub profile_scale: Vec<f64>,
}

impl Normalization {
    /// Condition ranges from the link geometry: x spans the link, y the
    /// monitored strip, phi its full interval, sizes their plausible spans.
    pub fn default_cond_ranges(d: f64) -> [(f64, f64); 6] {
        let half_pi = std::f64::consts::FRAC_PI_2;
        [(0.0, d), (-3.0, 3.0), (-half_pi, half_pi), (1.5, 2.0), (0.2, 0.7), (0.2, 0.7)]
    }

    pub fn normalize_condition(&self, theta: &TargetState) -> [f64; 6] {
        let raw = theta.feature_vector();
        let mut out = [0.0; 6];
        for i in 0..6 {
            let (lo, hi) = self.cond_ranges[i];
            out[i] = 2.0 * (raw[i] - lo) / (hi - lo) - 1.0;
        }
        out
    }

    pub fn normalize_profile(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(self.profile_mean.iter().zip(&self.profile_scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn denormalize_profile(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(self.profile_mean.iter().zip(&self.profile_scale))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }
}

/// One training record: nominal condition features and a profile drawn from
/// the uncertainty around them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub condition: TargetState,
    pub profile: Vec<f64>,
}

/// Training data in fixed order (condition-major, sample-minor) plus the
/// normalization computed from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub f: usize,
    pub conditions: usize,
    pub per_condition: usize,
    pub records: Vec<TrainingRecord>,
    pub normalization: Normalization,
}

/// Draws one state from the uncertainty box around `nominal`, resampling
/// (up to 100 tries) when the draw leaves the open link slab `0 < x < d`.
pub fn sample_state(
    nominal: &NominalCondition,
    unc: &UncertaintyConfig,
    geom: &LinkGeometry,
    rng: &mut impl Rng,
) -> Result<TargetState, SamplerError> {
    unc.validate()?;
    nominal.theta.validate()?;
    let t = &nominal.theta;
    for _ in 0..100 {
        let x = t.x + (rng.random::<f64>() - 0.5) * unc.dx;
        let y = t.y + (rng.random::<f64>() - 0.5) * unc.dy;
        let phi = if unc.phi_range.1 > unc.phi_range.0 {
            rng.random_range(unc.phi_range.0..unc.phi_range.1)
        } else {
            unc.phi_range.0
        };
        let (h_s, w_s1, w_s2) = if unc.size_jitter > 0.0 {
            let j = unc.size_jitter;
            let h_s = t.h_s * (1.0 + (rng.random::<f64>() - 0.5) * 2.0 * j);
            let w_s1 = t.w_s1 * (1.0 + (rng.random::<f64>() - 0.5) * 2.0 * j);
            let w_s2 = t.w_s2 * (1.0 + (rng.random::<f64>() - 0.5) * 2.0 * j);
            // keep the size ordering invariant under independent jitter
            (h_s, w_s1.max(w_s2), w_s1.min(w_s2))
        } else {
            (t.h_s, t.w_s1, t.w_s2)
        };
        if x > 0.0 && x < geom.d {
            return Ok(TargetState { x, y, phi, h_s, w_s1, w_s2 });
        }
    }
    Err(SamplerError::BoxLeavesLink { x: t.x, dx: unc.dx })
}

/// `n` independent prior samples: fresh state draws mapped through the
/// diffraction model. States are drawn serially from `rng`; the profile
/// evaluations run in parallel in fixed order.
pub fn sample_prior(
    nominal: &NominalCondition,
    unc: &UncertaintyConfig,
    geom: &LinkGeometry,
    quad: &QuadratureConfig,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<AttenuationProfile>, SamplerError> {
    let states: Vec<TargetState> =
        (0..n).map(|_| sample_state(nominal, unc, geom, rng)).collect::<Result<_, _>>()?;
    let profiles = states
        .par_iter()
        .map(|s| attenuation_profile(geom, s, quad))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(profiles)
}

/// Builds the training set: `per_condition` draws per grid point, record
/// order condition-major and sample-minor regardless of scheduling. Each
/// record gets its own seed substream `seed_stream(master_seed, index)`.
pub fn build_training_set(
    grid: &[NominalCondition],
    unc: &UncertaintyConfig,
    geom: &LinkGeometry,
    quad: &QuadratureConfig,
    per_condition: usize,
    master_seed: u64,
) -> Result<TrainingSet, SamplerError> {
    if grid.is_empty() {
        return Err(SamplerError::EmptyGrid);
    }
    unc.validate()?;
    let f = geom.n_freq();
    let total = grid.len() * per_condition;
    let records: Vec<TrainingRecord> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let c = idx / per_condition;
            let mut rng = seed_stream(master_seed, idx as u64);
            let state = sample_state(&grid[c], unc, geom, &mut rng)?;
            let profile = attenuation_profile(geom, &state, quad)?;
            Ok(TrainingRecord { condition: grid[c].theta, profile: profile.values })
        })
        .collect::<Result<Vec<_>, SamplerError>>()?;

    let mut mean = vec![0.0; f];
    for r in &records {
        for (m, v) in mean.iter_mut().zip(&r.profile) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= records.len() as f64;
    }
    let mut var = vec![0.0; f];
    for r in &records {
        for (s, (v, m)) in var.iter_mut().zip(r.profile.iter().zip(&mean)) {
            *s += (v - m) * (v - m);
        }
    }
    let scale: Vec<f64> =
        var.iter().map(|s| (s / records.len() as f64).sqrt().max(1e-6)).collect();

    Ok(TrainingSet {
        f,
        conditions: grid.len(),
        per_condition,
        records,
        normalization: Normalization {
            cond_ranges: Normalization::default_cond_ranges(geom.d),
            profile_mean: mean,
            profile_scale: scale,
        },
    })
}
