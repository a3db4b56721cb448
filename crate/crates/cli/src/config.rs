//! One-file JSON experiment configuration.
//!
//! Every block has defaults matching the reference setup: a 4 m link at
//! 0.99 m height, the 2.4-2.5 GHz band, a 1.80 x 0.55 x 0.25 m body on a
//! 0.25 m grid of 75 marked positions, fading (1, 2, 2) dB. `n_freq` is 16
//! at desk scale; 81 reproduces the full measurement band.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use rfshadow_core::cvae::{CvaeArch, TrainConfig};
use rfshadow_core::diffraction::QuadratureConfig;
use rfshadow_core::geometry::{AntennaPattern, LinkGeometry, TargetState};
use rfshadow_core::localize::CandidateGrid;
use rfshadow_core::rss::{LinkBudget, NoiseModel};
use rfshadow_core::sampler::UncertaintyConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryBlock {
    pub d_m: f64,
    pub h_m: f64,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub n_freq: usize,
    pub tx_pattern: AntennaPattern,
    pub rx_pattern: AntennaPattern,
}

impl Default for GeometryBlock {
    fn default() -> Self {
        Self {
            d_m: 4.0,
            h_m: 0.99,
            band_low_hz: 2.4e9,
            band_high_hz: 2.5e9,
            n_freq: 16,
            tx_pattern: AntennaPattern::Omnidirectional,
            rx_pattern: AntennaPattern::Omnidirectional,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BodyBlock {
    pub h_s_m: f64,
    pub w_s1_m: f64,
    pub w_s2_m: f64,
}

impl Default for BodyBlock {
    fn default() -> Self {
        Self { h_s_m: 1.80, w_s1_m: 0.55, w_s2_m: 0.25 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UncertaintyBlock {
    pub dx_m: f64,
    pub dy_m: f64,
    pub phi_low_rad: f64,
    pub phi_high_rad: f64,
    pub size_jitter: f64,
}

impl Default for UncertaintyBlock {
    fn default() -> Self {
        let half_pi = std::f64::consts::FRAC_PI_2;
        Self { dx_m: 0.1, dy_m: 0.1, phi_low_rad: -half_pi, phi_high_rad: half_pi, size_jitter: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureBlock {
    pub abs_tol: f64,
    pub max_depth: u32,
    pub init_tiles: (usize, usize),
    pub max_evals: u64,
}

impl Default for QuadratureBlock {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        Self { abs_tol: q.abs_tol, max_depth: q.max_depth, init_tiles: q.init_tiles, max_evals: q.max_evals }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseBlock {
    pub sigma0_db: f64,
    pub mu_t_db: f64,
    pub sigma_t_db: f64,
}

impl Default for NoiseBlock {
    fn default() -> Self {
        Self { sigma0_db: 1.0, mu_t_db: 2.0, sigma_t_db: 2.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudgetBlock {
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
}

impl Default for LinkBudgetBlock {
    fn default() -> Self {
        Self { tx_power_dbm: 0.0, tx_gain_dbi: 0.0, rx_gain_dbi: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvaeBlock {
    pub z: usize,
    pub beta: f64,
    pub recon_sigma: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub patience: usize,
}

impl Default for CvaeBlock {
    fn default() -> Self {
        Self {
            z: 16,
            beta: 0.05,
            recon_sigma: 0.1,
            epochs: 200,
            batch_size: 64,
            learning_rate: 1e-3,
            patience: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentBlock {
    /// Candidate grid extent along the LoS, m.
    pub grid_x: (f64, f64),
    /// Candidate grid extent across the LoS, m.
    pub grid_y: (f64, f64),
    pub grid_spacing_m: f64,
    /// Prior samples per grid condition in the training set.
    pub per_condition: usize,
    pub d_t_list_m: Vec<f64>,
    pub trials: usize,
    pub m_samples: usize,
    pub master_seed: u64,
    /// LoS sweep for `simulate`: (start, stop, step) in m at y = 0.
    pub sweep_x: (f64, f64, f64),
    /// Frequency used for Fresnel-region labeling; 0 = band center.
    pub classify_freq_hz: f64,
    /// Condition for `rss`/`generate`/`localize` runs: (x, y) in m.
    pub probe_position: (f64, f64),
    pub rss_freq_index: usize,
    pub rss_samples: usize,
    pub generate_count: usize,
}

impl Default for ExperimentBlock {
    fn default() -> Self {
        Self {
            grid_x: (0.25, 3.75),
            grid_y: (-0.5, 0.5),
            grid_spacing_m: 0.25,
            per_condition: 200,
            d_t_list_m: vec![1.0],
            trials: 200,
            m_samples: 256,
            master_seed: 42,
            sweep_x: (0.25, 3.75, 0.25),
            classify_freq_hz: 0.0,
            probe_position: (0.5, 0.0),
            rss_freq_index: 0,
            rss_samples: 20_000,
            generate_count: 100,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryBlock,
    pub body: BodyBlock,
    pub uncertainty: UncertaintyBlock,
    pub quadrature: QuadratureBlock,
    pub noise: NoiseBlock,
    pub link_budget: LinkBudgetBlock,
    pub cvae: CvaeBlock,
    pub experiment: ExperimentBlock,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn freq_grid(&self) -> Vec<f64> {
        let g = &self.geometry;
        if g.n_freq <= 1 {
            return vec![0.5 * (g.band_low_hz + g.band_high_hz)];
        }
        (0..g.n_freq)
            .map(|i| {
                g.band_low_hz
                    + (g.band_high_hz - g.band_low_hz) * i as f64 / (g.n_freq - 1) as f64
            })
            .collect()
    }

    pub fn link_geometry(&self) -> Result<LinkGeometry> {
        Ok(LinkGeometry::new(
            self.geometry.d_m,
            self.geometry.h_m,
            self.freq_grid(),
            self.geometry.tx_pattern.clone(),
            self.geometry.rx_pattern.clone(),
        )?)
    }

    pub fn body_at(&self, x: f64, y: f64, phi: f64) -> TargetState {
        TargetState {
            x,
            y,
            phi,
            h_s: self.body.h_s_m,
            w_s1: self.body.w_s1_m,
            w_s2: self.body.w_s2_m,
        }
    }

    pub fn uncertainty(&self) -> UncertaintyConfig {
        UncertaintyConfig {
            dx: self.uncertainty.dx_m,
            dy: self.uncertainty.dy_m,
            phi_range: (self.uncertainty.phi_low_rad, self.uncertainty.phi_high_rad),
            size_jitter: self.uncertainty.size_jitter,
        }
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            abs_tol: self.quadrature.abs_tol,
            max_depth: self.quadrature.max_depth,
            init_tiles: self.quadrature.init_tiles,
            max_evals: self.quadrature.max_evals,
        }
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel {
            sigma0: self.noise.sigma0_db,
            mu_t: self.noise.mu_t_db,
            sigma_t: self.noise.sigma_t_db,
        }
    }

    pub fn budget(&self) -> LinkBudget {
        LinkBudget {
            tx_power_dbm: self.link_budget.tx_power_dbm,
            tx_gain_dbi: self.link_budget.tx_gain_dbi,
            rx_gain_dbi: self.link_budget.rx_gain_dbi,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.cvae.epochs,
            batch_size: self.cvae.batch_size,
            learning_rate: self.cvae.learning_rate,
            seed,
            beta: self.cvae.beta,
            z: self.cvae.z,
            patience: self.cvae.patience,
            recon_sigma: self.cvae.recon_sigma,
            arch: CvaeArch::standard(),
        }
    }

    pub fn candidate_grid(&self, geom: &LinkGeometry) -> Result<CandidateGrid> {
        Ok(CandidateGrid::regular(
            geom,
            self.experiment.grid_x,
            self.experiment.grid_y,
            self.experiment.grid_spacing_m,
            &self.body_at(0.0, 0.0, 0.0),
        )?)
    }

    pub fn classify_freq(&self) -> f64 {
        if self.experiment.classify_freq_hz > 0.0 {
            self.experiment.classify_freq_hz
        } else {
            0.5 * (self.geometry.band_low_hz + self.geometry.band_high_hz)
        }
    }

    /// Checks every sub-block against module invariants.
    pub fn validate(&self) -> Result<()> {
        let geom = self.link_geometry()?;
        self.body_at(1.0, 0.0, 0.0).validate()?;
        self.uncertainty().validate()?;
        self.quadrature().validate()?;
        self.noise().validate()?;
        let e = &self.experiment;
        if e.grid_spacing_m <= 0.0 || e.sweep_x.2 <= 0.0 {
            bail!("grid spacing and sweep step must be positive");
        }
        if e.grid_x.0 <= 0.0 || e.grid_x.1 >= geom.d {
            bail!("candidate grid must lie strictly inside the link slab (0, {})", geom.d);
        }
        for &d_t in &e.d_t_list_m {
            if !(d_t > 0.0 && d_t < geom.d) {
                bail!("d_T = {d_t} outside (0, {})", geom.d);
            }
        }
        if e.m_samples == 0 || e.per_condition == 0 {
            bail!("m_samples and per_condition must be positive");
        }
        if e.rss_freq_index >= self.geometry.n_freq.max(1) {
            bail!("rss_freq_index out of range");
        }
        if self.cvae.z == 0 || self.cvae.epochs == 0 || self.cvae.batch_size == 0 {
            bail!("cvae z, epochs and batch_size must be positive");
        }
        Ok(())
    }

    /// FNV-1a hash of the serialized config; stamped into every CSV.
    pub fn hash(&self) -> u64 {
        let text = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in text.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_match_reference_setup() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let grid = cfg.freq_grid();
        assert_eq!(grid.len(), 16);
        assert_eq!(grid[0], 2.4e9);
        assert_eq!(*grid.last().unwrap(), 2.5e9);
        let geom = cfg.link_geometry().unwrap();
        let cand = cfg.candidate_grid(&geom).unwrap();
        assert_eq!(cand.conditions.len(), 75);
        assert_eq!(cfg.classify_freq(), 2.45e9);
    }

    #[test]
    fn paper_scale_band_spacing() {
        let cfg = ExperimentConfig {
            geometry: GeometryBlock { n_freq: 81, ..GeometryBlock::default() },
            ..ExperimentConfig::default()
        };
        let grid = cfg.freq_grid();
        assert_eq!(grid.len(), 81);
        let spacing = grid[1] - grid[0];
        assert!((spacing - 1.25e6).abs() < 1.0, "spacing {spacing}");
    }

    #[test]
    fn hash_changes_with_content() {
        let a = ExperimentConfig::default();
        let mut b = ExperimentConfig::default();
        b.noise.sigma0_db = 2.0;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), ExperimentConfig::default().hash());
    }

    #[test]
    fn bad_configs_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.grid_x = (0.0, 3.75);
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.noise.sigma_t_db = 0.1;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.d_t_list_m = vec![5.0];
        assert!(cfg.validate().is_err());
    }
}
