//! Body-shadowing toolkit for passive RF sensing on a single radio link.
//!
//! The crate models a person near a TX-RX link as a rectangular absorbing
//! sheet, computes the body-induced excess attenuation by numerical
//! integration over the sheet ([`diffraction`]), learns a conditional VAE
//! surrogate that emits attenuation profiles orders of magnitude faster
//! ([`cvae`]), and uses the surrogate as a sampling prior for MAP
//! localization and Fresnel-region presence detection ([`localize`]).
//!
//! Modules:
//! - [`geometry`]: link/target geometry, antenna patterns, Fresnel zones.
//! - [`diffraction`]: field-ratio quadrature and excess attenuation.
//! - [`sampler`]: uncertainty sampling around nominal states, training sets.
//! - [`nn`]: dense/conv1d/deconv1d layers with analytic gradients and Adam.
//! - [`cvae`]: conditional VAE training (beta-weighted ELBO) and generation.
//! - [`rss`]: received-power synthesis, likelihood, RSS marginalization.
//! - [`localize`]: MAP grid search and the region detection experiment.
//! - [`io`]: versioned dataset/model container files.

pub mod cvae;
pub mod diffraction;
pub mod geometry;
pub mod io;
pub mod localize;
pub mod nn;
pub mod rss;
pub mod sampler;
pub mod seeding;

pub use cvae::{CvaeArch, CvaeModel, TrainConfig, TrainReport};
pub use diffraction::{AttenuationProfile, QuadratureConfig};
pub use geometry::{AntennaPattern, LinkGeometry, RegionLabel, TargetState};
pub use localize::{CandidateGrid, CandidateScorer, DetectionReport, MapResult};
pub use rss::{LinkBudget, NoiseModel, RssObservation};
pub use sampler::{NominalCondition, Normalization, TrainingSet, UncertaintyConfig};
