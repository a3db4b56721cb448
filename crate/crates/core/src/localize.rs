//! MAP localization over a candidate grid and the Fresnel-region detection
//! experiment.
//!
//! For each candidate condition the most likely body effects are found by
//! drawing attenuation profiles from the generator and keeping the best
//! observation likelihood (the generator has no closed-form density, so it
//! acts as the sampling measure of the joint maximization). The candidate
//! with the best score is the MAP position estimate. Candidates share the
//! same latent draws so score differences reflect conditions, not noise.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cvae::{CvaeError, CvaeModel};
use crate::diffraction::{attenuation_profile, DiffractionError, QuadratureConfig};
use crate::geometry::{GeometryError, LinkGeometry, RegionLabel, TargetState};
use crate::rss::{likelihood, synth_rss, free_space_power_grid, LinkBudget, NoiseModel, RssError};
use crate::sampler::{sample_state, NominalCondition, SamplerError, UncertaintyConfig};
use crate::seeding::{randn, seed_stream};

#[derive(Debug, Error)]
pub enum LocalizeError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Diffraction(#[from] DiffractionError),
    #[error(transparent)]
    Cvae(#[from] CvaeError),
    #[error(transparent)]
    Rss(#[from] RssError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("candidate grid must contain at least 2 positions inside the link area")]
    BadGrid,
    #[error("empty region class: {which}")]
    EmptyRegion { which: String },
    #[error("invalid parameter: {0}")]
    BadParams(&'static str),
}

/// Marked candidate positions the MAP search runs over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateGrid {
    pub conditions: Vec<NominalCondition>,
    /// Spacing between marked positions, m (metadata).
    pub spacing: f64,
}

impl CandidateGrid {
    pub fn new(conditions: Vec<NominalCondition>, spacing: f64) -> Result<Self, LocalizeError> {
        if conditions.len() < 2 {
            return Err(LocalizeError::BadGrid);
        }
        Ok(Self { conditions, spacing })
    }

    /// Regular grid: x and y sweeps at `spacing`, body dimensions fixed.
    pub fn regular(
        geom: &LinkGeometry,
        x_range: (f64, f64),
        y_range: (f64, f64),
        spacing: f64,
        body: &TargetState,
    ) -> Result<Self, LocalizeError> {
        if spacing <= 0.0 {
            return Err(LocalizeError::BadParams("grid spacing must be positive"));
        }
        let nx = ((x_range.1 - x_range.0) / spacing).round() as usize + 1;
        let ny = ((y_range.1 - y_range.0) / spacing).round() as usize + 1;
        let mut conditions = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                let x = x_range.0 + ix as f64 * spacing;
                let y = y_range.0 + iy as f64 * spacing;
                if x <= 0.0 || x >= geom.d {
                    return Err(LocalizeError::BadParams("grid position outside the link area"));
                }
                conditions.push(NominalCondition::new(TargetState { x, y, ..*body }));
            }
        }
        Self::new(conditions, spacing)
    }
}

/// Where candidate attenuation profiles come from during scoring.
pub enum CandidateScorer<'a> {
    /// Trained generator; `m_samples` conditional draws per candidate.
    Generator(&'a CvaeModel),
    /// Noiseless physics stub: the deterministic diffraction profile of the
    /// candidate's nominal state (one "sample" per candidate).
    DiffractionOracle { geom: &'a LinkGeometry, quad: QuadratureConfig },
    /// Precomputed profiles, one set per candidate.
    Fixed(&'a [Vec<Vec<f64>>]),
}

impl CandidateScorer<'_> {
    fn profiles(
        &self,
        index: usize,
        cond: &NominalCondition,
        latents: &[Vec<f64>],
    ) -> Result<Vec<Vec<f64>>, LocalizeError> {
        match self {
            CandidateScorer::Generator(model) => {
                Ok(model.generate_with_latents(&cond.theta, latents)?)
            }
            CandidateScorer::DiffractionOracle { geom, quad } => {
                Ok(vec![attenuation_profile(geom, &cond.theta, quad)?.values])
            }
            CandidateScorer::Fixed(profiles) => Ok(profiles[index].clone()),
        }
    }

    fn settings(&self) -> (usize, f64) {
        match self {
            CandidateScorer::Generator(m) => (m.z, m.beta),
            _ => (0, 0.0),
        }
    }
}

/// Scores and argmax of one MAP search.
#[derive(Debug, Clone, PartialEq)]
pub struct MapResult {
    /// Best log-likelihood per candidate.
    pub scores: Vec<f64>,
    /// The profile achieving each candidate's score.
    pub best_profiles: Vec<Vec<f64>>,
    /// Argmax candidate, ties broken toward the lowest index.
    pub argmax: usize,
    /// Estimated position `(x, y)`.
    pub position: (f64, f64),
}

/// Lowest-index argmax.
pub fn argmax_scores(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Most likely body effects for one condition: the best-scoring profile of
/// `m_samples` generator draws under the observation likelihood.
pub fn map_effects(
    s_t: &[f64],
    condition: &NominalCondition,
    model: &CvaeModel,
    noise: &NoiseModel,
    p0: &[f64],
    m_samples: usize,
    rng: &mut impl Rng,
) -> Result<(f64, Vec<f64>), LocalizeError> {
    if m_samples == 0 {
        return Err(LocalizeError::BadParams("m_samples must be >= 1"));
    }
    let latents: Vec<Vec<f64>> =
        (0..m_samples).map(|_| (0..model.z).map(|_| randn(rng)).collect()).collect();
    let profiles = model.generate_with_latents(&condition.theta, &latents)?;
    score_profiles(s_t, &profiles, noise, p0)
}

fn score_profiles(
    s_t: &[f64],
    profiles: &[Vec<f64>],
    noise: &NoiseModel,
    p0: &[f64],
) -> Result<(f64, Vec<f64>), LocalizeError> {
    let mut best = f64::NEG_INFINITY;
    let mut best_profile = Vec::new();
    for prof in profiles {
        let l = likelihood(s_t, prof, noise, p0)?;
        if l > best {
            best = l;
            best_profile = prof.clone();
        }
    }
    Ok((best, best_profile))
}

/// MAP position estimate over the grid. All candidates are scored against
/// the same latent draws (derived from `seed`); candidate evaluations run
/// in parallel and reduce in candidate order.
pub fn estimate_position(
    s_t: &[f64],
    grid: &CandidateGrid,
    scorer: &CandidateScorer,
    noise: &NoiseModel,
    p0: &[f64],
    m_samples: usize,
    seed: u64,
) -> Result<MapResult, LocalizeError> {
    if m_samples == 0 {
        return Err(LocalizeError::BadParams("m_samples must be >= 1"));
    }
    let z = match scorer {
        CandidateScorer::Generator(m) => m.z,
        _ => 0,
    };
    let mut rng = seed_stream(seed, 0);
    let latents: Vec<Vec<f64>> =
        (0..m_samples).map(|_| (0..z).map(|_| randn(&mut rng)).collect()).collect();
    let scored: Vec<(f64, Vec<f64>)> = grid
        .conditions
        .par_iter()
        .enumerate()
        .map(|(i, cond)| {
            let profiles = scorer.profiles(i, cond, &latents)?;
            score_profiles(s_t, &profiles, noise, p0)
        })
        .collect::<Result<_, _>>()?;
    let scores: Vec<f64> = scored.iter().map(|(s, _)| *s).collect();
    let best_profiles: Vec<Vec<f64>> = scored.into_iter().map(|(_, p)| p).collect();
    let argmax = argmax_scores(&scores);
    let t = &grid.conditions[argmax].theta;
    Ok(MapResult { scores, best_profiles, argmax, position: (t.x, t.y) })
}

/// Detection probabilities per region class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub z: usize,
    pub beta: f64,
    pub trials_per_class: usize,
    /// Pr[estimate outside the ellipsoid | truth outside].
    pub p_l0: f64,
    /// Per d_T: Pr[estimate in L1(d_T) | truth in L1(d_T)] and the class size.
    pub p_l1: Vec<(f64, f64, usize)>,
    pub l0_cells: usize,
}

/// Runs the region detection experiment: truths drawn from labeled grid
/// cells (with the configured placement uncertainty), observations
/// synthesized from diffraction ground truth, MAP estimates classified per
/// region. Deterministic under the master seed; trials run in parallel.
#[allow(clippy::too_many_arguments)]
pub fn detection_experiment(
    grid: &CandidateGrid,
    scorer: &CandidateScorer,
    geom: &LinkGeometry,
    unc: &UncertaintyConfig,
    noise: &NoiseModel,
    quad: &QuadratureConfig,
    budget: &LinkBudget,
    d_t_list: &[f64],
    trials: usize,
    m_samples: usize,
    classify_freq: f64,
    master_seed: u64,
) -> Result<DetectionReport, LocalizeError> {
    if trials < 100 {
        return Err(LocalizeError::BadParams("detection experiment needs >= 100 trials"));
    }
    if d_t_list.is_empty() {
        return Err(LocalizeError::BadParams("d_T list must be non-empty"));
    }
    let p0 = free_space_power_grid(geom, budget)?;

    let l0_cells: Vec<usize> = (0..grid.conditions.len())
        .filter(|&i| {
            let t = &grid.conditions[i].theta;
            !geom.in_first_fresnel(classify_freq, t.x, t.y).unwrap_or(false)
        })
        .collect();
    if l0_cells.is_empty() {
        return Err(LocalizeError::EmptyRegion { which: "L0".into() });
    }
    let mut l1_cells_per_dt: Vec<Vec<usize>> = Vec::with_capacity(d_t_list.len());
    for &d_t in d_t_list {
        let cells: Vec<usize> = (0..grid.conditions.len())
            .filter(|&i| {
                let t = &grid.conditions[i].theta;
                geom.classify_region(classify_freq, t.x, t.y, d_t)
                    .map(|l| l.is_l1())
                    .unwrap_or(false)
            })
            .collect();
        if cells.is_empty() {
            return Err(LocalizeError::EmptyRegion { which: format!("L1(d_T = {d_t} m)") });
        }
        l1_cells_per_dt.push(cells);
    }

    // The oracle scorer would recompute every candidate profile per trial;
    // freeze them once instead.
    let fixed_profiles: Option<Vec<Vec<Vec<f64>>>> = match scorer {
        CandidateScorer::DiffractionOracle { geom, quad } => Some(
            grid.conditions
                .par_iter()
                .map(|c| Ok(vec![attenuation_profile(geom, &c.theta, quad)?.values]))
                .collect::<Result<_, LocalizeError>>()?,
        ),
        _ => None,
    };
    let effective: CandidateScorer = match &fixed_profiles {
        Some(p) => CandidateScorer::Fixed(p),
        None => match scorer {
            CandidateScorer::Generator(m) => CandidateScorer::Generator(m),
            CandidateScorer::Fixed(p) => CandidateScorer::Fixed(p),
            CandidateScorer::DiffractionOracle { .. } => unreachable!(),
        },
    };

    let run_class = |cells: &[usize],
                     region_check: &(dyn Fn(RegionLabel) -> bool + Sync),
                     d_t_for_label: f64,
                     stream_base: u64|
     -> Result<usize, LocalizeError> {
        let hits: Vec<bool> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = seed_stream(master_seed, stream_base + trial as u64);
                let cell = cells[rng.random_range(0..cells.len())];
                let truth = sample_state(&grid.conditions[cell], unc, geom, &mut rng)?;
                let obs =
                    synth_rss(geom, Some(&truth), noise, quad, budget, trial as u64, &mut rng)?;
                let est_seed: u64 = rng.random();
                let res = estimate_position(
                    &obs.values,
                    grid,
                    &effective,
                    noise,
                    &p0,
                    m_samples,
                    est_seed,
                )?;
                let t = &grid.conditions[res.argmax].theta;
                let label = geom.classify_region(classify_freq, t.x, t.y, d_t_for_label)?;
                Ok(region_check(label))
            })
            .collect::<Result<_, LocalizeError>>()?;
        Ok(hits.iter().filter(|h| **h).count())
    };

    let l0_hits = run_class(&l0_cells, &|l: RegionLabel| l.is_l0(), d_t_list[0], 0)?;
    let p_l0 = l0_hits as f64 / trials as f64;
    let mut p_l1 = Vec::with_capacity(d_t_list.len());
    for (di, &d_t) in d_t_list.iter().enumerate() {
        let base = (1 + di as u64) * 1_000_003;
        let hits =
            run_class(&l1_cells_per_dt[di], &|l: RegionLabel| l.is_l1(), d_t, base)?;
        p_l1.push((d_t, hits as f64 / trials as f64, l1_cells_per_dt[di].len()));
    }
    let (z, beta) = scorer.settings();
    Ok(DetectionReport { z, beta, trials_per_class: trials, p_l0, p_l1, l0_cells: l0_cells.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvae::CvaeArch;
    use crate::geometry::AntennaPattern;
    use crate::sampler::Normalization;

    fn link(freqs: Vec<f64>) -> LinkGeometry {
        LinkGeometry::new(
            4.0,
            0.99,
            freqs,
            AntennaPattern::Omnidirectional,
            AntennaPattern::Omnidirectional,
        )
        .unwrap()
    }

    fn body(x: f64, y: f64) -> TargetState {
        TargetState { x, y, phi: 0.0, h_s: 1.8, w_s1: 0.55, w_s2: 0.25 }
    }

    fn toy_model(f: usize) -> CvaeModel {
        let norm = Normalization {
            cond_ranges: Normalization::default_cond_ranges(4.0),
            profile_mean: vec![1.0; f],
            profile_scale: vec![1.0; f],
        };
        CvaeModel::new(f, 2, 0.05, 0.1, norm, &CvaeArch::tiny(), 31).unwrap()
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax_scores(&[1.0, 1.0, 1.0]), 0);
        assert_eq!(argmax_scores(&[0.0, 2.0, 2.0]), 1);
        // constant shifts leave the argmax unchanged
        let scores = [0.3, -1.0, 2.5, 2.5];
        let shifted: Vec<f64> = scores.iter().map(|s| s + 123.0).collect();
        assert_eq!(argmax_scores(&scores), argmax_scores(&shifted));
    }

    #[test]
    fn map_effects_m1_equals_single_likelihood() {
        let model = toy_model(4);
        let noise = NoiseModel::default();
        let p0 = vec![-50.0; 4];
        let s_t = vec![-51.0, -50.5, -52.0, -49.0];
        let cond = NominalCondition::new(body(1.0, 0.0));
        let mut rng = seed_stream(3, 0);
        let (score, profile) = map_effects(&s_t, &cond, &model, &noise, &p0, 1, &mut rng).unwrap();
        let direct = likelihood(&s_t, &profile, &noise, &p0).unwrap();
        assert_eq!(score, direct);
    }

    #[test]
    fn map_effects_scores_nondecreasing_in_m() {
        let model = toy_model(4);
        let noise = NoiseModel::default();
        let p0 = vec![-50.0; 4];
        let s_t = vec![-51.0, -50.5, -52.0, -49.0];
        let cond = NominalCondition::new(body(1.0, 0.0));
        let mut prev = f64::NEG_INFINITY;
        for m in [1usize, 4, 16, 64] {
            // same stream: latents for smaller m are a prefix of larger m
            let mut rng = seed_stream(5, 0);
            let (score, _) = map_effects(&s_t, &cond, &model, &noise, &p0, m, &mut rng).unwrap();
            assert!(score >= prev, "score decreased at m = {m}");
            prev = score;
        }
    }

    #[test]
    fn identical_candidates_tie_break_to_first() {
        let model = toy_model(4);
        let noise = NoiseModel::default();
        let p0 = vec![-50.0; 4];
        let s_t = vec![-51.0, -50.5, -52.0, -49.0];
        let grid = CandidateGrid::new(
            vec![NominalCondition::new(body(1.0, 0.0)), NominalCondition::new(body(1.0, 0.0))],
            0.25,
        )
        .unwrap();
        let scorer = CandidateScorer::Generator(&model);
        let res = estimate_position(&s_t, &grid, &scorer, &noise, &p0, 8, 7).unwrap();
        assert_eq!(res.scores[0], res.scores[1], "shared draws must tie identical candidates");
        assert_eq!(res.argmax, 0);
    }

    #[test]
    fn oracle_scorer_finds_true_cell_noiselessly() {
        let geom = link(vec![2.42e9, 2.46e9]);
        let quad = QuadratureConfig::default();
        let budgetcfg = LinkBudget::default();
        let tiny_noise = NoiseModel { sigma0: 1e-9, mu_t: 0.0, sigma_t: 1e-9 };
        // x values chosen so no candidate is the d - x mirror of another
        // (mirror pairs have identical profiles and tie).
        let grid = CandidateGrid::regular(&geom, (0.4, 3.2), (0.0, 0.25), 0.7, &body(0.0, 0.0))
            .unwrap();
        let truth = grid.conditions[3].theta;
        let mut rng = seed_stream(17, 0);
        let obs =
            synth_rss(&geom, Some(&truth), &tiny_noise, &quad, &budgetcfg, 0, &mut rng).unwrap();
        let p0 = free_space_power_grid(&geom, &budgetcfg).unwrap();
        let scorer = CandidateScorer::DiffractionOracle { geom: &geom, quad };
        let res = estimate_position(&obs.values, &grid, &scorer, &tiny_noise, &p0, 1, 11).unwrap();
        assert_eq!(res.argmax, 3);
        assert_eq!(res.position, (truth.x, truth.y));
    }

    #[test]
    fn grid_builders_validate() {
        let geom = link(vec![2.45e9]);
        assert!(CandidateGrid::new(vec![NominalCondition::new(body(1.0, 0.0))], 0.25).is_err());
        assert!(
            CandidateGrid::regular(&geom, (0.0, 3.75), (0.0, 0.0), 0.25, &body(0.0, 0.0)).is_err()
        );
        let g =
            CandidateGrid::regular(&geom, (0.25, 3.75), (-0.5, 0.5), 0.25, &body(0.0, 0.0)).unwrap();
        assert_eq!(g.conditions.len(), 75);
    }

    #[test]
    fn detection_noiseless_oracle_is_perfect() {
        let geom = link(vec![2.44e9, 2.46e9]);
        let quad = QuadratureConfig::default();
        let budgetcfg = LinkBudget::default();
        let tiny_noise = NoiseModel { sigma0: 1e-9, mu_t: 0.0, sigma_t: 1e-9 };
        // coarse grid to keep the oracle profile set small
        let grid = CandidateGrid::regular(&geom, (0.5, 3.5), (-0.5, 0.5), 0.5, &body(0.0, 0.0))
            .unwrap();
        let no_unc = UncertaintyConfig { dx: 0.0, dy: 0.0, phi_range: (0.0, 0.0), size_jitter: 0.0 };
        let scorer = CandidateScorer::DiffractionOracle { geom: &geom, quad };
        let report = detection_experiment(
            &grid,
            &scorer,
            &geom,
            &no_unc,
            &tiny_noise,
            &quad,
            &budgetcfg,
            &[1.0],
            100,
            1,
            2.45e9,
            99,
        )
        .unwrap();
        assert_eq!(report.p_l0, 1.0);
        assert_eq!(report.p_l1[0].1, 1.0);
        assert_eq!(report.trials_per_class, 100);
    }

    #[test]
    fn detection_rejects_empty_classes_and_few_trials() {
        let geom = link(vec![2.45e9]);
        let quad = QuadratureConfig::default();
        let budgetcfg = LinkBudget::default();
        let noise = NoiseModel::default();
        let unc = UncertaintyConfig::default();
        // all cells on the LoS: no L0 cells at all
        let grid = CandidateGrid::regular(&geom, (0.5, 3.5), (0.0, 0.0), 0.5, &body(0.0, 0.0))
            .unwrap();
        let scorer = CandidateScorer::DiffractionOracle { geom: &geom, quad };
        let err = detection_experiment(
            &grid, &scorer, &geom, &unc, &noise, &quad, &budgetcfg, &[1.0], 100, 1, 2.45e9, 1,
        )
        .unwrap_err();
        assert!(matches!(err, LocalizeError::EmptyRegion { .. }));

        let grid2 = CandidateGrid::regular(&geom, (0.5, 3.5), (-0.75, 0.75), 0.75, &body(0.0, 0.0))
            .unwrap();
        let err2 = detection_experiment(
            &grid2, &scorer, &geom, &unc, &noise, &quad, &budgetcfg, &[1.0], 10, 1, 2.45e9, 1,
        )
        .unwrap_err();
        assert!(matches!(err2, LocalizeError::BadParams(_)));
    }

    #[test]
    fn detection_is_seed_deterministic() {
        let geom = link(vec![2.44e9]);
        let quad = QuadratureConfig::default();
        let budgetcfg = LinkBudget::default();
        let noise = NoiseModel::default();
        let unc = UncertaintyConfig { dx: 0.05, dy: 0.05, phi_range: (0.0, 0.0), size_jitter: 0.0 };
        let grid = CandidateGrid::regular(&geom, (0.5, 3.5), (-0.5, 0.5), 0.5, &body(0.0, 0.0))
            .unwrap();
        let scorer = CandidateScorer::DiffractionOracle { geom: &geom, quad };
        let a = detection_experiment(
            &grid, &scorer, &geom, &unc, &noise, &quad, &budgetcfg, &[1.0], 100, 1, 2.45e9, 5,
        )
        .unwrap();
        let b = detection_experiment(
            &grid, &scorer, &geom, &unc, &noise, &quad, &budgetcfg, &[1.0], 100, 1, 2.45e9, 5,
        )
        .unwrap();
        assert_eq!(a, b);
        assert!(a.p_l0 >= 0.0 && a.p_l0 <= 1.0);
        assert!(a.p_l1[0].1 >= 0.0 && a.p_l1[0].1 <= 1.0);
    }
}
