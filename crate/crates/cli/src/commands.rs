//! Subcommand implementations. Each writes CSV (or container files) under
//! the output directory and logs progress to stderr.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use rfshadow_core::cvae::{train, CvaeArch, CvaeModel};
use rfshadow_core::diffraction::attenuation_profile;
use rfshadow_core::geometry::{AntennaPattern, LinkGeometry, RegionLabel};
use rfshadow_core::io::{load_dataset, load_model, save_dataset, save_model};
use rfshadow_core::localize::{detection_experiment, estimate_position, CandidateScorer};
use rfshadow_core::rss::{free_space_power_grid, marginal_rss, synth_rss};
use rfshadow_core::sampler::{build_training_set, Normalization};
use rfshadow_core::seeding::seed_stream;

use crate::bench::bench_generation;
use crate::config::ExperimentConfig;
use crate::csvio::{fmt, write_csv};

pub struct RunContext {
    pub cfg: ExperimentConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub hash: u64,
}

impl RunContext {
    fn out_path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn load_model_checked(&self, path: &Path) -> Result<CvaeModel> {
        let model =
            load_model(path).with_context(|| format!("loading model {}", path.display()))?;
        let f = self.cfg.freq_grid().len();
        if model.f != f {
            anyhow::bail!(
                "model {} was trained for F = {} frequencies but the config uses F = {f}",
                path.display(),
                model.f
            );
        }
        Ok(model)
    }
}

/// Deterministic diffraction sweep along the LoS.
pub fn simulate(ctx: &RunContext) -> Result<()> {
    let geom = ctx.cfg.link_geometry()?;
    let quad = ctx.cfg.quadrature();
    let (x0, x1, step) = ctx.cfg.experiment.sweep_x;
    let n = ((x1 - x0) / step).round() as usize + 1;
    let mut rows = Vec::new();
    for i in 0..n {
        let x = x0 + i as f64 * step;
        let t = ctx.cfg.body_at(x, 0.0, 0.0);
        let profile = attenuation_profile(&geom, &t, &quad)?;
        for (f, a) in geom.freq_grid.iter().zip(&profile.values) {
            rows.push(vec![fmt(x), fmt(0.0), fmt(0.0), fmt(*f), fmt(*a)]);
        }
    }
    let path = ctx.out_path("simulate.csv");
    write_csv(&path, ctx.hash, &["x_m", "y_m", "phi_rad", "freq_hz", "atten_db"], &rows)?;
    eprintln!("simulate: {} positions x {} frequencies -> {}", n, geom.n_freq(), path.display());
    Ok(())
}

/// Builds and saves the training set for the configured grid.
pub fn dataset(ctx: &RunContext) -> Result<()> {
    let geom = ctx.cfg.link_geometry()?;
    let quad = ctx.cfg.quadrature();
    let unc = ctx.cfg.uncertainty();
    let grid = ctx.cfg.candidate_grid(&geom)?;
    let set = build_training_set(
        &grid.conditions,
        &unc,
        &geom,
        &quad,
        ctx.cfg.experiment.per_condition,
        ctx.seed,
    )?;
    let path = ctx.out_path("dataset.rfsd");
    std::fs::create_dir_all(&ctx.out)?;
    save_dataset(&path, &set)?;
    eprintln!(
        "dataset: {} conditions x {} samples (F = {}) -> {}",
        set.conditions,
        set.per_condition,
        set.f,
        path.display()
    );
    Ok(())
}

/// Trains the surrogate on a saved dataset.
pub fn train_cmd(ctx: &RunContext, dataset_path: &Path) -> Result<()> {
    let set = load_dataset(dataset_path)
        .with_context(|| format!("loading dataset {}", dataset_path.display()))?;
    let cfg = ctx.cfg.train_config(ctx.seed);
    let (model, report) = train(&set, &cfg)?;
    let model_path = ctx.out_path("model.rfsm");
    std::fs::create_dir_all(&ctx.out)?;
    save_model(&model_path, &model)?;
    let rows: Vec<Vec<String>> = report
        .history
        .iter()
        .map(|e| {
            vec![e.epoch.to_string(), fmt(e.train_loss), fmt(e.val_loss), fmt(e.best_val)]
        })
        .collect();
    write_csv(
        &ctx.out_path("loss_history.csv"),
        ctx.hash,
        &["epoch", "train_loss", "val_loss", "best_val"],
        &rows,
    )?;
    eprintln!(
        "train: {} epochs ({}), encoder {} + decoder {} parameters -> {}",
        report.history.len(),
        if report.stopped_early { "early stop" } else { "full run" },
        report.encoder_params,
        report.decoder_params,
        model_path.display()
    );
    Ok(())
}

/// Draws conditional samples from a trained model.
pub fn generate(ctx: &RunContext, model_path: &Path) -> Result<()> {
    let model = ctx.load_model_checked(model_path)?;
    let geom = ctx.cfg.link_geometry()?;
    let (x, y) = ctx.cfg.experiment.probe_position;
    let condition = ctx.cfg.body_at(x, y, 0.0);
    let mut rng = seed_stream(ctx.seed, 0);
    let samples = model.generate(&condition, ctx.cfg.experiment.generate_count, &mut rng)?;
    let mut rows = Vec::new();
    for (i, p) in samples.iter().enumerate() {
        for (f, a) in geom.freq_grid.iter().zip(&p.values) {
            rows.push(vec![
                fmt(x),
                fmt(y),
                fmt(0.0),
                fmt(condition.h_s),
                fmt(condition.w_s1),
                fmt(condition.w_s2),
                i.to_string(),
                fmt(*f),
                fmt(*a),
            ]);
        }
    }
    let path = ctx.out_path("generate.csv");
    write_csv(
        &path,
        ctx.hash,
        &["x_m", "y_m", "phi_rad", "h_s_m", "w_s1_m", "w_s2_m", "sample_idx", "freq_hz", "atten_db"],
        &rows,
    )?;
    eprintln!("generate: {} samples at ({x}, {y}) -> {}", samples.len(), path.display());
    Ok(())
}

/// Generated-RSS histogram at one frequency.
pub fn rss(ctx: &RunContext, model_path: &Path) -> Result<()> {
    let model = ctx.load_model_checked(model_path)?;
    let geom = ctx.cfg.link_geometry()?;
    let p0 = free_space_power_grid(&geom, &ctx.cfg.budget())?;
    let (x, y) = ctx.cfg.experiment.probe_position;
    let condition = ctx.cfg.body_at(x, y, 0.0);
    let mut rng = seed_stream(ctx.seed, 0);
    let (_, hist) = marginal_rss(
        &model,
        &condition,
        &ctx.cfg.noise(),
        &p0,
        ctx.cfg.experiment.rss_freq_index,
        ctx.cfg.experiment.rss_samples,
        &mut rng,
    )?;
    let rows: Vec<Vec<String>> =
        hist.bins.iter().map(|(lo, hi, m)| vec![fmt(*lo), fmt(*hi), fmt(*m)]).collect();
    let path = ctx.out_path("rss.csv");
    write_csv(&path, ctx.hash, &["bin_low_dbm", "bin_high_dbm", "mass"], &rows)?;
    eprintln!(
        "rss: {} samples at ({x}, {y}), {} bins -> {}",
        ctx.cfg.experiment.rss_samples,
        hist.bins.len(),
        path.display()
    );
    Ok(())
}

/// One MAP localization run on a synthetic observation.
pub fn localize(ctx: &RunContext, model_path: &Path) -> Result<()> {
    let model = ctx.load_model_checked(model_path)?;
    let geom = ctx.cfg.link_geometry()?;
    let quad = ctx.cfg.quadrature();
    let noise = ctx.cfg.noise();
    let budget = ctx.cfg.budget();
    let grid = ctx.cfg.candidate_grid(&geom)?;
    let (x, y) = ctx.cfg.experiment.probe_position;
    let truth = ctx.cfg.body_at(x, y, 0.0);
    let mut rng = seed_stream(ctx.seed, 0);
    let obs = synth_rss(&geom, Some(&truth), &noise, &quad, &budget, 0, &mut rng)?;
    let p0 = free_space_power_grid(&geom, &budget)?;
    let scorer = CandidateScorer::Generator(&model);
    let res = estimate_position(
        &obs.values,
        &grid,
        &scorer,
        &noise,
        &p0,
        ctx.cfg.experiment.m_samples,
        ctx.seed ^ 0x10ca11ce,
    )?;
    let rows: Vec<Vec<String>> = grid
        .conditions
        .iter()
        .enumerate()
        .map(|(k, c)| {
            vec![
                k.to_string(),
                fmt(c.theta.x),
                fmt(c.theta.y),
                fmt(res.scores[k]),
                ((k == res.argmax) as u8).to_string(),
            ]
        })
        .collect();
    let path = ctx.out_path("localize.csv");
    write_csv(&path, ctx.hash, &["k", "x_m", "y_m", "score", "is_argmax"], &rows)?;
    eprintln!(
        "localize: truth ({x}, {y}) estimated at ({}, {}) [candidate {}] -> {}",
        res.position.0,
        res.position.1,
        res.argmax,
        path.display()
    );
    Ok(())
}

/// Region detection probabilities (synthetic ground truth).
pub fn detect(ctx: &RunContext, model_path: &Path) -> Result<()> {
    let model = ctx.load_model_checked(model_path)?;
    let geom = ctx.cfg.link_geometry()?;
    let grid = ctx.cfg.candidate_grid(&geom)?;
    let scorer = CandidateScorer::Generator(&model);
    let report = detection_experiment(
        &grid,
        &scorer,
        &geom,
        &ctx.cfg.uncertainty(),
        &ctx.cfg.noise(),
        &ctx.cfg.quadrature(),
        &ctx.cfg.budget(),
        &ctx.cfg.experiment.d_t_list_m,
        ctx.cfg.experiment.trials,
        ctx.cfg.experiment.m_samples,
        ctx.cfg.classify_freq(),
        ctx.seed,
    )?;
    let rows: Vec<Vec<String>> = report
        .p_l1
        .iter()
        .map(|(d_t, p, _)| {
            vec![
                report.z.to_string(),
                fmt(report.beta),
                fmt(*d_t),
                fmt(report.p_l0),
                fmt(*p),
                report.trials_per_class.to_string(),
            ]
        })
        .collect();
    let path = ctx.out_path("detect.csv");
    write_csv(&path, ctx.hash, &["Z", "beta", "d_T_m", "p_L0", "p_L1", "trials"], &rows)?;
    for (d_t, p, cells) in &report.p_l1 {
        eprintln!(
            "detect: d_T = {d_t} m: p_L0 = {:.3} ({} cells), p_L1 = {p:.3} ({cells} cells)",
            report.p_l0, report.l0_cells
        );
    }
    eprintln!("detect -> {}", path.display());
    Ok(())
}

/// Generation-time comparison (surrogate vs quadrature).
pub fn bench(ctx: &RunContext, model_path: Option<&Path>) -> Result<()> {
    let geom = ctx.cfg.link_geometry()?;
    let f = geom.n_freq();
    // Generation speed depends on the architecture, not the weights; a
    // fresh model stands in when no trained one is supplied.
    let fresh_norm = || Normalization {
        cond_ranges: Normalization::default_cond_ranges(geom.d),
        profile_mean: vec![0.0; f],
        profile_scale: vec![1.0; f],
    };
    let model16 = match model_path {
        Some(p) => ctx.load_model_checked(p)?,
        None => CvaeModel::new(f, 16, 0.05, 0.1, fresh_norm(), &CvaeArch::standard(), ctx.seed)?,
    };
    let model32 = CvaeModel::new(f, 32, 0.05, 0.1, fresh_norm(), &CvaeArch::standard(), ctx.seed)?;

    let omni = LinkGeometry::new(
        geom.d,
        geom.h,
        geom.freq_grid.clone(),
        AntennaPattern::Omnidirectional,
        AntennaPattern::Omnidirectional,
    )?;
    let dir_pattern = match &geom.tx_pattern {
        AntennaPattern::Directional { .. } => geom.tx_pattern.clone(),
        AntennaPattern::Omnidirectional => {
            AntennaPattern::Directional { gain_exponent: 8.0, max_gain_dbi: 9.0 }
        }
    };
    let directional = LinkGeometry::new(
        geom.d,
        geom.h,
        geom.freq_grid.clone(),
        dir_pattern.clone(),
        dir_pattern,
    )?;
    let body = ctx.cfg.body_at(2.0, 0.0, 0.0);
    let report = bench_generation(&model16, &model32, &omni, &directional, &body, 2000, 10)?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| vec![r.config.clone(), fmt(r.sec_per_sample), fmt(r.ratio_vs_em)])
        .collect();
    let path = ctx.out_path("bench.csv");
    write_csv(&path, ctx.hash, &["config", "sec_per_sample", "ratio_vs_em"], &rows)?;
    for r in &report.rows {
        eprintln!("bench: {:<24} {:>12.3e} s/sample  ratio {:.1}", r.config, r.sec_per_sample, r.ratio_vs_em);
    }
    eprintln!("bench -> {}", path.display());
    Ok(())
}

/// Region labels of every grid position.
pub fn fresnel_map(ctx: &RunContext) -> Result<()> {
    let geom = ctx.cfg.link_geometry()?;
    let grid = ctx.cfg.candidate_grid(&geom)?;
    let freq = ctx.cfg.classify_freq();
    let mut rows = Vec::new();
    for &d_t in &ctx.cfg.experiment.d_t_list_m {
        for c in &grid.conditions {
            let t = &c.theta;
            let label = match geom.classify_region(freq, t.x, t.y, d_t)? {
                RegionLabel::L0 => "L0",
                RegionLabel::L1 { .. } => "L1",
                RegionLabel::Unassigned => "unassigned",
            };
            let (r1, r2) = geom.path_lengths([t.x, t.y, 0.0]);
            rows.push(vec![
                fmt(t.x),
                fmt(t.y),
                fmt(d_t),
                label.to_string(),
                fmt(r1),
                fmt(r2),
            ]);
        }
    }
    let path = ctx.out_path("fresnel_map.csv");
    write_csv(&path, ctx.hash, &["x_m", "y_m", "d_T_m", "label", "r1_m", "r2_m"], &rows)?;
    eprintln!("fresnel-map: {} rows -> {}", rows.len(), path.display());
    Ok(())
}
