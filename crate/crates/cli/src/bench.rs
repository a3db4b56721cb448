//! Wall-clock generation-time comparison between the surrogate and the
//! quadrature model.
//!
//! One "sample" is a full attenuation profile over the configured frequency
//! grid, for both paths. Measurements use a monotonic clock, batched calls
//! (time N, divide by N) and discard 10 warm-up iterations; benchmark
//! sections run serially so the two paths do not contend.

use anyhow::{bail, Result};
use std::time::Instant;

use rfshadow_core::cvae::CvaeModel;
use rfshadow_core::diffraction::{attenuation_profile, QuadratureConfig};
use rfshadow_core::geometry::{LinkGeometry, TargetState};
use rfshadow_core::seeding::seed_stream;

const WARMUP: usize = 10;

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub config: String,
    pub sec_per_sample: f64,
    /// For surrogate rows: EM(omni, 1e-3) time over this row's time.
    /// For EM rows: this row's time over the Z=16 surrogate time.
    pub ratio_vs_em: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub cvae_z16_sec: f64,
    pub em_omni_loose_sec: f64,
}

/// Smallest positive tick the monotonic clock resolves.
fn timer_granularity() -> f64 {
    let mut min = f64::INFINITY;
    for _ in 0..1000 {
        let a = Instant::now();
        let mut b = Instant::now();
        while b == a {
            b = Instant::now();
        }
        min = min.min((b - a).as_secs_f64());
    }
    min
}

fn timed<F: FnMut()>(n: usize, mut f: F) -> Result<f64> {
    let start = Instant::now();
    for _ in 0..n {
        f();
    }
    let total = start.elapsed().as_secs_f64();
    let gran = timer_granularity();
    if total < 10.0 * gran {
        bail!(
            "timer resolution insufficient: batch of {n} took {total:.3e} s against {gran:.3e} s granularity"
        );
    }
    Ok(total / n as f64)
}

fn time_cvae(model: &CvaeModel, condition: &TargetState, n: usize) -> Result<f64> {
    let mut rng = seed_stream(7, 0);
    let _ = model.generate(condition, WARMUP, &mut rng).expect("warmup generation");
    timed(n, || {
        let out = model.generate(condition, 1, &mut rng).expect("benchmark generation");
        std::hint::black_box(out);
    })
}

fn time_em(
    geom: &LinkGeometry,
    quad: &QuadratureConfig,
    body: &TargetState,
    n: usize,
) -> Result<f64> {
    // cycle deterministic in-link positions so no call repeats its neighbor
    let pos = |i: usize| -> TargetState {
        let x = 0.35 + 0.73 * ((i % 5) as f64);
        TargetState { x, y: 0.05 * (i % 3) as f64, ..*body }
    };
    for i in 0..WARMUP.min(3) {
        let _ = attenuation_profile(geom, &pos(i), quad).expect("warmup profile");
    }
    let mut i = 0usize;
    timed(n, || {
        let out = attenuation_profile(geom, &pos(i), quad).expect("benchmark profile");
        std::hint::black_box(out);
        i += 1;
    })
}

/// Times surrogate generation for the two latent sizes against the four
/// quadrature configurations.
pub fn bench_generation(
    model_z16: &CvaeModel,
    model_z32: &CvaeModel,
    geom_omni: &LinkGeometry,
    geom_directional: &LinkGeometry,
    body: &TargetState,
    n_cvae: usize,
    n_em: usize,
) -> Result<BenchReport> {
    if n_cvae < 100 || n_em < 10 {
        bail!("need n_cvae >= 100 and n_em >= 10");
    }
    let condition = TargetState { x: 2.0, y: 0.0, ..*body };
    let t16 = time_cvae(model_z16, &condition, n_cvae)?;
    let t32 = time_cvae(model_z32, &condition, n_cvae)?;

    let loose = QuadratureConfig::with_tol(1e-3);
    let tight = QuadratureConfig::with_tol(1e-6);
    let em = [
        ("em_omni_tol1e-3", geom_omni, &loose),
        ("em_omni_tol1e-6", geom_omni, &tight),
        ("em_directional_tol1e-3", geom_directional, &loose),
        ("em_directional_tol1e-6", geom_directional, &tight),
    ];
    let mut em_times = Vec::new();
    for (name, geom, quad) in &em {
        em_times.push((name.to_string(), time_em(geom, quad, body, n_em)?));
    }
    let em_loose = em_times[0].1;

    let mut rows = vec![
        BenchRow { config: "cvae_z16".into(), sec_per_sample: t16, ratio_vs_em: em_loose / t16 },
        BenchRow { config: "cvae_z32".into(), sec_per_sample: t32, ratio_vs_em: em_loose / t32 },
    ];
    for (name, t) in &em_times {
        rows.push(BenchRow { config: name.clone(), sec_per_sample: *t, ratio_vs_em: t / t16 });
    }
    Ok(BenchReport { rows, cvae_z16_sec: t16, em_omni_loose_sec: em_loose })
}
