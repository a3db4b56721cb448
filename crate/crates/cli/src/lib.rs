//! Command-line front end: argument parsing, config resolution and
//! dispatch. Exit codes: 0 success, 2 usage or invalid configuration,
//! 1 runtime failure.

pub mod bench;
pub mod commands;
pub mod config;
pub mod csvio;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::RunContext;
use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "rfshadow",
    version,
    about = "Body-shadowing diffraction model, C-VAE surrogate and passive RF localization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment config; omitted = reference defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config's experiment.master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV/container files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Diffraction attenuation sweep along the LoS
    Simulate(CommonArgs),
    /// Build the training set from the physics model
    Dataset(CommonArgs),
    /// Train the surrogate generator on a dataset
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Dataset container produced by `dataset`.
        #[arg(long, default_value = "out/dataset.rfsd")]
        dataset: PathBuf,
    },
    /// Sample attenuation profiles from a trained model
    Generate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "out/model.rfsm")]
        model: PathBuf,
    },
    /// Generated-RSS histogram at one frequency
    Rss {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "out/model.rfsm")]
        model: PathBuf,
    },
    /// MAP localization of one synthetic observation
    Localize {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "out/model.rfsm")]
        model: PathBuf,
    },
    /// Fresnel-region detection experiment
    Detect {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "out/model.rfsm")]
        model: PathBuf,
    },
    /// Generation-time comparison: surrogate vs quadrature
    Bench {
        #[command(flatten)]
        common: CommonArgs,
        /// Optional trained model for the Z=16 row.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Region labels for every grid position
    FresnelMap(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Simulate(c) | Command::Dataset(c) | Command::FresnelMap(c) => c,
            Command::Train { common, .. }
            | Command::Generate { common, .. }
            | Command::Rss { common, .. }
            | Command::Localize { common, .. }
            | Command::Detect { common, .. }
            | Command::Bench { common, .. } => common,
        }
    }
}

fn build_context(common: &CommonArgs) -> Result<RunContext, anyhow::Error> {
    let cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.validate()?;
    let seed = common.seed.unwrap_or(cfg.experiment.master_seed);
    Ok(RunContext { hash: cfg.hash(), cfg, seed, out: common.out.clone() })
}

/// Parses argv and runs; returns the process exit code.
pub fn main_impl() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap uses exit code 2 for usage errors and 0 for --help/--version
            let _ = e.print();
            return if e.exit_code() == 0 { 0 } else { 2 };
        }
    };
    let ctx = match build_context(cli.command.common()) {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("invalid configuration: {e:#}");
            return 2;
        }
    };
    eprintln!(
        "resolved config (hash {:016x}): {}",
        ctx.hash,
        serde_json::to_string(&ctx.cfg).expect("config serializes")
    );
    eprintln!("master seed: {}", ctx.seed);
    let result = match &cli.command {
        Command::Simulate(_) => commands::simulate(&ctx),
        Command::Dataset(_) => commands::dataset(&ctx),
        Command::Train { dataset, .. } => commands::train_cmd(&ctx, dataset),
        Command::Generate { model, .. } => commands::generate(&ctx, model),
        Command::Rss { model, .. } => commands::rss(&ctx, model),
        Command::Localize { model, .. } => commands::localize(&ctx, model),
        Command::Detect { model, .. } => commands::detect(&ctx, model),
        Command::Bench { model, .. } => commands::bench(&ctx, model.as_deref()),
        Command::FresnelMap(_) => commands::fresnel_map(&ctx),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
