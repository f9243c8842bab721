//! `gen-data`: write a synthetic dataset (flight CSVs, schema, manifest,
//! nominal performance config, airframe truth table).

use anyhow::Context;
use clap::Args;
use nodefdm::baseline::ControlGains;
use nodefdm::performance::PerformanceConfig;
use nodefdm::synthetic::{generate_dataset, DatasetOptions};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenDataConfig {
    /// Output directory for the dataset.
    #[arg(long)]
    pub out: PathBuf,
    /// Training flights.
    #[arg(long, default_value_t = 10)]
    pub train: usize,
    /// Validation flights.
    #[arg(long, default_value_t = 2)]
    pub val: usize,
    /// Test flights.
    #[arg(long, default_value_t = 2)]
    pub test: usize,
    /// Root seed; all randomness derives from it.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Shortest scripted cruise duration [s].
    #[arg(long, default_value_t = 360.0)]
    pub cruise_min_s: f64,
    /// Longest scripted cruise duration [s].
    #[arg(long, default_value_t = 840.0)]
    pub cruise_max_s: f64,
    /// AR(1) thrust disturbance standard deviation (relative).
    #[arg(long, default_value_t = 0.01)]
    pub thrust_noise: f64,
    /// Coefficient spread of the two airframe performance variants.
    #[arg(long, default_value_t = 0.03)]
    pub variant_spread: f64,
    /// Upper end of the per-airframe engine efficiency multiplier range.
    #[arg(long, default_value_t = 1.05)]
    pub engine_mult_max: f64,
    /// Nominal performance config JSON (defaults to the built-in generic
    /// narrowbody).
    #[arg(long)]
    pub perf_config: Option<PathBuf>,
}

pub fn cmd_gen_data(cfg: &GenDataConfig) -> anyhow::Result<()> {
    anyhow::ensure!(cfg.train >= 1, "empty training split");
    let perf = match &cfg.perf_config {
        Some(p) => PerformanceConfig::load(p).context("loading performance config")?,
        None => PerformanceConfig::default(),
    };
    let options = DatasetOptions {
        train: cfg.train,
        val: cfg.val,
        test: cfg.test,
        seed: cfg.seed,
        cruise_duration_range_s: (cfg.cruise_min_s, cfg.cruise_max_s),
        thrust_noise_frac: cfg.thrust_noise,
        variant_spread: cfg.variant_spread,
        engine_mult_range: (1.0, cfg.engine_mult_max),
    };
    crate::echo_config(&cfg.out, cfg)?;
    let dataset = generate_dataset(&cfg.out, &perf, &ControlGains::default(), &options)
        .context("generating dataset")?;
    println!(
        "gen-data: wrote {} train / {} val / {} test flights across {} airframes to {}",
        dataset.manifest.splits.train.len(),
        dataset.manifest.splits.val.len(),
        dataset.manifest.splits.test.len(),
        dataset.airframes.len(),
        cfg.out.display()
    );
    Ok(())
}
