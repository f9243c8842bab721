//! `train`: fit the NODE-FDM model on a dataset manifest, writing the
//! best-validation checkpoint and the per-epoch loss curve.

use anyhow::Context;
use clap::Args;
use nodefdm::data::{slice_sequences, IngestOptions, Manifest, Split};
use nodefdm::model::{train, LossConfig, NodeFdmModel, TrainConfig, WeightConvention};
use nodefdm::nn::AdamWConfig;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrainCliConfig {
    /// Dataset manifest JSON.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory (checkpoint, loss curve, config echo).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub weight_decay: f64,
    /// Loss weighting: "inv-variance" (1/sigma^2) or "inv-std" (1/sigma).
    #[arg(long, default_value = "inv-variance")]
    pub weight_convention: String,
    /// Supervise along-track distance as well.
    #[arg(long, default_value_t = false)]
    pub include_distance: bool,
}

pub fn cmd_train(cfg: &TrainCliConfig) -> anyhow::Result<()> {
    let convention: WeightConvention = cfg
        .weight_convention
        .parse()
        .map_err(|e: String| anyhow::anyhow!(e))?;
    let (manifest, dir) = Manifest::load(&cfg.manifest).context("loading manifest")?;
    let train_flights = manifest
        .load_split(&dir, Split::Train, IngestOptions::default())
        .context("ingesting training flights")?;
    anyhow::ensure!(!train_flights.is_empty(), "empty training split");
    for flight in &train_flights {
        flight.validate_for_training()?;
    }
    let val_flights = manifest.load_split(&dir, Split::Val, IngestOptions::default())?;

    let train_seqs: Vec<_> = train_flights.iter().flat_map(slice_sequences).collect();
    let val_seqs: Vec<_> = val_flights.iter().flat_map(slice_sequences).collect();
    anyhow::ensure!(!train_seqs.is_empty(), "no training sequences");
    log::info!(
        "training on {} sequences ({} flights), validating on {}",
        train_seqs.len(),
        train_flights.len(),
        val_seqs.len()
    );

    let loss = LossConfig {
        convention,
        include_distance: cfg.include_distance,
    };
    let model = NodeFdmModel::from_training_flights(&train_flights, loss, cfg.seed)?;
    let train_cfg = TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        seed: cfg.seed,
        optimizer: AdamWConfig {
            lr: cfg.lr,
            weight_decay: cfg.weight_decay,
            ..AdamWConfig::default()
        },
        loss,
    };

    crate::echo_config(&cfg.out, cfg)?;
    let (best, report) = train(&train_seqs, &val_seqs, model, &train_cfg)?;

    best.save(&cfg.out.join("checkpoint.json"), None)?;
    let mut curve = String::from("epoch,train_loss,val_loss\n");
    for row in &report.history {
        let _ = writeln!(curve, "{},{},{}", row.epoch, row.train_loss, row.val_loss);
    }
    std::fs::write(cfg.out.join("loss_curve.csv"), curve)?;

    println!(
        "train: {} epochs, best val loss {:.6} at epoch {} -> {}",
        report.history.len() - 1,
        report.best_val_loss,
        report.best_epoch,
        cfg.out.join("checkpoint.json").display()
    );
    anyhow::ensure!(
        !report.diverged,
        "training diverged; best checkpoint up to the divergence was saved"
    );
    Ok(())
}
