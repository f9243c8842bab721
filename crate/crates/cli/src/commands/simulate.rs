//! `simulate`: regenerate every test flight from its first recorded point
//! over the recorded controls, with either the NODE-FDM checkpoint or the
//! point-mass baseline.

use anyhow::Context;
use clap::{Args, ValueEnum};
use nodefdm::baseline::{simulate_flight, ControlGains, SimFailure};
use nodefdm::data::{export_csv, IngestOptions, Manifest, Split};
use nodefdm::model::{rollout, NodeFdmModel};
use nodefdm::performance::PerformanceConfig;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulatedModel {
    NodeFdm,
    Baseline,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateConfig {
    /// Dataset manifest JSON.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Split to simulate (train|val|test).
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Which model produces the trajectories.
    #[arg(long, value_enum)]
    pub model: SimulatedModel,
    /// NODE-FDM checkpoint (required with --model node-fdm).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Performance config for the baseline; defaults to the dataset's
    /// nominal_performance.json.
    #[arg(long)]
    pub perf_config: Option<PathBuf>,
    /// Extra coherent coefficient perturbation applied to the baseline
    /// config (model-mismatch studies).
    #[arg(long, default_value_t = 0.0)]
    pub perturb: f64,
    /// Output directory (one CSV per flight plus failures.json).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_simulate(cfg: &SimulateConfig) -> anyhow::Result<()> {
    let split: Split = cfg.split.parse().map_err(|e: String| anyhow::anyhow!(e))?;
    let (manifest, dir) = Manifest::load(&cfg.manifest)?;
    let flights = manifest.load_split(&dir, split, IngestOptions::default())?;
    anyhow::ensure!(!flights.is_empty(), "split '{}' is empty", cfg.split);

    enum Runner {
        Node(Box<NodeFdmModel>),
        Baseline(Box<PerformanceConfig>, ControlGains),
    }
    let runner = match cfg.model {
        SimulatedModel::NodeFdm => {
            let path = cfg
                .checkpoint
                .as_ref()
                .context("--checkpoint is required with --model node-fdm")?;
            let (model, _) = NodeFdmModel::load(path).context("loading checkpoint")?;
            Runner::Node(Box::new(model))
        }
        SimulatedModel::Baseline => {
            let path = cfg
                .perf_config
                .clone()
                .unwrap_or_else(|| dir.join("nominal_performance.json"));
            let perf = PerformanceConfig::load(&path).context("loading performance config")?;
            Runner::Baseline(Box::new(perf.perturbed(cfg.perturb)), ControlGains::default())
        }
    };

    crate::echo_config(&cfg.out, cfg)?;
    let mut failures: Vec<SimFailure> = Vec::new();
    let mut failed_tags: Vec<String> = Vec::new();
    for flight in &flights {
        let controls: Vec<_> = flight.records.iter().map(|r| r.controls).collect();
        let context: Vec<_> = flight.records.iter().map(|r| r.context).collect();
        let p0 = &flight.records[0];
        let out_path = cfg.out.join(format!("{}.csv", flight.tag));
        match &runner {
            Runner::Node(model) => {
                match rollout(model, &p0.state, &controls, &context) {
                    Ok(out) => {
                        let series =
                            out.into_series(&flight.tag, &controls, &context, model.dt_s);
                        export_csv(&series, &out_path)?;
                    }
                    Err(e) => {
                        log::warn!("{}: {e}", flight.tag);
                        failures.push(SimFailure {
                            step: e.step,
                            reason: e.reason,
                        });
                        failed_tags.push(flight.tag.clone());
                    }
                }
            }
            Runner::Baseline(perf, gains) => {
                let outcome =
                    simulate_flight(&flight.tag, p0, &controls, &context, perf, gains);
                export_csv(&outcome.series, &out_path)?;
                if let Some(f) = outcome.failure {
                    log::warn!("{}: truncated at step {}: {}", flight.tag, f.step, f.reason);
                    failures.push(f);
                    failed_tags.push(flight.tag.clone());
                }
            }
        }
    }

    let failure_entries: Vec<serde_json::Value> = failed_tags
        .iter()
        .zip(&failures)
        .map(|(tag, f)| {
            serde_json::json!({ "tag": tag, "step": f.step, "reason": f.reason })
        })
        .collect();
    std::fs::write(
        cfg.out.join("failures.json"),
        serde_json::to_string_pretty(&failure_entries)? + "\n",
    )?;

    println!(
        "simulate: {} flights -> {} ({} failures)",
        flights.len(),
        cfg.out.display(),
        failures.len()
    );
    anyhow::ensure!(
        failures.is_empty(),
        "{} flight(s) failed; see failures.json",
        failures.len()
    );
    Ok(())
}
