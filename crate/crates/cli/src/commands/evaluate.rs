//! `evaluate`: pooled per-phase metric tables and consumption comparison of
//! predicted trajectories against the recorded reference, plus per-flight
//! plot-data CSVs.

use clap::Args;
use nodefdm::data::{ingest_csv, ColumnSchema, FlightSeries, IngestOptions, Manifest, Split};
use nodefdm::evaluation::{
    consumption_metrics, label_phases, render_text, write_plot_csv, EvaluationReport, ModelEval,
    PhaseConfig, PooledPhaseMetrics,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvaluateConfig {
    /// Dataset manifest JSON (reference trajectories).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Split to evaluate (train|val|test).
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Directory of NODE-FDM predictions (one CSV per flight tag).
    #[arg(long)]
    pub node_dir: Option<PathBuf>,
    /// Directory of baseline predictions.
    #[arg(long)]
    pub baseline_dir: Option<PathBuf>,
    /// Output directory (evaluation.json, evaluation.txt, plots/).
    #[arg(long)]
    pub out: PathBuf,
    /// Print published reference values alongside the tables.
    #[arg(long, default_value_t = false)]
    pub reference_values: bool,
    /// Vertical-speed threshold for phase labeling [m/s].
    #[arg(long, default_value_t = 1.27)]
    pub vz_threshold: f64,
}

struct ModelAccumulator {
    name: &'static str,
    dir: PathBuf,
    pooled: PooledPhaseMetrics,
    pairs: Vec<(FlightSeries, FlightSeries)>,
    skipped: usize,
}

pub fn cmd_evaluate(cfg: &EvaluateConfig) -> anyhow::Result<()> {
    let split: Split = cfg.split.parse().map_err(|e: String| anyhow::anyhow!(e))?;
    anyhow::ensure!(
        cfg.node_dir.is_some() || cfg.baseline_dir.is_some(),
        "at least one of --node-dir / --baseline-dir is required"
    );
    let (manifest, dir) = Manifest::load(&cfg.manifest)?;
    let references = manifest.load_split(&dir, split, IngestOptions::default())?;
    anyhow::ensure!(!references.is_empty(), "no flights in split '{}'", cfg.split);
    let phase_cfg = PhaseConfig {
        vz_threshold_mps: cfg.vz_threshold,
        ..PhaseConfig::default()
    };

    let mut accs: Vec<ModelAccumulator> = Vec::new();
    if let Some(d) = &cfg.node_dir {
        accs.push(ModelAccumulator {
            name: "node_fdm",
            dir: d.clone(),
            pooled: PooledPhaseMetrics::new(),
            pairs: Vec::new(),
            skipped: 0,
        });
    }
    if let Some(d) = &cfg.baseline_dir {
        accs.push(ModelAccumulator {
            name: "baseline",
            dir: d.clone(),
            pooled: PooledPhaseMetrics::new(),
            pairs: Vec::new(),
            skipped: 0,
        });
    }

    crate::echo_config(&cfg.out, cfg)?;
    let plots_dir = cfg.out.join("plots");
    std::fs::create_dir_all(&plots_dir)?;

    for reference in &references {
        let labels = label_phases(reference, &phase_cfg);
        let mut per_model: Vec<Option<FlightSeries>> = Vec::new();
        for acc in &mut accs {
            match load_prediction(&acc.dir, &reference.tag, reference.len()) {
                Some(pred) => {
                    acc.pooled.add_flight(&pred, reference, &labels)?;
                    acc.pairs.push((pred.clone(), reference.clone()));
                    per_model.push(Some(pred));
                }
                None => {
                    log::warn!(
                        "{}: no usable {} prediction, skipped",
                        reference.tag,
                        acc.name
                    );
                    acc.skipped += 1;
                    per_model.push(None);
                }
            }
        }
        let node = accs
            .iter()
            .position(|a| a.name == "node_fdm")
            .and_then(|i| per_model[i].clone());
        let baseline = accs
            .iter()
            .position(|a| a.name == "baseline")
            .and_then(|i| per_model[i].clone());
        write_plot_csv(
            &plots_dir.join(format!("{}.csv", reference.tag)),
            reference,
            node.as_ref(),
            baseline.as_ref(),
        )?;
    }

    let mut report = EvaluationReport::default();
    for acc in accs {
        if acc.pairs.is_empty() {
            anyhow::bail!("no flights evaluated for {} (all skipped)", acc.name);
        }
        let phase = acc.pooled.finalize()?;
        let pair_refs: Vec<(&FlightSeries, &FlightSeries)> =
            acc.pairs.iter().map(|(p, r)| (p, r)).collect();
        let (consumption, warnings) = match consumption_metrics(&pair_refs) {
            Ok((table, warnings)) => (Some(table), warnings),
            Err(_) => (None, vec!["no flights usable for consumption".to_string()]),
        };
        for w in warnings {
            log::warn!("{}: {w}", acc.name);
        }
        report
            .models
            .insert(acc.name.to_string(), ModelEval { phase, consumption });
    }

    let text = render_text(&report, cfg.reference_values);
    std::fs::write(cfg.out.join("evaluation.json"), report.to_json()?)?;
    std::fs::write(cfg.out.join("evaluation.txt"), &text)?;
    print!("{text}");
    println!("evaluate: wrote {}", cfg.out.display());
    Ok(())
}

/// Load one prediction CSV leniently; None when missing or unreadable or
/// with a mismatched horizon.
fn load_prediction(dir: &Path, tag: &str, expected_len: usize) -> Option<FlightSeries> {
    let path = dir.join(format!("{tag}.csv"));
    if !path.exists() {
        return None;
    }
    let outcome = ingest_csv(
        &path,
        &ColumnSchema::si(),
        IngestOptions { strict: false },
    )
    .ok()?;
    let mut series = outcome.series;
    series.tag = tag.to_string();
    if series.len() != expected_len {
        log::warn!(
            "{tag}: prediction horizon {} != reference {expected_len}",
            series.len()
        );
        return None;
    }
    Some(series)
}
