//! `export-plots`: render the evaluation plot CSVs as static SVG charts.

use crate::svg::{render, Panel, Series};
use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExportPlotsConfig {
    /// Evaluation output directory (containing plots/*.csv).
    #[arg(long)]
    pub eval_dir: PathBuf,
    /// Where to write the SVGs (default: <eval-dir>/svg).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

const REF_COLOR: &str = "#d62728";
const NODE_COLOR: &str = "#ff7f0e";
const BASELINE_COLOR: &str = "#1f77b4";
const SELECTED_COLOR: &str = "#17a2b8";

pub fn cmd_export_plots(cfg: &ExportPlotsConfig) -> anyhow::Result<()> {
    let plots = cfg.eval_dir.join("plots");
    anyhow::ensure!(plots.is_dir(), "{} not found", plots.display());
    let out_dir = cfg
        .out
        .clone()
        .unwrap_or_else(|| cfg.eval_dir.join("svg"));
    std::fs::create_dir_all(&out_dir)?;

    let mut files: Vec<PathBuf> = std::fs::read_dir(&plots)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    anyhow::ensure!(!files.is_empty(), "no plot CSVs in {}", plots.display());

    for file in &files {
        let svg = plot_csv_to_svg(file)
            .with_context(|| format!("rendering {}", file.display()))?;
        let name = file.file_stem().unwrap().to_string_lossy();
        std::fs::write(out_dir.join(format!("{name}.svg")), svg)?;
    }
    println!(
        "export-plots: rendered {} charts to {}",
        files.len(),
        out_dir.display()
    );
    Ok(())
}

fn plot_csv_to_svg(path: &PathBuf) -> anyhow::Result<String> {
    let content = std::fs::read_to_string(path)?;
    let mut lines = content.lines();
    let header: Vec<&str> = lines
        .next()
        .context("empty plot CSV")?
        .split(',')
        .collect();
    let col = |name: &str| header.iter().position(|h| *h == name);
    let rows: Vec<Vec<Option<f64>>> = lines
        .map(|l| {
            l.split(',')
                .map(|v| v.parse::<f64>().ok())
                .collect::<Vec<_>>()
        })
        .collect();
    let t = col("time_s").context("missing time_s")?;
    let series_of = |name: &str, label: &'static str, color: &'static str, dashed: bool| {
        col(name).map(|c| Series {
            label,
            color,
            dashed,
            points: rows
                .iter()
                .filter_map(|r| match (r.get(t).copied().flatten(), r.get(c).copied().flatten()) {
                    (Some(x), Some(y)) => Some((x, y)),
                    _ => None,
                })
                .collect(),
        })
    };

    let panel = |title: &'static str, suffix: &str, with_sel: bool| -> Panel {
        let mut series = Vec::new();
        if with_sel {
            if let Some(s) = series_of("sel_alt", "selected", SELECTED_COLOR, true) {
                series.push(s);
            }
        }
        for (prefix, label, color) in [
            ("ref", "reference", REF_COLOR),
            ("node_fdm", "node-fdm", NODE_COLOR),
            ("baseline", "baseline", BASELINE_COLOR),
        ] {
            if let Some(s) = series_of(&format!("{prefix}_{suffix}"), label, color, false) {
                if !s.points.is_empty() {
                    series.push(s);
                }
            }
        }
        Panel { title, series }
    };

    let panels = vec![
        panel("Altitude [m]", "alt", true),
        panel("True airspeed [m/s]", "tas", false),
        panel("Flight path angle [deg]", "fpa_deg", false),
        panel("Mass [kg]", "mass", false),
    ];
    Ok(render(&panels, "time [s]"))
}
