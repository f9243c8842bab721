use clap::{Parser, Subcommand};
use nodefdm_cli::*;
use std::path::PathBuf;

/// Neural-ODE flight dynamics toolkit: synthetic QAR-like datasets, model
/// training, trajectory simulation and per-phase evaluation.
#[derive(Parser)]
#[command(name = "nodefdm", version, about)]
struct Cli {
    /// JSON file whose keys override the subcommand's flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (flights, schema, manifest).
    GenData(GenDataConfig),
    /// Train the model on a dataset manifest.
    Train(TrainCliConfig),
    /// Regenerate flights with the trained model or the baseline.
    Simulate(SimulateConfig),
    /// Compare predictions against the reference split.
    Evaluate(EvaluateConfig),
    /// Render evaluation plot CSVs as SVG charts.
    ExportPlots(ExportPlotsConfig),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    fn with_overrides<C, F>(mut cfg: C, file: Option<&PathBuf>, f: F) -> anyhow::Result<()>
    where
        C: serde::Serialize + serde::de::DeserializeOwned,
        F: FnOnce(&C) -> anyhow::Result<()>,
    {
        if let Some(path) = file {
            nodefdm_cli::merge(&mut cfg, path)?;
        }
        f(&cfg)
    }
    match cli.command {
        Command::GenData(cfg) => with_overrides(cfg, cli.config.as_ref(), |c| cmd_gen_data(c)),
        Command::Train(cfg) => with_overrides(cfg, cli.config.as_ref(), |c| cmd_train(c)),
        Command::Simulate(cfg) => with_overrides(cfg, cli.config.as_ref(), |c| cmd_simulate(c)),
        Command::Evaluate(cfg) => with_overrides(cfg, cli.config.as_ref(), |c| cmd_evaluate(c)),
        Command::ExportPlots(cfg) => {
            with_overrides(cfg, cli.config.as_ref(), |c| cmd_export_plots(c))
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NODEFDM_LOG", "info"))
        .format_timestamp(None)
        .init();
    if let Err(e) = run(Cli::parse()) {
        log::error!("{e:#}");
        std::process::exit(1);
    }
}
