//! Library surface of the `nodefdm` command-line tool. Each subcommand is
//! an ordinary function over a config struct, so tests can drive the full
//! pipeline without spawning processes.

pub mod commands;
pub mod svg;

pub use commands::evaluate::{cmd_evaluate, EvaluateConfig};
pub use commands::export_plots::{cmd_export_plots, ExportPlotsConfig};
pub use commands::gen_data::{cmd_gen_data, GenDataConfig};
pub use commands::simulate::{cmd_simulate, SimulateConfig, SimulatedModel};
pub use commands::train::{cmd_train, TrainCliConfig};

use serde::Serialize;
use std::path::Path;

/// Echo the resolved config into the output directory for reproducibility.
pub(crate) fn echo_config<C: Serialize>(out_dir: &Path, config: &C) -> anyhow::Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(
        out_dir.join("run_config.json"),
        serde_json::to_string_pretty(config)? + "\n",
    )?;
    Ok(())
}

/// Merge a partial JSON config over an already-parsed config struct: any
/// key present in the JSON replaces the corresponding field.
pub fn merge<C>(config: &mut C, path: &Path) -> anyhow::Result<()>
where
    C: Serialize + serde::de::DeserializeOwned,
{
    let overrides: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let mut base = serde_json::to_value(&*config)?;
    let serde_json::Value::Object(over) = overrides else {
        anyhow::bail!("config file must contain a JSON object");
    };
    let serde_json::Value::Object(ref mut map) = base else {
        anyhow::bail!("config struct must serialize to an object");
    };
    for (k, v) in over {
        if !map.contains_key(&k) {
            anyhow::bail!("unknown config key '{k}'");
        }
        map.insert(k, v);
    }
    *config = serde_json::from_value(base)?;
    Ok(())
}
