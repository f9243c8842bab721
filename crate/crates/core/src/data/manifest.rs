//! Dataset manifest: flight files per split, with disjoint airframes.

use super::{airframe_of, ingest_csv, ColumnSchema, DataError, FlightSeries, IngestOptions};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlightEntry {
    pub tag: String,
    /// Path relative to the manifest file.
    pub file: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitFiles {
    pub train: Vec<FlightEntry>,
    pub val: Vec<FlightEntry>,
    pub test: Vec<FlightEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub dt_s: f64,
    /// Schema sidecar path, relative to the manifest file.
    pub schema: String,
    pub splits: SplitFiles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::str::FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split '{other}' (train|val|test)")),
        }
    }
}

impl Manifest {
    pub fn new(schema: impl Into<String>, splits: SplitFiles) -> Self {
        Manifest {
            version: 1,
            dt_s: super::SAMPLE_DT_S,
            schema: schema.into(),
            splits,
        }
    }

    pub fn entries(&self, split: Split) -> &[FlightEntry] {
        match split {
            Split::Train => &self.splits.train,
            Split::Val => &self.splits.val,
            Split::Test => &self.splits.test,
        }
    }

    /// No airframe may appear in more than one split.
    pub fn validate(&self) -> Result<(), DataError> {
        let sets: Vec<BTreeSet<&str>> = [&self.splits.train, &self.splits.val, &self.splits.test]
            .iter()
            .map(|s| s.iter().map(|e| airframe_of(&e.tag)).collect())
            .collect();
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                if let Some(af) = sets[i].intersection(&sets[j]).next() {
                    return Err(DataError::SplitOverlap(af.to_string()));
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf), DataError> {
        let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        manifest.validate()?;
        let dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok((manifest, dir))
    }

    /// Ingest every flight of a split, in manifest order.
    pub fn load_split(
        &self,
        dir: &Path,
        split: Split,
        opts: IngestOptions,
    ) -> Result<Vec<FlightSeries>, DataError> {
        let schema = ColumnSchema::load(&dir.join(&self.schema))?;
        let mut flights = Vec::new();
        for entry in self.entries(split) {
            let outcome = ingest_csv(&dir.join(&entry.file), &schema, opts)?;
            let mut series = outcome.series;
            series.tag = entry.tag.clone();
            flights.push(series);
        }
        Ok(flights)
    }
}
