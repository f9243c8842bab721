//! Per-feature normalization statistics computed over the training split.

use super::{DataError, FeatureId, FlightSeries};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Mean and population standard deviation of one feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureStat {
    pub mean: f64,
    pub std: f64,
}

/// Normalization statistics for the whole feature catalog.
///
/// Discrete features (flap, gear, speed brake) pass through with mean 0 and
/// std 1 so that z-scoring leaves them on their physical scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    stats: BTreeMap<String, FeatureStat>,
}

impl NormStats {
    pub fn get(&self, f: FeatureId) -> Result<FeatureStat, DataError> {
        self.stats
            .get(f.name())
            .copied()
            .ok_or_else(|| DataError::MissingStats(f.name().to_string()))
    }

    pub fn mean(&self, f: FeatureId) -> f64 {
        self.stats.get(f.name()).map(|s| s.mean).unwrap_or(0.0)
    }

    pub fn std(&self, f: FeatureId) -> f64 {
        self.stats.get(f.name()).map(|s| s.std).unwrap_or(1.0)
    }

    pub fn normalize(&self, f: FeatureId, x: f64) -> f64 {
        let s = self.stats[f.name()];
        (x - s.mean) / s.std
    }

    pub fn denormalize(&self, f: FeatureId, z: f64) -> f64 {
        let s = self.stats[f.name()];
        z * s.std + s.mean
    }

    /// Build directly from per-feature entries (tests, checkpoints).
    pub fn from_entries(entries: impl IntoIterator<Item = (FeatureId, FeatureStat)>) -> Self {
        NormStats {
            stats: entries
                .into_iter()
                .map(|(f, s)| (f.name().to_string(), s))
                .collect(),
        }
    }
}

/// Compute per-feature mean and population std over every record of every
/// training flight.
pub fn compute_norm_stats(train: &[FlightSeries]) -> Result<NormStats, DataError> {
    if train.is_empty() || train.iter().all(|f| f.is_empty()) {
        return Err(DataError::Empty);
    }
    let mut stats = BTreeMap::new();
    for f in FeatureId::ALL {
        if f.is_discrete() {
            stats.insert(f.name().to_string(), FeatureStat { mean: 0.0, std: 1.0 });
            continue;
        }
        let mut n = 0usize;
        let mut sum = 0.0;
        for flight in train {
            for r in &flight.records {
                sum += f.get(r);
                n += 1;
            }
        }
        let mean = sum / n as f64;
        let mut ssq = 0.0;
        for flight in train {
            for r in &flight.records {
                let d = f.get(r) - mean;
                ssq += d * d;
            }
        }
        let std = (ssq / n as f64).sqrt();
        if !(std > 1e-12 * mean.abs().max(1.0)) {
            return Err(DataError::ZeroVariance(f.name().to_string()));
        }
        stats.insert(f.name().to_string(), FeatureStat { mean, std });
    }
    Ok(NormStats { stats })
}
