//! Flight data model: record/series/sequence types, CSV ingestion, dataset
//! manifests and normalization statistics.
//!
//! All values are SI once inside a [`FlightRecord`]; unit conversion happens
//! at the CSV boundary, driven by a schema sidecar.

mod csv_io;
mod features;
mod manifest;
mod norm;

pub use csv_io::{export_csv, ingest_csv, ColumnSchema, IngestOptions, IngestOutcome, CSV_COLUMNS};
pub use features::FeatureId;
pub use manifest::{FlightEntry, Manifest, Split, SplitFiles};
pub use norm::{compute_norm_stats, FeatureStat, NormStats};

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

/// Sample interval of the data model [s] (0.25 Hz).
pub const SAMPLE_DT_S: f64 = 4.0;
/// Fixed training sequence length (60 steps = four minutes).
pub const SEQUENCE_LEN: usize = 60;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing required column '{0}'")]
    MissingColumn(String),
    #[error("time column is not strictly increasing at row {0}")]
    NonMonotonicTime(usize),
    #[error("{bad} of {total} rows invalid (> 1% threshold), flight rejected")]
    TooManyBadRows { bad: usize, total: usize },
    #[error("input sampling coarser than 4 s (median {0:.3} s) cannot be decimated")]
    UnsupportedSampling(f64),
    #[error("flight '{tag}' has {len} records, shorter than the required {min}")]
    TooShort { tag: String, len: usize, min: usize },
    #[error("zero-variance continuous feature '{0}' cannot be normalized")]
    ZeroVariance(String),
    #[error("feature '{0}' missing from normalization stats")]
    MissingStats(String),
    #[error("record {index}: {what}")]
    InvalidRecord { index: usize, what: String },
    #[error("airframe '{0}' appears in more than one split")]
    SplitOverlap(String),
    #[error("empty flight list")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Point-mass state x(t) = {h, d, γ, V_TAS, m}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    /// Altitude [m].
    pub h: f64,
    /// Along-track distance [m].
    pub d: f64,
    /// Flight path angle [rad].
    pub gamma: f64,
    /// True airspeed [m/s].
    pub v_tas: f64,
    /// Mass [kg].
    pub m: f64,
}

impl StateVector {
    pub fn as_array(&self) -> [f64; 5] {
        [self.h, self.d, self.gamma, self.v_tas, self.m]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        StateVector {
            h: a[0],
            d: a[1],
            gamma: a[2],
            v_tas: a[3],
            m: a[4],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

/// Autopilot / FMS targets and configuration u(t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlVector {
    /// Selected altitude [m].
    pub h_sel: f64,
    /// Selected speed as a CAS target [m/s].
    pub v_sel: f64,
    /// Selected vertical speed [m/s]; 0.0 when no vertical-speed mode is set.
    pub vz_sel: f64,
    /// Flap configuration index 0..=4.
    pub flap: u8,
    /// Landing gear down.
    pub gear: bool,
    /// Speed brake deployed.
    pub speed_brake: bool,
}

/// Environmental context e0(t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextVector {
    /// Static air temperature [K].
    pub t_oat: f64,
    /// Headwind component [m/s].
    pub wind_par: f64,
    /// Crosswind component [m/s].
    pub wind_perp: f64,
}

/// Derived trajectory / angle / engine channels e1..e3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntermediateVector {
    /// Mach number [-].
    pub mach: f64,
    /// Calibrated airspeed [m/s].
    pub v_cas: f64,
    /// Vertical speed [m/s].
    pub vz: f64,
    /// Ground speed [m/s].
    pub v_gs: f64,
    /// h_sel − h [m].
    pub dh_sel: f64,
    /// V_sel − V_CAS [m/s].
    pub dv_sel: f64,
    /// Angle of attack [rad].
    pub alpha: f64,
    /// Pitch angle [rad].
    pub theta: f64,
    /// Fan speed [%RPM].
    pub n1: f64,
    /// Fuel flow [kg/s].
    pub fuel_flow: f64,
}

/// One timestamped sample of a flight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlightRecord {
    /// Time since the first record [s].
    pub t_s: f64,
    pub state: StateVector,
    pub controls: ControlVector,
    pub context: ContextVector,
    pub intermediates: IntermediateVector,
}

/// A whole flight sampled at 0.25 Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightSeries {
    /// Flight identifier, formatted `<airframe>-<index>`.
    pub tag: String,
    /// Sample interval [s].
    pub dt_s: f64,
    pub records: Vec<FlightRecord>,
}

impl FlightSeries {
    pub fn new(tag: impl Into<String>, records: Vec<FlightRecord>) -> Self {
        FlightSeries {
            tag: tag.into(),
            dt_s: SAMPLE_DT_S,
            records,
        }
    }

    /// Airframe tag: everything before the final `-`.
    pub fn airframe(&self) -> &str {
        airframe_of(&self.tag)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Structural validation for training data: uniform spacing, minimum
    /// length, monotone distance, non-increasing mass and per-record
    /// invariants.
    pub fn validate_for_training(&self) -> Result<(), DataError> {
        if self.len() < SEQUENCE_LEN {
            return Err(DataError::TooShort {
                tag: self.tag.clone(),
                len: self.len(),
                min: SEQUENCE_LEN,
            });
        }
        self.validate_records()
    }

    /// Per-record and pairwise invariants (no minimum length).
    pub fn validate_records(&self) -> Result<(), DataError> {
        // Small slack on the mass channel: it is an estimated quantity in
        // real QAR streams.
        const MASS_SLACK_KG: f64 = 0.5;
        for (i, r) in self.records.iter().enumerate() {
            let invalid = |what: &str| DataError::InvalidRecord {
                index: i,
                what: what.to_string(),
            };
            if !(r.state.m > 0.0) {
                return Err(invalid("mass must be positive"));
            }
            if !(r.state.v_tas >= 0.0) {
                return Err(invalid("TAS must be non-negative"));
            }
            if !(r.state.gamma.abs() < FRAC_PI_2) {
                return Err(invalid("flight path angle out of (-pi/2, pi/2)"));
            }
            if !(r.intermediates.fuel_flow >= 0.0) {
                return Err(invalid("fuel flow must be non-negative"));
            }
            if i > 0 {
                let prev = &self.records[i - 1];
                if (r.t_s - prev.t_s - self.dt_s).abs() > 1e-6 {
                    return Err(invalid("non-uniform sample spacing"));
                }
                if r.state.d < prev.state.d {
                    return Err(invalid("along-track distance decreased"));
                }
                if r.state.m > prev.state.m + MASS_SLACK_KG {
                    return Err(invalid("mass increased"));
                }
            }
        }
        Ok(())
    }
}

/// A window of exactly [`SEQUENCE_LEN`] consecutive records of one flight.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub flight_tag: String,
    /// Index of the first record within the source flight.
    pub start: usize,
    pub records: Vec<FlightRecord>,
}

/// Split a flight into non-overlapping 60-step windows; the trailing
/// remainder is discarded.
pub fn slice_sequences(flight: &FlightSeries) -> Vec<Sequence> {
    let n = flight.len() / SEQUENCE_LEN;
    (0..n)
        .map(|i| {
            let start = i * SEQUENCE_LEN;
            Sequence {
                flight_tag: flight.tag.clone(),
                start,
                records: flight.records[start..start + SEQUENCE_LEN].to_vec(),
            }
        })
        .collect()
}

/// Airframe part of a flight tag (`"AF03-0007"` -> `"AF03"`).
pub fn airframe_of(tag: &str) -> &str {
    match tag.rfind('-') {
        Some(i) => &tag[..i],
        None => tag,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn dummy_record(t_s: f64) -> FlightRecord {
        FlightRecord {
            t_s,
            state: StateVector {
                h: 1000.0 + t_s,
                d: 100.0 * t_s,
                gamma: 0.02,
                v_tas: 150.0,
                m: 60_000.0 - 0.1 * t_s,
            },
            controls: ControlVector {
                h_sel: 10_000.0,
                v_sel: 150.0,
                vz_sel: 0.0,
                flap: 0,
                gear: false,
                speed_brake: false,
            },
            context: ContextVector {
                t_oat: 280.0,
                wind_par: 3.0,
                wind_perp: -1.0,
            },
            intermediates: IntermediateVector {
                mach: 0.45,
                v_cas: 140.0,
                vz: 3.0,
                v_gs: 147.0,
                dh_sel: 9_000.0 - t_s,
                dv_sel: 10.0,
                alpha: 0.05,
                theta: 0.07,
                n1: 85.0,
                fuel_flow: 0.8,
            },
        }
    }

    fn flight_of(n: usize) -> FlightSeries {
        let records = (0..n).map(|k| dummy_record(4.0 * k as f64)).collect();
        FlightSeries::new("AF01-0001", records)
    }

    #[test]
    fn slicing_counts() {
        assert_eq!(slice_sequences(&flight_of(180)).len(), 3);
        assert_eq!(slice_sequences(&flight_of(179)).len(), 2);
        assert_eq!(slice_sequences(&flight_of(59)).len(), 0);
    }

    #[test]
    fn sequences_are_identical_to_series_slices() {
        let flight = flight_of(150);
        let seqs = slice_sequences(&flight);
        assert_eq!(seqs.len(), 2);
        for s in &seqs {
            assert_eq!(s.records.len(), SEQUENCE_LEN);
            assert_eq!(
                s.records[..],
                flight.records[s.start..s.start + SEQUENCE_LEN]
            );
        }
        // Non-overlap.
        assert_eq!(seqs[0].start + SEQUENCE_LEN, seqs[1].start);
    }

    #[test]
    fn validation_catches_mass_increase() {
        let mut flight = flight_of(70);
        flight.records[10].state.m += 10.0;
        assert!(flight.validate_for_training().is_err());
    }

    #[test]
    fn validation_requires_min_length() {
        assert!(flight_of(59).validate_for_training().is_err());
        assert!(flight_of(60).validate_for_training().is_ok());
    }

    #[test]
    fn airframe_prefix() {
        assert_eq!(airframe_of("AF03-0007"), "AF03");
        assert_eq!(airframe_of("plain"), "plain");
    }
}
