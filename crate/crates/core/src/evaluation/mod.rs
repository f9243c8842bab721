//! Per-phase evaluation: vertical-speed phase segmentation, pooled
//! MAE/MAPE/ME tables per parameter and phase, and flight-total fuel
//! consumption comparison.

mod report;

pub use report::{
    render_text, write_plot_csv, EvaluationReport, ModelEval, LITERATURE_REFERENCE,
    PLOT_CSV_HEADER,
};

use crate::data::FlightSeries;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("series length mismatch: pred {pred} vs ref {reference}")]
    LengthMismatch { pred: usize, reference: usize },
    #[error("no flights to evaluate")]
    NoFlights,
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Flight phase of one record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseLabel {
    Climb,
    Level,
    Descent,
}

impl PhaseLabel {
    pub fn key(self) -> &'static str {
        match self {
            PhaseLabel::Climb => "climb",
            PhaseLabel::Level => "level",
            PhaseLabel::Descent => "descent",
        }
    }

    pub fn display(self) -> &'static str {
        match self {
            PhaseLabel::Climb => "Climb",
            PhaseLabel::Level => "Level Flight",
            PhaseLabel::Descent => "Descent",
        }
    }
}

/// Phase segmentation settings: 250 ft/min threshold on smoothed vertical
/// speed with a 5-record minimum segment length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub vz_threshold_mps: f64,
    pub hysteresis_records: usize,
    pub smoothing_window: usize,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        PhaseConfig {
            vz_threshold_mps: 1.27,
            hysteresis_records: 5,
            smoothing_window: 5,
        }
    }
}

/// Label every record of the reference flight: climb above +threshold on
/// smoothed V_z, descent below −threshold, level otherwise; segments
/// shorter than the hysteresis length merge into their predecessor.
pub fn label_phases(reference: &FlightSeries, cfg: &PhaseConfig) -> Vec<PhaseLabel> {
    let n = reference.len();
    if n == 0 {
        return Vec::new();
    }
    let half = cfg.smoothing_window.max(1) / 2;
    let smoothed: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let sum: f64 = reference.records[lo..=hi]
                .iter()
                .map(|r| r.intermediates.vz)
                .sum();
            sum / (hi - lo + 1) as f64
        })
        .collect();
    let mut labels: Vec<PhaseLabel> = smoothed
        .iter()
        .map(|&vz| {
            if vz > cfg.vz_threshold_mps {
                PhaseLabel::Climb
            } else if vz < -cfg.vz_threshold_mps {
                PhaseLabel::Descent
            } else {
                PhaseLabel::Level
            }
        })
        .collect();

    // Merge runs shorter than the hysteresis into the preceding segment
    // (the following one for a short leading run).
    let min_run = cfg.hysteresis_records.max(1);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && labels[j] == labels[i] {
            j += 1;
        }
        if j - i < min_run {
            let fill = if i > 0 {
                labels[i - 1]
            } else if j < n {
                labels[j]
            } else {
                labels[i]
            };
            for label in labels.iter_mut().take(j).skip(i) {
                *label = fill;
            }
        }
        i = j;
    }
    labels
}

/// Mean and population standard deviation of a pooled point set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

fn stat_of(xs: &[f64]) -> Stat {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Stat {
        mean,
        std: var.sqrt(),
    }
}

/// MAE/MAPE/ME of one parameter in one phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub mae: Stat,
    /// None when MAPE is not defined for the parameter (flight path angle).
    pub mape: Option<Stat>,
    pub me: Stat,
    pub count: usize,
}

/// Compared parameters, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalParam {
    AltitudeM,
    TasMps,
    GammaDeg,
    MassKg,
}

impl EvalParam {
    pub const ALL: [EvalParam; 4] = [
        EvalParam::AltitudeM,
        EvalParam::TasMps,
        EvalParam::GammaDeg,
        EvalParam::MassKg,
    ];

    pub fn key(self) -> &'static str {
        match self {
            EvalParam::AltitudeM => "altitude_m",
            EvalParam::TasMps => "tas_mps",
            EvalParam::GammaDeg => "gamma_deg",
            EvalParam::MassKg => "mass_kg",
        }
    }

    pub fn display(self) -> &'static str {
        match self {
            EvalParam::AltitudeM => "altitude [m]",
            EvalParam::TasMps => "true air speed [m/s]",
            EvalParam::GammaDeg => "gamma [deg]",
            EvalParam::MassKg => "mass [kg]",
        }
    }

    /// |reference| floor below which points are excluded from MAPE only.
    fn mape_floor(self) -> Option<f64> {
        match self {
            EvalParam::AltitudeM => Some(1.0),
            EvalParam::TasMps => Some(1.0),
            EvalParam::GammaDeg => None, // MAPE not reported
            EvalParam::MassKg => Some(1.0),
        }
    }

    /// (prediction, reference) values in table units.
    fn extract(self, pred: &crate::data::FlightRecord, r: &crate::data::FlightRecord) -> (f64, f64) {
        use crate::atmosphere::units::rad_to_deg;
        match self {
            EvalParam::AltitudeM => (pred.state.h, r.state.h),
            EvalParam::TasMps => (pred.state.v_tas, r.state.v_tas),
            EvalParam::GammaDeg => (rad_to_deg(pred.state.gamma), rad_to_deg(r.state.gamma)),
            EvalParam::MassKg => (pred.state.m, r.state.m),
        }
    }
}

/// Per-parameter, per-phase metric table (the pooled point set shape).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMetricsTable {
    /// param key -> phase key ("all" | "climb" | "level" | "descent") -> cell.
    pub cells: BTreeMap<String, BTreeMap<String, MetricCell>>,
    pub total_points: usize,
    pub flights: usize,
}

impl PhaseMetricsTable {
    pub fn cell(&self, param: EvalParam, phase: Option<PhaseLabel>) -> Option<&MetricCell> {
        let phase_key = phase.map(|p| p.key()).unwrap_or("all");
        self.cells.get(param.key()).and_then(|m| m.get(phase_key))
    }
}

/// Pooled accumulator over any number of flight pairs; metrics are
/// computed over the union of all points, so flight order cannot matter.
#[derive(Debug, Default)]
pub struct PooledPhaseMetrics {
    /// (param, phase) -> (delta, reference) points.
    points: BTreeMap<(&'static str, &'static str), Vec<(f64, f64)>>,
    flights: usize,
}

impl PooledPhaseMetrics {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add one time-aligned prediction/reference pair with the reference's
    /// phase labels.
    pub fn add_flight(
        &mut self,
        pred: &FlightSeries,
        reference: &FlightSeries,
        labels: &[PhaseLabel],
    ) -> Result<(), EvalError> {
        if pred.len() != reference.len() || labels.len() != reference.len() {
            return Err(EvalError::LengthMismatch {
                pred: pred.len(),
                reference: reference.len(),
            });
        }
        for param in EvalParam::ALL {
            for ((p, r), &label) in pred
                .records
                .iter()
                .zip(&reference.records)
                .zip(labels)
            {
                let (pv, rv) = param.extract(p, r);
                let delta = pv - rv;
                self.points
                    .entry((param.key(), label.key()))
                    .or_default()
                    .push((delta, rv));
                self.points
                    .entry((param.key(), "all"))
                    .or_default()
                    .push((delta, rv));
            }
        }
        self.flights += 1;
        Ok(())
    }

    pub fn finalize(self) -> Result<PhaseMetricsTable, EvalError> {
        if self.flights == 0 {
            return Err(EvalError::NoFlights);
        }
        let mut cells: BTreeMap<String, BTreeMap<String, MetricCell>> = BTreeMap::new();
        let mut total_points = 0usize;
        for param in EvalParam::ALL {
            let mut row = BTreeMap::new();
            for phase_key in ["all", "climb", "level", "descent"] {
                let Some(points) = self.points.get(&(param.key(), phase_key)) else {
                    continue;
                };
                if points.is_empty() {
                    continue;
                }
                // Canonical order keeps metrics exactly invariant under
                // flight reordering.
                let mut points = points.clone();
                points.sort_by(|a, b| {
                    a.0.total_cmp(&b.0).then_with(|| a.1.total_cmp(&b.1))
                });
                let deltas: Vec<f64> = points.iter().map(|&(d, _)| d).collect();
                let abs: Vec<f64> = deltas.iter().map(|d| d.abs()).collect();
                let mape = param.mape_floor().map(|floor| {
                    let pct: Vec<f64> = points
                        .iter()
                        .filter(|&&(_, r)| r.abs() >= floor)
                        .map(|&(d, r)| (d / r).abs() * 100.0)
                        .collect();
                    if pct.is_empty() {
                        Stat { mean: f64::NAN, std: f64::NAN }
                    } else {
                        stat_of(&pct)
                    }
                });
                if phase_key == "all" {
                    total_points += deltas.len();
                }
                row.insert(
                    phase_key.to_string(),
                    MetricCell {
                        mae: stat_of(&abs),
                        mape,
                        me: stat_of(&deltas),
                        count: deltas.len(),
                    },
                );
            }
            cells.insert(param.key().to_string(), row);
        }
        Ok(PhaseMetricsTable {
            cells,
            // Points are pooled per parameter; report the per-parameter count.
            total_points: total_points / EvalParam::ALL.len().max(1),
            flights: self.flights,
        })
    }
}

/// Metrics for a single prediction/reference pair.
pub fn phase_metrics(
    pred: &FlightSeries,
    reference: &FlightSeries,
    labels: &[PhaseLabel],
) -> Result<PhaseMetricsTable, EvalError> {
    let mut pooled = PooledPhaseMetrics::new();
    pooled.add_flight(pred, reference, labels)?;
    pooled.finalize()
}

/// Flight-total fuel consumption comparison across flights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsumptionTable {
    pub mae_kg: Stat,
    pub mape_pct: Stat,
    pub me_kg: Stat,
    pub flights: usize,
}

/// Per-flight total consumption m(t0) − m(t_end), aggregated over flights.
/// Flights with a non-monotone reference mass are excluded with a warning.
pub fn consumption_metrics(
    pairs: &[(&FlightSeries, &FlightSeries)],
) -> Result<(ConsumptionTable, Vec<String>), EvalError> {
    const MASS_SLACK_KG: f64 = 0.5;
    let mut deltas = Vec::new();
    let mut pcts = Vec::new();
    let mut warnings = Vec::new();
    for (pred, reference) in pairs {
        let monotone = reference
            .records
            .windows(2)
            .all(|w| w[1].state.m <= w[0].state.m + MASS_SLACK_KG);
        if !monotone || reference.is_empty() || pred.is_empty() {
            warnings.push(format!(
                "flight '{}' excluded from consumption metrics (non-monotone reference mass)",
                reference.tag
            ));
            continue;
        }
        let burn = |s: &FlightSeries| s.records[0].state.m - s.records[s.len() - 1].state.m;
        let delta = burn(pred) - burn(reference);
        deltas.push(delta);
        pcts.push((delta / burn(reference)).abs() * 100.0);
    }
    if deltas.is_empty() {
        return Err(EvalError::NoFlights);
    }
    let abs: Vec<f64> = deltas.iter().map(|d| d.abs()).collect();
    Ok((
        ConsumptionTable {
            mae_kg: stat_of(&abs),
            mape_pct: stat_of(&pcts),
            me_kg: stat_of(&deltas),
            flights: deltas.len(),
        },
        warnings,
    ))
}
