//! Report rendering: aligned text tables, JSON export and per-flight plot
//! CSVs.

use super::{ConsumptionTable, EvalError, EvalParam, MetricCell, PhaseMetricsTable};
use crate::atmosphere::units::rad_to_deg;
use crate::data::FlightSeries;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Evaluation results for one model (phase table plus consumption).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEval {
    pub phase: PhaseMetricsTable,
    pub consumption: Option<ConsumptionTable>,
}

/// Full evaluation artifact: one entry per evaluated model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub models: BTreeMap<String, ModelEval>,
}

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String, EvalError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self, EvalError> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Published A320 QAR study values, shown as context only (never used as
/// pass/fail targets): all-phase altitude MAE and flight-total consumption
/// MAPE for NODE-FDM vs the BADA-based pipeline.
pub const LITERATURE_REFERENCE: &str = "\
Literature reference (published A320 QAR study; mean (std)):
  altitude MAE, all phases : NODE-FDM 61.90 (145.54) m   | BADA 167.47 (402.75) m
  consumption MAPE         : NODE-FDM 1.54 (1.13) %      | BADA 3.03 (1.75) %
";

fn fmt_stat(s: &super::Stat) -> String {
    if s.mean.is_nan() {
        "N/A".to_string()
    } else {
        format!("{:.2} ({:.2})", s.mean, s.std)
    }
}

fn fmt_mape(cell: &MetricCell) -> String {
    match &cell.mape {
        Some(s) => fmt_stat(s),
        None => "N/A".to_string(),
    }
}

/// Render the per-phase and consumption tables as aligned text. The layout
/// is fixed (golden-file tested); `include_reference` appends the published
/// reference block.
pub fn render_text(report: &EvaluationReport, include_reference: bool) -> String {
    let mut out = String::new();
    for (name, eval) in &report.models {
        let _ = writeln!(
            out,
            "== {name} ({} points, {} flights) ==",
            eval.phase.total_points, eval.phase.flights
        );
        let _ = writeln!(
            out,
            "{:<22} {:<14} {:>18} {:>18} {:>18}",
            "parameter", "phase", "MAE", "MAPE (%)", "ME"
        );
        for param in EvalParam::ALL {
            let phases: [(&str, &str); 4] = [
                ("all", "All phases"),
                ("climb", "Climb"),
                ("level", "Level Flight"),
                ("descent", "Descent"),
            ];
            let mut first = true;
            for (key, label) in phases {
                let Some(cell) = eval
                    .phase
                    .cells
                    .get(param.key())
                    .and_then(|row| row.get(key))
                else {
                    continue;
                };
                let param_label = if first { param.display() } else { "" };
                first = false;
                let _ = writeln!(
                    out,
                    "{:<22} {:<14} {:>18} {:>18} {:>18}",
                    param_label,
                    label,
                    fmt_stat(&cell.mae),
                    fmt_mape(cell),
                    fmt_stat(&cell.me)
                );
            }
        }
        if let Some(c) = &eval.consumption {
            let _ = writeln!(
                out,
                "{:<22} {:<14} {:>18} {:>18} {:>18}",
                "consumption [kg]",
                format!("{} flights", c.flights),
                fmt_stat(&c.mae_kg),
                fmt_stat(&c.mape_pct),
                fmt_stat(&c.me_kg)
            );
        }
        out.push('\n');
    }
    if include_reference {
        out.push_str(LITERATURE_REFERENCE);
    }
    out
}

/// Fixed column set of the per-flight plot CSV (flight path angle in
/// degrees). Missing models leave their columns empty.
pub const PLOT_CSV_HEADER: &str = "time_s,sel_alt,ref_alt,ref_tas,ref_fpa_deg,ref_mass,\
node_fdm_alt,node_fdm_tas,node_fdm_fpa_deg,node_fdm_mass,\
baseline_alt,baseline_tas,baseline_fpa_deg,baseline_mass";

/// Write the time-series comparison CSV for one flight.
pub fn write_plot_csv(
    path: &Path,
    reference: &FlightSeries,
    node_fdm: Option<&FlightSeries>,
    baseline: Option<&FlightSeries>,
) -> Result<(), EvalError> {
    let mut out = String::new();
    out.push_str(PLOT_CSV_HEADER);
    out.push('\n');
    let cols = |s: Option<&FlightSeries>, k: usize| -> String {
        match s.and_then(|s| s.records.get(k)) {
            Some(r) => format!(
                "{},{},{},{}",
                r.state.h,
                r.state.v_tas,
                rad_to_deg(r.state.gamma),
                r.state.m
            ),
            None => ",,,".to_string(),
        }
    };
    for (k, r) in reference.records.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.t_s,
            r.controls.h_sel,
            r.state.h,
            r.state.v_tas,
            rad_to_deg(r.state.gamma),
            r.state.m,
            cols(node_fdm, k),
            cols(baseline, k)
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}


#[cfg(test)]
pub(crate) mod tests_support {
    use crate::data::{
        ContextVector, ControlVector, FlightRecord, FlightSeries, IntermediateVector, StateVector,
    };

    /// A 12-record level pair with a small constant altitude offset.
    pub fn toy_series_pair() -> (FlightSeries, FlightSeries) {
        let record = |k: usize| FlightRecord {
            t_s: 4.0 * k as f64,
            state: StateVector {
                h: 8_000.0,
                d: 800.0 * k as f64,
                gamma: 0.0,
                v_tas: 210.0,
                m: 60_000.0 - k as f64,
            },
            controls: ControlVector {
                h_sel: 8_000.0,
                v_sel: 140.0,
                vz_sel: 0.0,
                flap: 0,
                gear: false,
                speed_brake: false,
            },
            context: ContextVector {
                t_oat: 240.0,
                wind_par: 0.0,
                wind_perp: 0.0,
            },
            intermediates: IntermediateVector {
                mach: 0.68,
                v_cas: 140.0,
                vz: 0.0,
                v_gs: 210.0,
                dh_sel: 0.0,
                dv_sel: 0.0,
                alpha: 0.04,
                theta: 0.04,
                n1: 78.0,
                fuel_flow: 0.65,
            },
        };
        let reference = FlightSeries::new("AF09-0001", (0..12).map(record).collect());
        let mut pred = reference.clone();
        pred.tag = "AF09-0001".to_string();
        for r in &mut pred.records {
            r.state.h += 7.5;
            r.state.v_tas -= 0.8;
        }
        (pred, reference)
    }
}
