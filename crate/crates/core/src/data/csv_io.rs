//! Flight CSV ingestion and export.
//!
//! The wire format is a plain header CSV with the fixed column set
//! [`CSV_COLUMNS`]. Units are declared by a schema sidecar JSON mapping
//! column names to [`Unit`]s; everything is converted to SI on ingest and
//! written back in SI on export. Denser-than-0.25 Hz input is decimated to
//! the 4-second grid by nearest-sample selection.

use super::{
    ContextVector, ControlVector, DataError, FlightRecord, FlightSeries, IntermediateVector,
    StateVector, SAMPLE_DT_S,
};
use crate::atmosphere::units::Unit;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Required CSV columns, in header order.
pub const CSV_COLUMNS: [&str; 23] = [
    "time_s", "alt", "dist", "fpa", "tas", "mass", "sel_alt", "sel_spd", "sel_vs", "flap",
    "gear", "spdbrk", "oat", "wind_par", "wind_perp", "mach", "cas", "vs", "gs", "aoa", "pitch",
    "n1", "fuel_flow",
];

/// Unit declaration for each data column of a flight CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub units: BTreeMap<String, Unit>,
}

impl ColumnSchema {
    /// All columns already in SI.
    pub fn si() -> Self {
        use Unit::*;
        let pairs: [(&str, Unit); 22] = [
            ("alt", Meter),
            ("dist", Meter),
            ("fpa", Radian),
            ("tas", MeterPerSecond),
            ("mass", Kilogram),
            ("sel_alt", Meter),
            ("sel_spd", MeterPerSecond),
            ("sel_vs", MeterPerSecond),
            ("flap", Index),
            ("gear", Binary),
            ("spdbrk", Binary),
            ("oat", Kelvin),
            ("wind_par", MeterPerSecond),
            ("wind_perp", MeterPerSecond),
            ("mach", Dimensionless),
            ("cas", MeterPerSecond),
            ("vs", MeterPerSecond),
            ("gs", MeterPerSecond),
            ("aoa", Radian),
            ("pitch", Radian),
            ("n1", Percent),
            ("fuel_flow", KilogramPerSecond),
        ];
        ColumnSchema {
            units: pairs
                .iter()
                .map(|(c, u)| (c.to_string(), *u))
                .collect(),
        }
    }

    /// Native QAR units (feet, knots, degrees, Celsius, kg/h).
    pub fn qar() -> Self {
        use Unit::*;
        let pairs: [(&str, Unit); 22] = [
            ("alt", Foot),
            ("dist", NauticalMile),
            ("fpa", Degree),
            ("tas", Knot),
            ("mass", Kilogram),
            ("sel_alt", Foot),
            ("sel_spd", Knot),
            ("sel_vs", FootPerMinute),
            ("flap", Index),
            ("gear", Binary),
            ("spdbrk", Binary),
            ("oat", Celsius),
            ("wind_par", Knot),
            ("wind_perp", Knot),
            ("mach", Dimensionless),
            ("cas", Knot),
            ("vs", FootPerMinute),
            ("gs", Knot),
            ("aoa", Degree),
            ("pitch", Degree),
            ("n1", Percent),
            ("fuel_flow", KilogramPerHour),
        ];
        ColumnSchema {
            units: pairs
                .iter()
                .map(|(c, u)| (c.to_string(), *u))
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    fn unit(&self, col: &str) -> Result<Unit, DataError> {
        self.units
            .get(col)
            .copied()
            .ok_or_else(|| DataError::MissingColumn(format!("{col} (in schema)")))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IngestOptions {
    /// Enforce plausibility bands on intermediates (N1 range, OAT band).
    /// Training data is ingested strictly; model-predicted series are not.
    pub strict: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { strict: true }
    }
}

#[derive(Debug)]
pub struct IngestOutcome {
    pub series: FlightSeries,
    /// Rows dropped for unparsable/NaN/implausible fields.
    pub rejected_rows: usize,
}

/// Read one flight CSV, convert to SI per the schema and resample to the
/// 4-second grid. The flight tag is the file stem.
pub fn ingest_csv(
    path: &Path,
    schema: &ColumnSchema,
    opts: IngestOptions,
) -> Result<IngestOutcome, DataError> {
    let tag = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "flight".to_string());
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut col_idx = [0usize; CSV_COLUMNS.len()];
    for (i, name) in CSV_COLUMNS.iter().enumerate() {
        col_idx[i] = headers
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))?;
    }

    // Unit converters, aligned with CSV_COLUMNS[1..].
    let mut units = Vec::with_capacity(22);
    for name in &CSV_COLUMNS[1..] {
        units.push(schema.unit(name)?);
    }

    let mut total = 0usize;
    let mut rejected = 0usize;
    let mut rows: Vec<(f64, [f64; 22])> = Vec::new();
    for record in reader.records() {
        let record = record?;
        total += 1;
        let mut vals = [0.0f64; 22];
        let mut ok = true;
        let t: Option<f64> = record.get(col_idx[0]).and_then(|s| s.trim().parse().ok());
        let t = match t {
            Some(t) if t.is_finite() => t,
            _ => {
                rejected += 1;
                continue;
            }
        };
        for (j, unit) in units.iter().enumerate() {
            match record.get(col_idx[j + 1]).and_then(|s| s.trim().parse::<f64>().ok()) {
                Some(v) if v.is_finite() => vals[j] = unit.to_si(v),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && !row_plausible(&vals, opts.strict) {
            ok = false;
        }
        if !ok {
            rejected += 1;
            continue;
        }
        rows.push((t, vals));
    }

    if total == 0 || rejected * 100 > total {
        return Err(DataError::TooManyBadRows {
            bad: rejected,
            total,
        });
    }
    for i in 1..rows.len() {
        if rows[i].0 <= rows[i - 1].0 {
            return Err(DataError::NonMonotonicTime(i));
        }
    }

    let picked = decimate_to_grid(&rows)?;
    let records: Vec<FlightRecord> = picked
        .iter()
        .enumerate()
        .map(|(k, &i)| build_record(SAMPLE_DT_S * k as f64, &rows[i].1))
        .collect();

    Ok(IngestOutcome {
        series: FlightSeries::new(tag, records),
        rejected_rows: rejected,
    })
}

/// Nearest-sample decimation onto the t0 + 4k grid.
fn decimate_to_grid(rows: &[(f64, [f64; 22])]) -> Result<Vec<usize>, DataError> {
    if rows.len() < 2 {
        return Ok((0..rows.len()).collect());
    }
    let mut diffs: Vec<f64> = rows.windows(2).map(|w| w[1].0 - w[0].0).collect();
    diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = diffs[diffs.len() / 2];
    if median > SAMPLE_DT_S + 1e-6 {
        return Err(DataError::UnsupportedSampling(median));
    }
    let t0 = rows[0].0;
    let t_end = rows[rows.len() - 1].0;
    let mut picked = Vec::new();
    let mut cursor = 0usize;
    let mut k = 0usize;
    loop {
        let target = t0 + SAMPLE_DT_S * k as f64;
        if target > t_end + 1e-9 {
            break;
        }
        while cursor + 1 < rows.len()
            && (rows[cursor + 1].0 - target).abs() <= (rows[cursor].0 - target).abs()
        {
            cursor += 1;
        }
        // Gaps left by rejected rows reuse the nearest surviving sample, so
        // the grid stays uniform.
        picked.push(cursor);
        k += 1;
    }
    Ok(picked)
}

fn row_plausible(v: &[f64; 22], strict: bool) -> bool {
    let (mass, flap, gear, spdbrk) = (v[4], v[8], v[9], v[10]);
    let (oat, n1, fuel_flow, gamma) = (v[11], v[20], v[21], v[2]);
    if !(mass > 0.0) || fuel_flow < 0.0 || gamma.abs() >= std::f64::consts::FRAC_PI_2 {
        return false;
    }
    if flap.fract() != 0.0 || !(0.0..=4.0).contains(&flap) {
        return false;
    }
    if !(gear == 0.0 || gear == 1.0) || !(spdbrk == 0.0 || spdbrk == 1.0) {
        return false;
    }
    if strict && (!(180.0..330.0).contains(&oat) || !(0.0..=110.0).contains(&n1)) {
        return false;
    }
    true
}

fn build_record(t_s: f64, v: &[f64; 22]) -> FlightRecord {
    let state = StateVector {
        h: v[0],
        d: v[1],
        gamma: v[2],
        v_tas: v[3],
        m: v[4],
    };
    let controls = ControlVector {
        h_sel: v[5],
        v_sel: v[6],
        vz_sel: v[7],
        flap: v[8] as u8,
        gear: v[9] != 0.0,
        speed_brake: v[10] != 0.0,
    };
    let context = ContextVector {
        t_oat: v[11],
        wind_par: v[12],
        wind_perp: v[13],
    };
    let intermediates = IntermediateVector {
        mach: v[14],
        v_cas: v[15],
        vz: v[16],
        v_gs: v[17],
        dh_sel: controls.h_sel - state.h,
        dv_sel: controls.v_sel - v[15],
        alpha: v[18],
        theta: v[19],
        n1: v[20],
        fuel_flow: v[21],
    };
    FlightRecord {
        t_s,
        state,
        controls,
        context,
        intermediates,
    }
}

/// Write a flight in SI units with the standard column set.
pub fn export_csv(series: &FlightSeries, path: &Path) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_COLUMNS)?;
    for r in &series.records {
        let s = &r.state;
        let c = &r.controls;
        let e0 = &r.context;
        let e = &r.intermediates;
        w.write_record([
            fmt(r.t_s),
            fmt(s.h),
            fmt(s.d),
            fmt(s.gamma),
            fmt(s.v_tas),
            fmt(s.m),
            fmt(c.h_sel),
            fmt(c.v_sel),
            fmt(c.vz_sel),
            (c.flap as u32).to_string(),
            (c.gear as u32).to_string(),
            (c.speed_brake as u32).to_string(),
            fmt(e0.t_oat),
            fmt(e0.wind_par),
            fmt(e0.wind_perp),
            fmt(e.mach),
            fmt(e.v_cas),
            fmt(e.vz),
            fmt(e.v_gs),
            fmt(e.alpha),
            fmt(e.theta),
            fmt(e.n1),
            fmt(e.fuel_flow),
        ])?;
    }
    w.flush().map_err(DataError::Io)?;
    Ok(())
}

/// Shortest round-trip float formatting keeps export -> ingest exact.
fn fmt(x: f64) -> String {
    format!("{x}")
}
