//! Synthetic QAR-like flight generation: a scripted flight-profile
//! controller drives the shared point-mass kernel with seeded disturbances,
//! emitting every data-model channel at 0.25 Hz.

use crate::atmosphere;
use crate::baseline::{advance_with_disturbance, select_routine, ControlGains, Disturbance};
use crate::data::{
    export_csv, ColumnSchema, ContextVector, ControlVector, DataError, FlightEntry, FlightRecord,
    FlightSeries, Manifest, SplitFiles, StateVector, SAMPLE_DT_S, SEQUENCE_LEN,
};
use crate::performance::{PerformanceConfig, PerformanceError};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("infeasible script: {0}")]
    Infeasible(String),
    #[error("flight did not complete within {0} steps")]
    DidNotComplete(usize),
    #[error("generated flight too short ({0} records)")]
    TooShort(usize),
    #[error(transparent)]
    Performance(#[from] PerformanceError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Linear-in-altitude wind profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindProfile {
    pub par_sl_mps: f64,
    pub par_slope_per_m: f64,
    pub perp_sl_mps: f64,
    pub perp_slope_per_m: f64,
}

impl WindProfile {
    pub fn calm() -> Self {
        WindProfile {
            par_sl_mps: 0.0,
            par_slope_per_m: 0.0,
            perp_sl_mps: 0.0,
            perp_slope_per_m: 0.0,
        }
    }

    fn at(&self, h: f64) -> (f64, f64) {
        (
            self.par_sl_mps + self.par_slope_per_m * h,
            self.perp_sl_mps + self.perp_slope_per_m * h,
        )
    }
}

/// Initial part of the descent flown in vertical-speed mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VsDescentSegment {
    /// Engaged vertical-speed target [m/s], negative.
    pub vz_sel_mps: f64,
    /// Mode disengages this far below the initial cruise level [m].
    pub until_below_cruise_m: f64,
}

/// One step climb during cruise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepClimb {
    pub after_cruise_s: f64,
    pub delta_alt_m: f64,
}

/// Scripted profile for one flight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightScript {
    pub takeoff_mass_kg: f64,
    pub initial_alt_m: f64,
    pub final_alt_m: f64,
    pub cruise_alt_m: f64,
    pub climb_cas_mps: f64,
    pub descent_cas_mps: f64,
    pub cruise_mach: f64,
    pub cruise_duration_s: f64,
    pub step_climb: Option<StepClimb>,
    pub vs_descent: Option<VsDescentSegment>,
    pub wind: WindProfile,
    pub delta_isa_k: f64,
    /// Standard deviation of the AR(1) relative thrust disturbance.
    pub thrust_noise_frac: f64,
    pub seed: u64,
}

impl FlightScript {
    /// A plausible mid-weight flight, noise-free and calm by default.
    pub fn nominal() -> Self {
        FlightScript {
            takeoff_mass_kg: 62_000.0,
            initial_alt_m: 500.0,
            final_alt_m: 500.0,
            cruise_alt_m: 10_000.0,
            climb_cas_mps: 150.0,
            descent_cas_mps: 145.0,
            cruise_mach: 0.78,
            cruise_duration_s: 600.0,
            step_climb: None,
            vs_descent: Some(VsDescentSegment {
                vz_sel_mps: -7.5,
                until_below_cruise_m: 1_200.0,
            }),
            wind: WindProfile::calm(),
            delta_isa_k: 0.0,
            thrust_noise_frac: 0.0,
            seed: 0,
        }
    }
}

/// Ground-truth phase tag, by instantaneous vertical intent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthPhase {
    Climb,
    Level,
    Descent,
}

/// Per-airframe identity used when building datasets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AirframeInfo {
    pub tag: String,
    pub split: String,
    /// Coherent coefficient perturbation of this airframe's true dynamics.
    pub variant_frac: f64,
    /// Engine efficiency multiplier on fuel flow (fleet-ageing spread).
    pub engine_mult: f64,
}

const MAX_STEPS: usize = 4_000;
/// Required residual climb capability at the cruise level [m/s].
const CEILING_MARGIN_MPS: f64 = 0.5;

/// Generate one flight; see [`generate_flight_detailed`].
pub fn generate_flight(
    cfg: &PerformanceConfig,
    script: &FlightScript,
    gains: &ControlGains,
) -> Result<FlightSeries, GenError> {
    Ok(generate_flight_detailed(cfg, script, gains, "SYN-0000", 1.0)?.0)
}

/// Generate one flight plus ground-truth phase tags.
///
/// The scripted controller emits the autopilot targets and configuration
/// schedule; the shared point-mass kernel integrates the dynamics with a
/// seeded AR(1) thrust disturbance and the airframe's engine multiplier.
pub fn generate_flight_detailed(
    cfg: &PerformanceConfig,
    script: &FlightScript,
    gains: &ControlGains,
    tag: &str,
    engine_mult: f64,
) -> Result<(FlightSeries, Vec<TruthPhase>), GenError> {
    check_feasibility(cfg, script)?;
    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let ar = 0.85_f64;
    let ar_scale = script.thrust_noise_frac * (1.0 - ar * ar).sqrt();
    let mut thrust_bias = 0.0_f64;

    let mut state = initial_state(script)?;
    let mut phase = Phase::Climb;
    let mut cruise_level = script.cruise_alt_m;
    let mut cruise_elapsed = 0.0_f64;
    let mut step_done = false;
    let mut speed_brake = false;

    let mut records = Vec::new();
    let mut tags = Vec::new();

    for k in 0..MAX_STEPS {
        let t_oat = isa_offset_temperature(state.h, script.delta_isa_k);
        let (wind_par, wind_perp) = script.wind.at(state.h);
        let context = ContextVector {
            t_oat,
            wind_par,
            wind_perp,
        };
        let p = atmosphere::isa_pressure_raw(state.h);
        let a = (atmosphere::GAMMA_AIR * atmosphere::R_AIR * t_oat).sqrt();
        let v_cas = atmosphere::cas_from_tas_raw(state.v_tas, p, a);

        // Phase transitions.
        match phase {
            Phase::Climb => {
                if (cruise_level - state.h).abs() <= gains.alt_capture_band_m {
                    phase = Phase::Cruise;
                }
            }
            Phase::Cruise => {
                cruise_elapsed += SAMPLE_DT_S;
                if let (false, Some(sc)) = (step_done, script.step_climb) {
                    if cruise_elapsed >= sc.after_cruise_s {
                        cruise_level += sc.delta_alt_m;
                        step_done = true;
                    }
                }
                if cruise_elapsed >= script.cruise_duration_s {
                    phase = Phase::Descent;
                }
            }
            Phase::Descent => {}
        }

        // Autopilot targets from the script.
        let h_sel = match phase {
            Phase::Climb | Phase::Cruise => cruise_level,
            Phase::Descent => script.final_alt_m,
        };
        let mach_cas = cas_of_mach_raw(script.cruise_mach, p, a);
        let v_sel = match phase {
            Phase::Climb | Phase::Cruise => script.climb_cas_mps.min(mach_cas),
            Phase::Descent => approach_speed_target(script, state.h).min(mach_cas),
        };
        let vz_sel = match (phase, script.vs_descent) {
            (Phase::Descent, Some(seg))
                if state.h > script.cruise_alt_m - seg.until_below_cruise_m =>
            {
                seg.vz_sel_mps
            }
            _ => 0.0,
        };

        // Configuration schedule keyed on CAS and altitude.
        let flap = flap_schedule(state.h, v_cas);
        let gear = matches!(phase, Phase::Descent) && state.h < 850.0;
        if matches!(phase, Phase::Descent) && v_cas > v_sel + 6.0 {
            speed_brake = true;
        } else if v_cas < v_sel + 2.0 {
            speed_brake = false;
        }

        let controls = ControlVector {
            h_sel,
            v_sel,
            vz_sel,
            flap,
            gear,
            speed_brake,
        };

        let routine = select_routine(&state, v_cas, &controls, gains);
        let disturbance = Disturbance {
            thrust_frac_bias: thrust_bias,
            engine_mult,
        };
        let step = advance_with_disturbance(
            &state,
            routine,
            &controls,
            &context,
            cfg,
            gains,
            SAMPLE_DT_S,
            disturbance,
        );

        records.push(FlightRecord {
            t_s: SAMPLE_DT_S * k as f64,
            state,
            controls,
            context,
            intermediates: step.intermediates,
        });
        tags.push(if (h_sel - state.h).abs() <= gains.alt_capture_band_m {
            TruthPhase::Level
        } else if h_sel > state.h {
            TruthPhase::Climb
        } else {
            TruthPhase::Descent
        });

        state = step.next;
        let noise: f64 = StandardNormal.sample(&mut rng);
        thrust_bias = ar * thrust_bias + ar_scale * noise;

        if matches!(phase, Phase::Descent) && state.h <= script.final_alt_m {
            let series = FlightSeries::new(tag, records);
            if series.len() < SEQUENCE_LEN {
                return Err(GenError::TooShort(series.len()));
            }
            return Ok((series, tags));
        }
    }
    Err(GenError::DidNotComplete(MAX_STEPS))
}

#[derive(Clone, Copy)]
enum Phase {
    Climb,
    Cruise,
    Descent,
}

fn initial_state(script: &FlightScript) -> Result<StateVector, GenError> {
    let t_oat = isa_offset_temperature(script.initial_alt_m, script.delta_isa_k);
    let p = atmosphere::isa_pressure_raw(script.initial_alt_m);
    let a = (atmosphere::GAMMA_AIR * atmosphere::R_AIR * t_oat).sqrt();
    let v = atmosphere::tas_from_cas_raw(script.climb_cas_mps, p, a);
    if !v.is_finite() || v <= 0.0 {
        return Err(GenError::Infeasible("initial speed target".to_string()));
    }
    Ok(StateVector {
        h: script.initial_alt_m,
        d: 0.0,
        gamma: 0.0,
        v_tas: v,
        m: script.takeoff_mass_kg,
    })
}

fn check_feasibility(cfg: &PerformanceConfig, script: &FlightScript) -> Result<(), GenError> {
    cfg.validate()?;
    let env = &cfg.envelope;
    if script.climb_cas_mps < env.cas_min_mps || script.climb_cas_mps > env.cas_max_mps {
        return Err(GenError::Infeasible(format!(
            "climb CAS {} outside envelope [{}, {}]",
            script.climb_cas_mps, env.cas_min_mps, env.cas_max_mps
        )));
    }
    if script.descent_cas_mps < env.cas_min_mps || script.descent_cas_mps > env.cas_max_mps {
        return Err(GenError::Infeasible("descent CAS outside envelope".to_string()));
    }
    if script.cruise_mach > env.mach_max {
        return Err(GenError::Infeasible(format!(
            "cruise Mach {} above envelope max {}",
            script.cruise_mach, env.mach_max
        )));
    }
    let top = script.cruise_alt_m
        + script.step_climb.map(|s| s.delta_alt_m).unwrap_or(0.0);
    let t_oat = isa_offset_temperature(top, script.delta_isa_k);
    let a = (atmosphere::GAMMA_AIR * atmosphere::R_AIR * t_oat).sqrt();
    let v_cruise = script.cruise_mach * a;
    let margin =
        cfg.residual_climb_rate(top, 0.97 * script.takeoff_mass_kg, v_cruise, t_oat);
    if margin < CEILING_MARGIN_MPS {
        return Err(GenError::Infeasible(format!(
            "cruise level {top:.0} m above ceiling (residual climb {margin:.2} m/s)"
        )));
    }
    Ok(())
}

fn isa_offset_temperature(h: f64, delta_isa: f64) -> f64 {
    atmosphere::isa_temperature_raw(h) + delta_isa
}

fn cas_of_mach_raw(mach: f64, p: f64, a: f64) -> f64 {
    atmosphere::cas_from_tas_raw(mach * a, p, a)
}

/// Descent/approach CAS target by altitude band.
fn approach_speed_target(script: &FlightScript, h: f64) -> f64 {
    if h > 3_000.0 {
        script.descent_cas_mps
    } else if h > 1_500.0 {
        script.descent_cas_mps.min(92.0)
    } else {
        script.descent_cas_mps.min(72.0)
    }
}

/// Flap setting from CAS with a hard retraction ceiling.
fn flap_schedule(h: f64, v_cas: f64) -> u8 {
    if h > 3_500.0 || v_cas >= 98.0 {
        0
    } else if v_cas >= 90.0 {
        1
    } else if v_cas >= 82.0 {
        2
    } else if v_cas >= 74.0 {
        3
    } else {
        4
    }
}

/// Dataset generation options (desk-scale defaults).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetOptions {
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub seed: u64,
    pub cruise_duration_range_s: (f64, f64),
    pub thrust_noise_frac: f64,
    /// Coefficient spread of the two airframe performance variants.
    pub variant_spread: f64,
    /// Engine-efficiency multiplier range across airframes.
    pub engine_mult_range: (f64, f64),
}

impl Default for DatasetOptions {
    fn default() -> Self {
        DatasetOptions {
            train: 50,
            val: 10,
            test: 10,
            seed: 7,
            cruise_duration_range_s: (360.0, 840.0),
            thrust_noise_frac: 0.01,
            variant_spread: 0.03,
            engine_mult_range: (1.0, 1.05),
        }
    }
}

#[derive(Debug)]
pub struct GeneratedDataset {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    pub airframes: Vec<AirframeInfo>,
}

/// Generate a full dataset on disk: schema, flight CSVs, manifest, the
/// nominal performance config and the airframe truth table. Deterministic
/// for a fixed seed.
pub fn generate_dataset(
    out_dir: &Path,
    cfg: &PerformanceConfig,
    gains: &ControlGains,
    opts: &DatasetOptions,
) -> Result<GeneratedDataset, GenError> {
    if opts.train == 0 {
        return Err(GenError::Infeasible("empty training split".to_string()));
    }
    std::fs::create_dir_all(out_dir).map_err(DataError::Io)?;
    let schema = ColumnSchema::si();
    schema.save(&out_dir.join("schema.json"))?;
    cfg.save(&out_dir.join("nominal_performance.json"))?;

    // Airframes per split, mirroring the 5/2/2 fleet structure where counts
    // allow. Variants alternate +/- spread; engine multipliers are sampled
    // per airframe from the configured range.
    let plan = [
        ("train", opts.train, 5.min(opts.train.max(1))),
        ("val", opts.val, 2.min(opts.val.max(1))),
        ("test", opts.test, 2.min(opts.test.max(1))),
    ];
    let mut airframes = Vec::new();
    let mut airframe_index = 0usize;
    for (split, flights, n_airframes) in plan {
        for _ in 0..if flights == 0 { 0 } else { n_airframes } {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(opts.seed, 1_000 + airframe_index as u64));
            let variant = if airframe_index % 2 == 0 {
                opts.variant_spread
            } else {
                -opts.variant_spread
            };
            let (lo, hi) = opts.engine_mult_range;
            let engine_mult = lo + (hi - lo) * rng.random::<f64>();
            airframes.push(AirframeInfo {
                tag: format!("AF{:02}", airframe_index + 1),
                split: split.to_string(),
                variant_frac: variant,
                engine_mult,
            });
            airframe_index += 1;
        }
    }

    let mut splits = SplitFiles::default();
    let mut global_index = 0usize;
    for (split, flights, _) in plan {
        let split_airframes: Vec<&AirframeInfo> =
            airframes.iter().filter(|a| a.split == split).collect();
        for i in 0..flights {
            let airframe = split_airframes[i % split_airframes.len()];
            let tag = format!("{}-{:04}", airframe.tag, i);
            let script = random_script(cfg, opts, mix(opts.seed, global_index as u64));
            let true_cfg = cfg.perturbed(airframe.variant_frac);
            let script = feasible_script(&true_cfg, script);
            let (series, _) =
                generate_flight_detailed(&true_cfg, &script, gains, &tag, airframe.engine_mult)?;
            let file = format!("{tag}.csv");
            export_csv(&series, &out_dir.join(&file))?;
            let entry = FlightEntry { tag, file };
            match split {
                "train" => splits.train.push(entry),
                "val" => splits.val.push(entry),
                _ => splits.test.push(entry),
            }
            global_index += 1;
        }
    }

    let manifest = Manifest::new("schema.json", splits);
    manifest.validate()?;
    let manifest_path = out_dir.join("manifest.json");
    manifest.save(&manifest_path)?;
    std::fs::write(
        out_dir.join("airframes.json"),
        serde_json::to_string_pretty(&airframes).map_err(DataError::Json)? + "\n",
    )
    .map_err(DataError::Io)?;

    Ok(GeneratedDataset {
        manifest,
        manifest_path,
        airframes,
    })
}

/// Lower the cruise level until the script clears the ceiling check.
fn feasible_script(cfg: &PerformanceConfig, mut script: FlightScript) -> FlightScript {
    while check_feasibility(cfg, &script).is_err() && script.cruise_alt_m > 6_000.0 {
        script.cruise_alt_m -= 300.0;
    }
    script
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn random_script(cfg: &PerformanceConfig, opts: &DatasetOptions, seed: u64) -> FlightScript {
    let rng = &mut ChaCha8Rng::seed_from_u64(seed);
    let takeoff_mass_kg = uniform(rng, 0.84 * cfg.reference_mass_kg, 1.12 * cfg.reference_mass_kg);
    let cruise_alt_m = uniform(rng, 8_200.0, 11_000.0);
    let climb_cas_mps = uniform(rng, 138.0, 160.0);
    let descent_cas_mps = uniform(rng, 128.0, 155.0);
    let cruise_mach = uniform(rng, 0.73, 0.795);
    let (dlo, dhi) = opts.cruise_duration_range_s;
    let cruise_duration_s = uniform(rng, dlo, dhi);
    let step_climb = if rng.random::<f64>() < 0.25 {
        Some(StepClimb {
            after_cruise_s: uniform(rng, 0.3, 0.5) * cruise_duration_s,
            delta_alt_m: 300.0,
        })
    } else {
        None
    };
    let vs_descent = if rng.random::<f64>() < 0.8 {
        Some(VsDescentSegment {
            vz_sel_mps: -uniform(rng, 6.0, 9.5),
            until_below_cruise_m: uniform(rng, 900.0, 1_600.0),
        })
    } else {
        None
    };
    let wind = WindProfile {
        par_sl_mps: uniform(rng, -8.0, 8.0),
        par_slope_per_m: uniform(rng, -6e-4, 6e-4),
        perp_sl_mps: uniform(rng, -8.0, 8.0),
        perp_slope_per_m: uniform(rng, -6e-4, 6e-4),
    };
    FlightScript {
        takeoff_mass_kg,
        initial_alt_m: 500.0,
        final_alt_m: 500.0,
        cruise_alt_m,
        climb_cas_mps,
        descent_cas_mps,
        cruise_mach,
        cruise_duration_s,
        step_climb,
        vs_descent,
        wind,
        delta_isa_k: uniform(rng, -8.0, 8.0),
        thrust_noise_frac: opts.thrust_noise_frac,
        seed: mix(seed, 0xF1EE),
    }
}

/// SplitMix64-style stable seed derivation.
pub fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E3779B97F4A7C15))
        .wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
