//! Point-mass benchmark pipeline: phase-dependent routine selection over
//! fixed 4-second intervals with state feedback.
//!
//! The same control/dynamics kernel drives the synthetic data generator
//! (which additionally injects disturbances), so a baseline configured with
//! the generator's exact coefficients re-derives its dynamics.

use crate::atmosphere::{self, G0};
use crate::data::{
    ContextVector, ControlVector, FlightRecord, FlightSeries, IntermediateVector, StateVector,
    SAMPLE_DT_S,
};
use crate::performance::PerformanceConfig;
use serde::{Deserialize, Serialize};

/// Trajectory-control routine applied over one 4-second interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoutineKind {
    /// Accelerate/decelerate toward the selected speed.
    AccDec,
    /// Hold altitude (with capture toward the target) at constant speed.
    ConstantSpeedLevel,
    /// Climb or descend at rating thrust holding the selected CAS.
    ConstantSpeedRating,
    /// Track an engaged vertical-speed target at constant CAS.
    ConstantSpeedRocd,
}

/// Capture bands, tracking gains and authority limits of the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlGains {
    /// Altitude capture band [m].
    pub alt_capture_band_m: f64,
    /// Speed tolerance for routine selection [m/s CAS].
    pub speed_band_mps: f64,
    /// Altitude-hold gain [1/s]: vz_cmd = gain * (h_sel - h).
    pub alt_gain_per_s: f64,
    /// Max capture vertical speed in altitude hold [m/s].
    pub capture_vz_max_mps: f64,
    /// Flight-path-angle slew limit [rad/s].
    pub gamma_rate_max_rad_per_s: f64,
    /// Acceleration authority of AccDec [m/s²].
    pub accel_max_mps2: f64,
    /// Small in-routine speed-hold authority [m/s²].
    pub accel_small_mps2: f64,
    /// Speed-hold time constant [s].
    pub tau_speed_s: f64,
    /// AccDec time constant [s].
    pub tau_accdec_s: f64,
    /// Fraction of excess specific force granted to acceleration while
    /// climbing or descending (1.0 when level).
    pub climb_accel_share: f64,
    /// Sine of the steepest allowed flight path angle.
    pub sin_gamma_max: f64,
}

impl Default for ControlGains {
    fn default() -> Self {
        ControlGains {
            alt_capture_band_m: 60.0,
            speed_band_mps: 2.0,
            alt_gain_per_s: 0.10,
            capture_vz_max_mps: 3.0,
            gamma_rate_max_rad_per_s: 0.010,
            accel_max_mps2: 0.8,
            accel_small_mps2: 0.15,
            tau_speed_s: 20.0,
            tau_accdec_s: 8.0,
            climb_accel_share: 0.3,
            sin_gamma_max: 0.14,
        }
    }
}

/// Deterministic disturbance injected by the synthetic generator; the
/// baseline benchmark always runs undisturbed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disturbance {
    /// Relative thrust perturbation.
    pub thrust_frac_bias: f64,
    /// Per-airframe engine efficiency multiplier on fuel flow.
    pub engine_mult: f64,
}

impl Default for Disturbance {
    fn default() -> Self {
        Disturbance {
            thrust_frac_bias: 0.0,
            engine_mult: 1.0,
        }
    }
}

/// Pick the routine for one interval from the current state and targets.
///
/// Speed adjustments win (AccDec), then altitude hold within the capture
/// band, then an engaged vertical-speed target, otherwise rating
/// climb/descent toward the selected altitude.
pub fn select_routine(
    state: &StateVector,
    v_cas: f64,
    controls: &ControlVector,
    gains: &ControlGains,
) -> RoutineKind {
    if (controls.v_sel - v_cas).abs() > gains.speed_band_mps {
        RoutineKind::AccDec
    } else if (controls.h_sel - state.h).abs() <= gains.alt_capture_band_m {
        RoutineKind::ConstantSpeedLevel
    } else if controls.vz_sel != 0.0 {
        RoutineKind::ConstantSpeedRocd
    } else {
        RoutineKind::ConstantSpeedRating
    }
}

/// Result of one kernel step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub next: StateVector,
    pub intermediates: IntermediateVector,
    pub routine: RoutineKind,
    pub thrust_n: f64,
    /// Thrust solve hit a rating bound (envelope flag).
    pub clamped: bool,
}

/// Advance one 4-second interval under the selected routine.
pub fn advance(
    state: &StateVector,
    routine: RoutineKind,
    controls: &ControlVector,
    context: &ContextVector,
    cfg: &PerformanceConfig,
    gains: &ControlGains,
    dt: f64,
) -> StepOutput {
    advance_with_disturbance(
        state,
        routine,
        controls,
        context,
        cfg,
        gains,
        dt,
        Disturbance::default(),
    )
}

/// Kernel step with explicit disturbance (generator path).
#[allow(clippy::too_many_arguments)]
pub fn advance_with_disturbance(
    state: &StateVector,
    routine: RoutineKind,
    controls: &ControlVector,
    context: &ContextVector,
    cfg: &PerformanceConfig,
    gains: &ControlGains,
    dt: f64,
    disturbance: Disturbance,
) -> StepOutput {
    let (h, v, m, gamma) = (state.h, state.v_tas, state.m, state.gamma);
    let p = atmosphere::isa_pressure_raw(h);
    let a = (atmosphere::GAMMA_AIR * atmosphere::R_AIR * context.t_oat).sqrt();
    let rho = atmosphere::air_density(p, context.t_oat);
    let mach = v / a;
    let v_cas = atmosphere::cas_from_tas_raw(v, p, a);
    let v_tgt = atmosphere::tas_from_cas_raw(controls.v_sel, p, a);

    let (drag, cl) =
        cfg.drag_and_cl(m, rho, v, gamma, controls.flap, controls.gear, controls.speed_brake);
    let idle = cfg.idle_thrust(rho);
    let climb_max = cfg.climb_thrust(rho);
    let cruise_max = cfg.cruise_thrust_max(rho);
    let sin_g = gamma.sin();
    let dh_target = controls.h_sel - h;

    // Commanded gamma, thrust and whether a thrust solve was clamped.
    let (thrust, gamma_cmd, clamped) = match routine {
        RoutineKind::ConstantSpeedLevel => {
            let vz_cmd = (gains.alt_gain_per_s * dh_target)
                .clamp(-gains.capture_vz_max_mps, gains.capture_vz_max_mps);
            let gamma_cmd = (vz_cmd / v).clamp(-gains.sin_gamma_max, gains.sin_gamma_max).asin();
            let vdot = ((v_tgt - v) / gains.tau_speed_s)
                .clamp(-gains.accel_small_mps2, gains.accel_small_mps2);
            let want = drag + m * (G0 * sin_g + vdot);
            let thrust = want.clamp(idle, cruise_max);
            (thrust, gamma_cmd, thrust != want)
        }
        RoutineKind::ConstantSpeedRocd => {
            let gamma_cmd = (controls.vz_sel / v)
                .clamp(-gains.sin_gamma_max, gains.sin_gamma_max)
                .asin();
            let vdot = ((v_tgt - v) / gains.tau_speed_s)
                .clamp(-gains.accel_small_mps2, gains.accel_small_mps2);
            let want = drag + m * (G0 * sin_g + vdot);
            let thrust = want.clamp(idle, climb_max);
            (thrust, gamma_cmd, thrust != want)
        }
        RoutineKind::ConstantSpeedRating => {
            let climbing = dh_target > 0.0;
            let thrust = if climbing { climb_max } else { idle };
            let excess = (thrust - drag) / m;
            let vdot = ((v_tgt - v) / gains.tau_speed_s)
                .clamp(-gains.accel_small_mps2, gains.accel_small_mps2);
            let sin_cmd = if climbing {
                ((excess - vdot) / G0).clamp(0.0, gains.sin_gamma_max)
            } else {
                ((excess - vdot) / G0).clamp(-gains.sin_gamma_max, 0.0)
            };
            (thrust, sin_cmd.asin(), false)
        }
        RoutineKind::AccDec => {
            let want_vdot = ((v_tgt - v) / gains.tau_accdec_s)
                .clamp(-gains.accel_max_mps2, gains.accel_max_mps2);
            if dh_target.abs() <= gains.alt_capture_band_m {
                // Level acceleration: full authority, thrust solves balance.
                let vz_cmd = (gains.alt_gain_per_s * dh_target)
                    .clamp(-gains.capture_vz_max_mps, gains.capture_vz_max_mps);
                let gamma_cmd =
                    (vz_cmd / v).clamp(-gains.sin_gamma_max, gains.sin_gamma_max).asin();
                let want = drag + m * (G0 * sin_g + want_vdot);
                let thrust = want.clamp(idle, climb_max);
                (thrust, gamma_cmd, thrust != want)
            } else if dh_target > 0.0 {
                // Accelerating climb: rating thrust, a share of the excess
                // goes to acceleration, the remainder keeps climbing.
                let thrust = climb_max;
                let excess = (thrust - drag) / m;
                let vdot = if want_vdot > 0.0 {
                    want_vdot.min(gains.climb_accel_share * excess.max(0.0))
                } else {
                    want_vdot
                };
                let sin_cmd = ((excess - vdot) / G0).clamp(0.0, gains.sin_gamma_max);
                (thrust, sin_cmd.asin(), false)
            } else {
                // Descent: idle thrust; deceleration shares the deficit.
                let thrust = idle;
                let deficit = (thrust - drag) / m;
                let vdot = if want_vdot < 0.0 {
                    want_vdot.max(gains.climb_accel_share * deficit.min(0.0))
                } else {
                    want_vdot
                };
                let sin_cmd = ((deficit - vdot) / G0).clamp(-gains.sin_gamma_max, 0.0);
                (thrust, sin_cmd.asin(), false)
            }
        }
    };

    let thrust = (thrust * (1.0 + disturbance.thrust_frac_bias))
        .clamp(0.8 * idle, 1.02 * climb_max);
    let fuel_flow = cfg.fuel_flow(thrust, mach, disturbance.engine_mult);
    let n1 = cfg.n1(thrust, rho, h);

    // Euler derivatives at the current state (gamma enters as recorded).
    let dh = v * sin_g;
    let dd = v - context.wind_par;
    let dv = (thrust - drag) / m - G0 * sin_g;
    let dm = -fuel_flow;

    let gamma_step = (gamma_cmd - gamma).clamp(
        -gains.gamma_rate_max_rad_per_s * dt,
        gains.gamma_rate_max_rad_per_s * dt,
    );

    let next = StateVector {
        h: h + dt * dh,
        d: state.d + dt * dd,
        gamma: gamma + gamma_step,
        v_tas: v + dt * dv,
        m: m + dt * dm,
    };
    let intermediates = IntermediateVector {
        mach,
        v_cas,
        vz: dh,
        v_gs: dd,
        dh_sel: dh_target,
        dv_sel: controls.v_sel - v_cas,
        alpha: cfg.alpha(cl, controls.flap),
        theta: cfg.alpha(cl, controls.flap) + gamma,
        n1,
        fuel_flow,
    };
    StepOutput {
        next,
        intermediates,
        routine,
        thrust_n: thrust,
        clamped,
    }
}

/// Propagation failure while simulating a flight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimFailure {
    pub step: usize,
    pub reason: String,
}

#[derive(Debug)]
pub struct SimOutcome {
    pub series: FlightSeries,
    pub failure: Option<SimFailure>,
}

/// Propagate from the first recorded point over the recorded controls and
/// context, feeding each simulated state back into the next interval. The
/// output horizon equals the input horizon unless propagation fails.
pub fn simulate_flight(
    tag: &str,
    p0: &FlightRecord,
    controls: &[ControlVector],
    context: &[ContextVector],
    cfg: &PerformanceConfig,
    gains: &ControlGains,
) -> SimOutcome {
    assert_eq!(controls.len(), context.len(), "controls/context horizon mismatch");
    let n = controls.len();
    let mut records = Vec::with_capacity(n);
    let mut state = p0.state;
    let mut failure = None;

    for k in 0..n {
        if let Some(reason) = invalid_state(&state) {
            failure = Some(SimFailure { step: k, reason });
            break;
        }
        let p = atmosphere::isa_pressure_raw(state.h);
        let a = (atmosphere::GAMMA_AIR * atmosphere::R_AIR * context[k].t_oat).sqrt();
        let v_cas = atmosphere::cas_from_tas_raw(state.v_tas, p, a);
        let routine = select_routine(&state, v_cas, &controls[k], gains);
        let step = advance(&state, routine, &controls[k], &context[k], cfg, gains, SAMPLE_DT_S);
        records.push(FlightRecord {
            t_s: SAMPLE_DT_S * k as f64,
            state,
            controls: controls[k],
            context: context[k],
            intermediates: step.intermediates,
        });
        state = step.next;
    }

    SimOutcome {
        series: FlightSeries::new(tag, records),
        failure,
    }
}

fn invalid_state(s: &StateVector) -> Option<String> {
    if !s.is_finite() {
        return Some("non-finite state".to_string());
    }
    if s.h < -100.0 {
        return Some(format!("altitude {:.1} m below -100 m", s.h));
    }
    if s.v_tas < 20.0 {
        return Some(format!("TAS {:.1} m/s below stall floor", s.v_tas));
    }
    if s.m <= 0.0 {
        return Some("non-positive mass".to_string());
    }
    None
}
