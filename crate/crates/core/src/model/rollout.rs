//! Trajectory-layer kinematics, the explicit Euler solver and model
//! rollouts — a plain path for inference and a batched tape path whose
//! unrolled graph backpropagation differentiates exactly.

use super::loss::{supervised_intermediate_features, supervised_state_features};
use super::{ModelError, NodeFdmModel, FUEL_FLOW_SOFTPLUS_BETA};
use crate::atmosphere::{
    self, AtmosphereError, GAMMA_AIR, R_AIR, SEA_LEVEL_PRESSURE_PA, SEA_LEVEL_TEMPERATURE_K,
};
use crate::data::{
    ContextVector, ControlVector, FeatureId, FlightRecord, IntermediateVector, StateVector,
};
use crate::nn::{forward_slice, structured_forward_tape, BoundLayer, NodeId, Tape, Tensor2};
use std::collections::BTreeMap;
use thiserror::Error;

/// Analytical trajectory-layer outputs e1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryVars {
    pub vz: f64,
    pub mach: f64,
    pub v_cas: f64,
    pub v_gs: f64,
    pub dh_sel: f64,
    pub dv_sel: f64,
}

/// Deterministic kinematic conversions from state, controls and context:
/// V_z = V_TAS·sin γ, M = V_TAS/a, V_GS = V_TAS − V_par, CAS from impact
/// pressure, and the selected-target differences.
pub fn trajectory_layer(
    state: &StateVector,
    controls: &ControlVector,
    context: &ContextVector,
) -> Result<TrajectoryVars, AtmosphereError> {
    let a = atmosphere::speed_of_sound(context.t_oat)?;
    if state.v_tas < 0.0 {
        return Err(AtmosphereError::NegativeAirspeed(state.v_tas));
    }
    if state.v_tas >= a {
        return Err(AtmosphereError::Supersonic {
            tas: state.v_tas,
            a,
        });
    }
    let p = atmosphere::isa_pressure(state.h)?;
    let v_cas = atmosphere::cas_from_tas_raw(state.v_tas, p, a);
    Ok(TrajectoryVars {
        vz: state.v_tas * state.gamma.sin(),
        mach: state.v_tas / a,
        v_cas,
        v_gs: state.v_tas - context.wind_par,
        dh_sel: controls.h_sel - state.h,
        dv_sel: controls.v_sel - v_cas,
    })
}

/// One evaluation of the model's right-hand side.
#[derive(Debug, Clone, Copy)]
pub struct StepEval {
    /// dx/dt = (dh, dd, dγ, dV_TAS, dm).
    pub deriv: [f64; 5],
    pub e1: TrajectoryVars,
    pub alpha: f64,
    pub theta: f64,
    pub n1: f64,
    pub fuel_flow: f64,
}

impl StepEval {
    pub fn intermediates(&self) -> IntermediateVector {
        IntermediateVector {
            mach: self.e1.mach,
            v_cas: self.e1.v_cas,
            vz: self.e1.vz,
            v_gs: self.e1.v_gs,
            dh_sel: self.e1.dh_sel,
            dv_sel: self.e1.dv_sel,
            alpha: self.alpha,
            theta: self.theta,
            n1: self.n1,
            fuel_flow: self.fuel_flow,
        }
    }
}

/// Smooth non-negativity map applied to the fuel-flow head (stable form).
pub(crate) fn softplus_sharp(x: f64) -> f64 {
    x.max(0.0) + (-FUEL_FLOW_SOFTPLUS_BETA * x.abs()).exp().ln_1p() / FUEL_FLOW_SOFTPLUS_BETA
}

/// Evaluate dx/dt at one state: analytical e1, then the angle and engine
/// layers, then the derivative layer, assembled as
/// (V_z, V_GS, dγ, dV_TAS, −fuel_flow).
pub fn step_derivative(
    model: &NodeFdmModel,
    state: &StateVector,
    controls: &ControlVector,
    context: &ContextVector,
) -> Result<StepEval, ModelError> {
    let e1 = trajectory_layer(state, controls, context)?;
    let mut inputs = [0.0f64; 24];
    fill_base_inputs(&mut inputs[..20], state, controls, context, &e1);

    let angle = forward_slice(&model.angle_spec, &model.angle_params, &inputs[..20]);
    let engine = forward_slice(&model.engine_spec, &model.engine_params, &inputs[..20]);
    let (alpha, theta) = (angle[0], angle[1]);
    let n1 = engine[0];
    let fuel_flow = softplus_sharp(engine[1]);

    inputs[20] = alpha;
    inputs[21] = theta;
    inputs[22] = n1;
    inputs[23] = fuel_flow;
    let deriv = forward_slice(&model.derivative_spec, &model.derivative_params, &inputs);
    let (dtas, dgamma) = (deriv[0], deriv[1]);

    let eval = StepEval {
        deriv: [e1.vz, e1.v_gs, dgamma, dtas, -fuel_flow],
        e1,
        alpha,
        theta,
        n1,
        fuel_flow,
    };
    if eval.deriv.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::Nn(crate::nn::NnError::NonFiniteOutput(
            "state derivative".to_string(),
        )));
    }
    Ok(eval)
}

fn fill_base_inputs(
    out: &mut [f64],
    state: &StateVector,
    controls: &ControlVector,
    context: &ContextVector,
    e1: &TrajectoryVars,
) {
    out[0] = state.h;
    out[1] = state.d;
    out[2] = state.gamma;
    out[3] = state.v_tas;
    out[4] = state.m;
    out[5] = controls.h_sel;
    out[6] = controls.v_sel;
    out[7] = controls.vz_sel;
    out[8] = controls.flap as f64;
    out[9] = controls.gear as u8 as f64;
    out[10] = controls.speed_brake as u8 as f64;
    out[11] = context.t_oat;
    out[12] = context.wind_par;
    out[13] = context.wind_perp;
    out[14] = e1.mach;
    out[15] = e1.v_cas;
    out[16] = e1.vz;
    out[17] = e1.v_gs;
    out[18] = e1.dh_sel;
    out[19] = e1.dv_sel;
}

/// Explicit Euler over a derivative field: x_{k+1} = x_k + dt·f(k, x_k).
/// Returns `steps + 1` states including the initial one.
pub fn euler_rollout<E>(
    x0: StateVector,
    steps: usize,
    dt: f64,
    mut field: impl FnMut(usize, &StateVector) -> Result<[f64; 5], E>,
) -> Result<Vec<StateVector>, E> {
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0;
    states.push(x);
    for k in 0..steps {
        let f = field(k, &x)?;
        x = StateVector {
            h: x.h + dt * f[0],
            d: x.d + dt * f[1],
            gamma: x.gamma + dt * f[2],
            v_tas: x.v_tas + dt * f[3],
            m: x.m + dt * f[4],
        };
        states.push(x);
    }
    Ok(states)
}

#[derive(Debug, Error)]
#[error("rollout aborted at step {step}: {reason}")]
pub struct RolloutError {
    pub step: usize,
    pub reason: String,
}

/// Predicted trajectory: states and per-step intermediates, horizon equal
/// to the control/context horizon.
#[derive(Debug, Clone)]
pub struct RolloutOutput {
    pub states: Vec<StateVector>,
    pub intermediates: Vec<IntermediateVector>,
}

impl RolloutOutput {
    /// Assemble a full flight series from a rollout against the recorded
    /// controls and context.
    pub fn into_series(
        self,
        tag: &str,
        controls: &[ControlVector],
        context: &[ContextVector],
        dt: f64,
    ) -> crate::data::FlightSeries {
        let records = self
            .states
            .into_iter()
            .zip(self.intermediates)
            .enumerate()
            .map(|(k, (state, intermediates))| FlightRecord {
                t_s: dt * k as f64,
                state,
                controls: controls[k],
                context: context[k],
                intermediates,
            })
            .collect();
        crate::data::FlightSeries::new(tag, records)
    }
}

/// Roll the model out from `x0` over recorded controls/context (arbitrary
/// horizon). Aborts with the step index on non-finite states or altitude
/// below −100 m.
pub fn rollout(
    model: &NodeFdmModel,
    x0: &StateVector,
    controls: &[ControlVector],
    context: &[ContextVector],
) -> Result<RolloutOutput, RolloutError> {
    assert_eq!(controls.len(), context.len(), "horizon mismatch");
    assert!(!controls.is_empty(), "empty horizon");
    let n = controls.len();
    let mut intermediates: Vec<IntermediateVector> = Vec::with_capacity(n);

    let states = euler_rollout(*x0, n - 1, model.dt_s, |k, x| {
        check_state(k, x)?;
        let eval = step_derivative(model, x, &controls[k], &context[k])
            .map_err(|e| RolloutError { step: k, reason: e.to_string() })?;
        intermediates.push(eval.intermediates());
        Ok(eval.deriv)
    })?;

    // Intermediates at the final state (no further integration).
    let last = n - 1;
    check_state(last, &states[last])?;
    let eval = step_derivative(model, &states[last], &controls[last], &context[last])
        .map_err(|e| RolloutError { step: last, reason: e.to_string() })?;
    intermediates.push(eval.intermediates());

    Ok(RolloutOutput {
        states,
        intermediates,
    })
}

fn check_state(step: usize, x: &StateVector) -> Result<(), RolloutError> {
    if !x.is_finite() {
        return Err(RolloutError {
            step,
            reason: "non-finite state".to_string(),
        });
    }
    if x.h < -100.0 {
        return Err(RolloutError {
            step,
            reason: format!("altitude {:.1} m below -100 m", x.h),
        });
    }
    if x.m <= 0.0 {
        return Err(RolloutError {
            step,
            reason: "non-positive mass".to_string(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Batched tape graph (training path)
// ---------------------------------------------------------------------------

/// A built forward graph over a batch of equal-length windows: total loss,
/// parameter leaves (in model parameter order) and per-feature diagnostics.
pub struct BatchGraph {
    pub tape: Tape,
    pub loss: NodeId,
    pub leaf_ids: Vec<NodeId>,
    /// Unweighted per-feature MSE, for logging.
    pub feature_mse: BTreeMap<String, f64>,
}

impl BatchGraph {
    pub fn loss_value(&self) -> f64 {
        self.tape.value(self.loss).item()
    }
}

struct StateNodes {
    h: NodeId,
    d: NodeId,
    gamma: NodeId,
    v: NodeId,
    m: NodeId,
}

/// Build the unrolled Euler graph over a batch of windows (all the same
/// length ≥ 1). States are supervised from step 1, intermediates from
/// step 0; each feature contributes α·MSE over batch and steps.
pub fn build_batch_graph(
    model: &NodeFdmModel,
    windows: &[&[FlightRecord]],
) -> Result<BatchGraph, ModelError> {
    assert!(!windows.is_empty(), "empty batch");
    let k_len = windows[0].len();
    assert!(k_len >= 1, "empty window");
    assert!(
        windows.iter().all(|w| w.len() == k_len),
        "ragged batch windows"
    );
    let b = windows.len();
    let mut tape = Tape::new();

    let angle_bound = BoundLayer::bind(&mut tape, &model.angle_params);
    let engine_bound = BoundLayer::bind(&mut tape, &model.engine_params);
    let deriv_bound = BoundLayer::bind(&mut tape, &model.derivative_params);
    let mut leaf_ids = angle_bound.leaf_ids();
    leaf_ids.extend(engine_bound.leaf_ids());
    leaf_ids.extend(deriv_bound.leaf_ids());

    let column = |tape: &mut Tape, f: FeatureId, k: usize, windows: &[&[FlightRecord]]| {
        let vals: Vec<f64> = windows.iter().map(|w| f.get(&w[k])).collect();
        tape.constant(Tensor2::column(&vals))
    };

    // Initial state as constants.
    let mut state = StateNodes {
        h: column(&mut tape, FeatureId::Altitude, 0, windows),
        d: column(&mut tape, FeatureId::Distance, 0, windows),
        gamma: column(&mut tape, FeatureId::FlightPathAngle, 0, windows),
        v: column(&mut tape, FeatureId::Tas, 0, windows),
        m: column(&mut tape, FeatureId::Mass, 0, windows),
    };

    // Predicted nodes per supervised feature and step.
    let mut pred_states: BTreeMap<FeatureId, Vec<NodeId>> = BTreeMap::new();
    let mut pred_inter: BTreeMap<FeatureId, Vec<NodeId>> = BTreeMap::new();

    let a0 = (GAMMA_AIR * R_AIR * SEA_LEVEL_TEMPERATURE_K).sqrt();
    for k in 0..k_len {
        // Constants of this step.
        let h_sel = column(&mut tape, FeatureId::SelAltitude, k, windows);
        let v_sel = column(&mut tape, FeatureId::SelSpeed, k, windows);
        let vz_sel = column(&mut tape, FeatureId::SelVerticalSpeed, k, windows);
        let flap = column(&mut tape, FeatureId::Flap, k, windows);
        let gear = column(&mut tape, FeatureId::Gear, k, windows);
        let spdbrk = column(&mut tape, FeatureId::SpeedBrake, k, windows);
        let t_oat = column(&mut tape, FeatureId::Oat, k, windows);
        let wind_par = column(&mut tape, FeatureId::WindPar, k, windows);
        let wind_perp = column(&mut tape, FeatureId::WindPerp, k, windows);
        let a_vals: Vec<f64> = windows
            .iter()
            .map(|w| (GAMMA_AIR * R_AIR * w[k].context.t_oat).sqrt())
            .collect();
        let a_node = tape.constant(Tensor2::column(&a_vals));

        // Trajectory layer on the tape, mirroring the plain op order.
        let sin_g = tape.sin(state.gamma);
        let vz = tape.mul(state.v, sin_g);
        let mach = tape.div(state.v, a_node);
        let p = tape.isa_pressure(state.h);
        let m2 = tape.mul(mach, mach);
        let t1 = tape.affine(m2, 0.2, 1.0);
        let t2 = tape.pow_const(t1, 3.5);
        let t3 = tape.affine(t2, 1.0, -1.0);
        let qc = tape.mul(p, t3);
        let r = tape.affine(qc, 1.0 / SEA_LEVEL_PRESSURE_PA, 1.0);
        let r2 = tape.pow_const(r, 2.0 / 7.0);
        let rm1 = tape.affine(r2, 1.0, -1.0);
        let r5 = tape.scale(rm1, 5.0);
        let rt = tape.sqrt(r5);
        let v_cas = tape.scale(rt, a0);
        let v_gs = tape.sub(state.v, wind_par);
        let dh_sel = tape.sub(h_sel, state.h);
        let dv_sel = tape.sub(v_sel, v_cas);

        let base_inputs = [
            state.h, state.d, state.gamma, state.v, state.m, h_sel, v_sel, vz_sel, flap, gear,
            spdbrk, t_oat, wind_par, wind_perp, mach, v_cas, vz, v_gs, dh_sel, dv_sel,
        ];

        let angle_out =
            structured_forward_tape(&mut tape, &model.angle_spec, &angle_bound, &base_inputs);
        let engine_out =
            structured_forward_tape(&mut tape, &model.engine_spec, &engine_bound, &base_inputs);
        let (alpha, theta) = (angle_out[0], angle_out[1]);
        let n1 = engine_out[0];
        let fuel_flow = tape.softplus_beta(engine_out[1], FUEL_FLOW_SOFTPLUS_BETA);

        let mut deriv_inputs = base_inputs.to_vec();
        deriv_inputs.extend([alpha, theta, n1, fuel_flow]);
        let deriv_out = structured_forward_tape(
            &mut tape,
            &model.derivative_spec,
            &deriv_bound,
            &deriv_inputs,
        );
        let (dtas, dgamma) = (deriv_out[0], deriv_out[1]);

        for (f, node) in [
            (FeatureId::Aoa, alpha),
            (FeatureId::Pitch, theta),
            (FeatureId::N1, n1),
            (FeatureId::FuelFlow, fuel_flow),
        ] {
            pred_inter.entry(f).or_default().push(node);
        }

        if k + 1 < k_len {
            // Euler step: dx·dt added channelwise.
            let dm = tape.scale(fuel_flow, -model.dt_s);
            let dh = tape.scale(vz, model.dt_s);
            let dd = tape.scale(v_gs, model.dt_s);
            let dg = tape.scale(dgamma, model.dt_s);
            let dv = tape.scale(dtas, model.dt_s);
            state = StateNodes {
                h: tape.add(state.h, dh),
                d: tape.add(state.d, dd),
                gamma: tape.add(state.gamma, dg),
                v: tape.add(state.v, dv),
                m: tape.add(state.m, dm),
            };
            for (f, node) in [
                (FeatureId::Altitude, state.h),
                (FeatureId::Distance, state.d),
                (FeatureId::FlightPathAngle, state.gamma),
                (FeatureId::Tas, state.v),
                (FeatureId::Mass, state.m),
            ] {
                pred_states.entry(f).or_default().push(node);
            }
        }
    }

    // Loss terms.
    let mut feature_mse = BTreeMap::new();
    let mut total: Option<NodeId> = None;
    let add_term = |tape: &mut Tape,
                        f: FeatureId,
                        preds: &[NodeId],
                        first_step: usize,
                        total: &mut Option<NodeId>,
                        feature_mse: &mut BTreeMap<String, f64>| {
        if preds.is_empty() {
            return;
        }
        let pred = tape.concat_cols(preds);
        let mut truth = Tensor2::zeros(b, preds.len());
        for (row, w) in windows.iter().enumerate() {
            for (col, record) in w[first_step..first_step + preds.len()].iter().enumerate() {
                truth.set(row, col, f.get(record));
            }
        }
        let truth = tape.constant(truth);
        let diff = tape.sub(pred, truth);
        let sq = tape.mul(diff, diff);
        let mse = tape.mean_all(sq);
        feature_mse.insert(f.name().to_string(), tape.value(mse).item());
        let weighted = tape.scale(mse, model.weights.get(f));
        *total = Some(match *total {
            Some(t) => tape.add(t, weighted),
            None => weighted,
        });
    };

    for f in supervised_state_features(model.loss_config.include_distance) {
        let preds = pred_states.remove(&f).unwrap_or_default();
        add_term(&mut tape, f, &preds, 1, &mut total, &mut feature_mse);
    }
    for f in supervised_intermediate_features() {
        let preds = pred_inter.remove(&f).unwrap_or_default();
        add_term(&mut tape, f, &preds, 0, &mut total, &mut feature_mse);
    }
    let loss = total.expect("at least one supervised feature");

    Ok(BatchGraph {
        tape,
        loss,
        leaf_ids,
        feature_mse,
    })
}
