//! The NODE-FDM model: an analytical trajectory layer plus three learned
//! structured layers (angle, engine, state derivative), integrated with an
//! explicit Euler solver at the 4-second data rate.
//!
//! The state derivative is assembled as
//! dx/dt = (V_z, V_GS, dγ, dV_TAS, −fuel_flow): altitude and distance rates
//! come analytically from the trajectory layer, so the network cannot
//! violate those ties; fuel flow passes through a sharp softplus, so
//! predicted mass never increases.

mod loss;
mod rollout;
mod train;

pub use loss::{composite_loss, LossConfig, LossWeights, WeightConvention};
pub use rollout::{
    euler_rollout, rollout, step_derivative, trajectory_layer, BatchGraph, RolloutError,
    RolloutOutput, StepEval, TrajectoryVars,
};
pub use train::{train, EpochStats, TrainConfig, TrainReport};

use crate::data::{
    compute_norm_stats, DataError, FeatureId, FeatureStat, FlightSeries, NormStats, SAMPLE_DT_S,
};
use crate::nn::{
    spec_hash, FeatureNorm, HeadKind, HeadSpec, LayerCheckpoint, NnError, OptimizerCheckpoint,
    StructuredLayerParams, StructuredLayerSpec, Tensor2,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

/// Sharpness of the fuel-flow non-negativity map (transition width ~0.02 kg/s).
pub const FUEL_FLOW_SOFTPLUS_BETA: f64 = 50.0;

/// Names of the two derivative-layer heads.
pub const DTAS_HEAD: &str = "dtas";
pub const DGAMMA_HEAD: &str = "dgamma";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("atmosphere: {0}")]
    Atmosphere(#[from] crate::atmosphere::AtmosphereError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("training diverged at epoch {epoch} (non-finite loss)")]
    Diverged { epoch: usize },
}

/// Mean/std of the finite-difference derivative targets, used to
/// denormalize the derivative-layer heads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeStats {
    pub dtas: FeatureStat,
    pub dgamma: FeatureStat,
}

/// Population statistics of (V_{k+1}-V_k)/dt and (γ_{k+1}-γ_k)/dt over the
/// training flights.
pub fn compute_derivative_stats(train: &[FlightSeries]) -> Result<DerivativeStats, DataError> {
    let mut dv = Vec::new();
    let mut dg = Vec::new();
    for flight in train {
        for w in flight.records.windows(2) {
            dv.push((w[1].state.v_tas - w[0].state.v_tas) / flight.dt_s);
            dg.push((w[1].state.gamma - w[0].state.gamma) / flight.dt_s);
        }
    }
    if dv.is_empty() {
        return Err(DataError::Empty);
    }
    let stat = |xs: &[f64], name: &str| -> Result<FeatureStat, DataError> {
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
        let std = var.sqrt();
        if !(std > 0.0) {
            return Err(DataError::ZeroVariance(name.to_string()));
        }
        Ok(FeatureStat { mean, std })
    };
    Ok(DerivativeStats {
        dtas: stat(&dv, DTAS_HEAD)?,
        dgamma: stat(&dg, DGAMMA_HEAD)?,
    })
}

/// The assembled model: three structured layers plus normalization stats,
/// loss weighting and the integration step.
#[derive(Debug, Clone)]
pub struct NodeFdmModel {
    pub angle_spec: StructuredLayerSpec,
    pub engine_spec: StructuredLayerSpec,
    pub derivative_spec: StructuredLayerSpec,
    pub angle_params: StructuredLayerParams,
    pub engine_params: StructuredLayerParams,
    pub derivative_params: StructuredLayerParams,
    pub stats: NormStats,
    pub weights: LossWeights,
    pub loss_config: LossConfig,
    pub dt_s: f64,
}

/// Input features of the angle and engine layers: (x, u, e0, e1).
pub fn base_input_features() -> Vec<FeatureId> {
    let mut v = Vec::new();
    v.extend(FeatureId::STATE);
    v.extend(FeatureId::CONTROLS);
    v.extend(FeatureId::CONTEXT);
    v.extend(FeatureId::TRAJECTORY);
    v
}

/// Input features of the derivative layer: (x, u, e0, e1, e2, e3).
pub fn derivative_input_features() -> Vec<FeatureId> {
    let mut v = base_input_features();
    v.extend(FeatureId::ANGLES);
    v.extend(FeatureId::ENGINE);
    v
}

fn feature_norms(stats: &NormStats, features: &[FeatureId]) -> Result<Vec<FeatureNorm>, DataError> {
    features
        .iter()
        .map(|&f| {
            let s = stats.get(f)?;
            Ok(FeatureNorm {
                name: f.name().to_string(),
                mean: s.mean,
                std: s.std,
            })
        })
        .collect()
}

fn continuous_head(name: &str, s: FeatureStat) -> HeadSpec {
    HeadSpec {
        name: name.to_string(),
        dim: 1,
        mean: s.mean,
        std: s.std,
        kind: HeadKind::Continuous,
    }
}

impl NodeFdmModel {
    /// Build a freshly initialized model from training statistics.
    pub fn new(
        stats: &NormStats,
        deriv_stats: &DerivativeStats,
        loss_config: LossConfig,
        seed: u64,
    ) -> Result<Self, ModelError> {
        let base_inputs = feature_norms(stats, &base_input_features())?;
        let angle_spec = StructuredLayerSpec::standard(
            "angle",
            base_inputs.clone(),
            vec![
                continuous_head(FeatureId::Aoa.name(), stats.get(FeatureId::Aoa)?),
                continuous_head(FeatureId::Pitch.name(), stats.get(FeatureId::Pitch)?),
            ],
        );
        let engine_spec = StructuredLayerSpec::standard(
            "engine",
            base_inputs,
            vec![
                continuous_head(FeatureId::N1.name(), stats.get(FeatureId::N1)?),
                continuous_head(FeatureId::FuelFlow.name(), stats.get(FeatureId::FuelFlow)?),
            ],
        );
        let derivative_spec = StructuredLayerSpec::standard(
            "derivative",
            feature_norms(stats, &derivative_input_features())?,
            vec![
                continuous_head(DTAS_HEAD, deriv_stats.dtas),
                continuous_head(DGAMMA_HEAD, deriv_stats.dgamma),
            ],
        );
        let weights = LossWeights::from_stats(stats, &loss_config)?;
        Ok(NodeFdmModel {
            angle_params: StructuredLayerParams::init(&angle_spec, crate::synthetic::mix(seed, 1)),
            engine_params: StructuredLayerParams::init(&engine_spec, crate::synthetic::mix(seed, 2)),
            derivative_params: StructuredLayerParams::init(
                &derivative_spec,
                crate::synthetic::mix(seed, 3),
            ),
            angle_spec,
            engine_spec,
            derivative_spec,
            stats: stats.clone(),
            weights,
            loss_config,
            dt_s: SAMPLE_DT_S,
        })
    }

    /// Convenience constructor computing all statistics from the training
    /// flights.
    pub fn from_training_flights(
        train: &[FlightSeries],
        loss_config: LossConfig,
        seed: u64,
    ) -> Result<Self, ModelError> {
        let stats = compute_norm_stats(train)?;
        let deriv_stats = compute_derivative_stats(train)?;
        NodeFdmModel::new(&stats, &deriv_stats, loss_config, seed)
    }

    pub fn spec_hash(&self) -> String {
        spec_hash(&[&self.angle_spec, &self.engine_spec, &self.derivative_spec])
    }

    /// All learnable tensors in a fixed order (angle, engine, derivative).
    pub fn param_tensors(&self) -> Vec<&Tensor2> {
        let mut out = self.angle_params.tensors();
        out.extend(self.engine_params.tensors());
        out.extend(self.derivative_params.tensors());
        out
    }

    pub fn param_tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut out = self.angle_params.tensors_mut();
        out.extend(self.engine_params.tensors_mut());
        out.extend(self.derivative_params.tensors_mut());
        out
    }

    pub fn param_shapes(&self) -> Vec<(usize, usize)> {
        self.param_tensors().iter().map(|t| t.shape()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.param_tensors().iter().map(|t| t.len()).sum()
    }

    pub fn to_checkpoint(&self, optimizer: Option<&crate::nn::AdamWState>) -> ModelCheckpoint {
        let mut layers = BTreeMap::new();
        layers.insert(
            "angle".to_string(),
            LayerCheckpoint::new(&self.angle_spec, &self.angle_params),
        );
        layers.insert(
            "engine".to_string(),
            LayerCheckpoint::new(&self.engine_spec, &self.engine_params),
        );
        layers.insert(
            "derivative".to_string(),
            LayerCheckpoint::new(&self.derivative_spec, &self.derivative_params),
        );
        ModelCheckpoint {
            version: 1,
            spec_hash: self.spec_hash(),
            dt_s: self.dt_s,
            weight_convention: self.loss_config.convention,
            include_distance_in_loss: self.loss_config.include_distance,
            loss_weights: self.weights.as_map().clone(),
            norm_stats: self.stats.clone(),
            layers,
            optimizer: optimizer.map(OptimizerCheckpoint::from_state),
        }
    }

    pub fn from_checkpoint(ck: &ModelCheckpoint) -> Result<Self, ModelError> {
        let layer = |name: &str| -> Result<&LayerCheckpoint, ModelError> {
            ck.layers
                .get(name)
                .ok_or_else(|| ModelError::Checkpoint(format!("missing layer '{name}'")))
        };
        let (angle_spec, angle_params) = layer("angle")?.restore()?;
        let (engine_spec, engine_params) = layer("engine")?.restore()?;
        let (derivative_spec, derivative_params) = layer("derivative")?.restore()?;
        let hash = spec_hash(&[&angle_spec, &engine_spec, &derivative_spec]);
        if hash != ck.spec_hash {
            return Err(ModelError::Checkpoint(format!(
                "spec hash mismatch: stored {}, rebuilt {}",
                ck.spec_hash, hash
            )));
        }
        let loss_config = LossConfig {
            convention: ck.weight_convention,
            include_distance: ck.include_distance_in_loss,
        };
        Ok(NodeFdmModel {
            angle_spec,
            engine_spec,
            derivative_spec,
            angle_params,
            engine_params,
            derivative_params,
            stats: ck.norm_stats.clone(),
            weights: LossWeights::from_map(ck.loss_weights.clone()),
            loss_config,
            dt_s: ck.dt_s,
        })
    }

    pub fn save(&self, path: &Path, optimizer: Option<&crate::nn::AdamWState>) -> Result<(), ModelError> {
        let ck = self.to_checkpoint(optimizer);
        std::fs::write(path, serde_json::to_string(&ck)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(Self, ModelCheckpoint), ModelError> {
        let ck: ModelCheckpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Ok((NodeFdmModel::from_checkpoint(&ck)?, ck))
    }
}

/// Versioned on-disk model format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub version: u32,
    pub spec_hash: String,
    pub dt_s: f64,
    pub weight_convention: WeightConvention,
    pub include_distance_in_loss: bool,
    pub loss_weights: BTreeMap<String, f64>,
    pub norm_stats: NormStats,
    pub layers: BTreeMap<String, LayerCheckpoint>,
    pub optimizer: Option<OptimizerCheckpoint>,
}
