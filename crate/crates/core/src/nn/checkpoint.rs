//! Serializable parameter blobs: flat arrays plus shape metadata, with a
//! spec hash so mismatched layer layouts are rejected on load.

use super::layer::{LinearParams, StructuredLayerParams, StructuredLayerSpec};
use super::optim::AdamWState;
use super::tape::NnError;
use super::tensor::Tensor2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearCheckpoint {
    pub rows: usize,
    pub cols: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl LinearCheckpoint {
    fn from_params(p: &LinearParams) -> Self {
        LinearCheckpoint {
            rows: p.w.rows(),
            cols: p.w.cols(),
            w: p.w.data().to_vec(),
            b: p.b.data().to_vec(),
        }
    }

    fn to_params(&self) -> Result<LinearParams, NnError> {
        if self.w.len() != self.rows * self.cols || self.b.len() != self.cols {
            return Err(NnError::CheckpointMismatch(format!(
                "linear blob {}x{} has {} weights / {} biases",
                self.rows,
                self.cols,
                self.w.len(),
                self.b.len()
            )));
        }
        Ok(LinearParams {
            w: Tensor2::from_vec(self.rows, self.cols, self.w.clone()),
            b: Tensor2::from_vec(1, self.cols, self.b.clone()),
        })
    }
}

/// One structured layer: its spec (shape + normalization) and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCheckpoint {
    pub spec: StructuredLayerSpec,
    pub backbone: Vec<LinearCheckpoint>,
    pub heads: Vec<LinearCheckpoint>,
}

impl LayerCheckpoint {
    pub fn new(spec: &StructuredLayerSpec, params: &StructuredLayerParams) -> Self {
        LayerCheckpoint {
            spec: spec.clone(),
            backbone: params.backbone.iter().map(LinearCheckpoint::from_params).collect(),
            heads: params.heads.iter().map(LinearCheckpoint::from_params).collect(),
        }
    }

    pub fn restore(&self) -> Result<(StructuredLayerSpec, StructuredLayerParams), NnError> {
        let backbone = self
            .backbone
            .iter()
            .map(LinearCheckpoint::to_params)
            .collect::<Result<Vec<_>, _>>()?;
        let heads = self
            .heads
            .iter()
            .map(LinearCheckpoint::to_params)
            .collect::<Result<Vec<_>, _>>()?;
        Ok((self.spec.clone(), StructuredLayerParams { backbone, heads }))
    }
}

/// Optimizer moments for resuming training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerCheckpoint {
    pub step: u64,
    pub m: Vec<LinearMoment>,
    pub v: Vec<LinearMoment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearMoment {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl OptimizerCheckpoint {
    pub fn from_state(state: &AdamWState) -> Self {
        let pack = |ts: &[Tensor2]| {
            ts.iter()
                .map(|t| LinearMoment {
                    rows: t.rows(),
                    cols: t.cols(),
                    data: t.data().to_vec(),
                })
                .collect()
        };
        OptimizerCheckpoint {
            step: state.step,
            m: pack(&state.m),
            v: pack(&state.v),
        }
    }

    pub fn restore(&self) -> Result<AdamWState, NnError> {
        let unpack = |ms: &[LinearMoment]| -> Result<Vec<Tensor2>, NnError> {
            ms.iter()
                .map(|m| {
                    if m.data.len() != m.rows * m.cols {
                        return Err(NnError::CheckpointMismatch(
                            "optimizer moment shape mismatch".into(),
                        ));
                    }
                    Ok(Tensor2::from_vec(m.rows, m.cols, m.data.clone()))
                })
                .collect()
        };
        Ok(AdamWState {
            step: self.step,
            m: unpack(&self.m)?,
            v: unpack(&self.v)?,
        })
    }
}

/// Stable hash of a set of layer specs (FNV-1a 64 over canonical JSON).
pub fn spec_hash(specs: &[&StructuredLayerSpec]) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for spec in specs {
        let json = serde_json::to_string(spec).expect("spec serializes");
        for byte in json.as_bytes() {
            hash ^= *byte as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    }
    format!("{hash:016x}")
}
