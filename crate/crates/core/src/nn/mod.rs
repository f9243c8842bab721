//! Minimal neural-network engine: dense tensors, a reverse-mode autodiff
//! tape, the structured layer building block and the AdamW optimizer.
//!
//! Everything is 64-bit and single-threaded by design; identical inputs and
//! parameters produce bit-identical outputs.

mod checkpoint;
mod layer;
mod optim;
mod tape;
mod tensor;

pub use checkpoint::{
    spec_hash, LayerCheckpoint, LinearCheckpoint, LinearMoment, OptimizerCheckpoint,
};
pub use layer::{
    forward_slice, structured_forward, structured_forward_tape, BoundLayer, FeatureNorm,
    HeadKind, HeadSpec, LinearParams, StructuredLayerParams, StructuredLayerSpec,
    BACKBONE_DEPTH, HIDDEN_WIDTH,
};
pub use optim::{adamw_step, AdamWConfig, AdamWState};
pub use tape::{Gradients, NnError, NodeId, Tape};
pub use tensor::Tensor2;
