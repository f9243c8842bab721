//! The structured layer: input normalizer -> shared ReLU backbone ->
//! per-task heads -> denormalizer.

use super::tape::{NnError, NodeId, Tape};
use super::tensor::Tensor2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Backbone width used by all model layers.
pub const HIDDEN_WIDTH: usize = 24;
/// Backbone depth used by all model layers.
pub const BACKBONE_DEPTH: usize = 2;

/// One input feature with the normalization slice that z-scores it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureNorm {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    /// Denormalized back to physical scale.
    Continuous,
    /// Raw logits; no denormalization.
    Binary,
}

/// One output head (a single-layer perceptron on the backbone features).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub name: String,
    pub dim: usize,
    /// Output normalization slice (ignored for binary heads).
    pub mean: f64,
    pub std: f64,
    pub kind: HeadKind,
}

/// Shape and normalization contract of a structured layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredLayerSpec {
    pub name: String,
    pub inputs: Vec<FeatureNorm>,
    pub hidden_width: usize,
    pub depth: usize,
    pub heads: Vec<HeadSpec>,
}

impl StructuredLayerSpec {
    /// The standard block: 2 x 24 ReLU backbone.
    pub fn standard(name: impl Into<String>, inputs: Vec<FeatureNorm>, heads: Vec<HeadSpec>) -> Self {
        StructuredLayerSpec {
            name: name.into(),
            inputs,
            hidden_width: HIDDEN_WIDTH,
            depth: BACKBONE_DEPTH,
            heads,
        }
    }

    /// Sizes of the backbone linears: (in, hidden), (hidden, hidden), ...
    fn backbone_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.depth);
        let mut prev = self.inputs.len();
        for _ in 0..self.depth {
            dims.push((prev, self.hidden_width));
            prev = self.hidden_width;
        }
        dims
    }
}

/// Weights and bias of one linear map, w: [in, out], b: [1, out].
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub w: Tensor2,
    pub b: Tensor2,
}

impl LinearParams {
    fn zeros(input: usize, output: usize) -> Self {
        LinearParams {
            w: Tensor2::zeros(input, output),
            b: Tensor2::zeros(1, output),
        }
    }
}

/// Learnable parameters of a structured layer.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredLayerParams {
    pub backbone: Vec<LinearParams>,
    pub heads: Vec<LinearParams>,
}

impl StructuredLayerParams {
    /// Kaiming-uniform fan-in initialization (bound sqrt(6/fan_in)) with
    /// zero biases; deterministic per seed.
    pub fn init(spec: &StructuredLayerSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init_linear = |input: usize, output: usize| {
            let bound = (6.0 / input as f64).sqrt();
            let mut lin = LinearParams::zeros(input, output);
            for v in lin.w.data_mut() {
                *v = (2.0 * rng.random::<f64>() - 1.0) * bound;
            }
            lin
        };
        let backbone = spec
            .backbone_dims()
            .into_iter()
            .map(|(i, o)| init_linear(i, o))
            .collect();
        let heads = spec
            .heads
            .iter()
            .map(|h| init_linear(spec.hidden_width, h.dim))
            .collect();
        StructuredLayerParams { backbone, heads }
    }

    /// All parameter tensors in a fixed order (backbone w/b pairs, then
    /// head w/b pairs). The optimizer and gradient extraction rely on this
    /// ordering being stable.
    pub fn tensors(&self) -> Vec<&Tensor2> {
        let mut out = Vec::new();
        for l in self.backbone.iter().chain(&self.heads) {
            out.push(&l.w);
            out.push(&l.b);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut out = Vec::new();
        for l in self.backbone.iter_mut().chain(self.heads.iter_mut()) {
            out.push(&mut l.w);
            out.push(&mut l.b);
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

/// Plain (no-tape) forward pass with named inputs. Inputs are z-scored,
/// concatenated in spec order, passed through the backbone, and each head
/// output is denormalized back to physical scale.
pub fn structured_forward(
    spec: &StructuredLayerSpec,
    params: &StructuredLayerParams,
    inputs: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, f64>, NnError> {
    let mut x = Vec::with_capacity(spec.inputs.len());
    for f in &spec.inputs {
        let v = *inputs
            .get(&f.name)
            .ok_or_else(|| NnError::MissingFeature(f.name.clone()))?;
        if !v.is_finite() {
            return Err(NnError::NonFiniteInput(f.name.clone()));
        }
        x.push((v - f.mean) * (1.0 / f.std));
    }
    let outputs = forward_normalized(spec, params, &x);
    Ok(spec
        .heads
        .iter()
        .zip(outputs)
        .map(|(h, v)| (h.name.clone(), v))
        .collect())
}

/// Plain forward with inputs as a slice in spec order (hot path). Inputs
/// are raw physical values; returns one value per head (dim-1 heads).
pub fn forward_slice(
    spec: &StructuredLayerSpec,
    params: &StructuredLayerParams,
    inputs: &[f64],
) -> Vec<f64> {
    assert_eq!(inputs.len(), spec.inputs.len(), "input arity mismatch");
    let x: Vec<f64> = spec
        .inputs
        .iter()
        .zip(inputs)
        .map(|(f, &v)| (v - f.mean) * (1.0 / f.std))
        .collect();
    forward_normalized(spec, params, &x)
}

fn forward_normalized(
    spec: &StructuredLayerSpec,
    params: &StructuredLayerParams,
    x: &[f64],
) -> Vec<f64> {
    let mut h = x.to_vec();
    for lin in &params.backbone {
        h = linear_relu(&h, lin);
    }
    params
        .heads
        .iter()
        .zip(&spec.heads)
        .map(|(lin, head)| {
            debug_assert_eq!(head.dim, 1, "slice forward supports dim-1 heads");
            // Products first, bias last: same accumulation order as the
            // tape's matmul + add_row.
            let mut acc = 0.0;
            for (i, &v) in h.iter().enumerate() {
                acc += v * lin.w.get(i, 0);
            }
            acc += lin.b.get(0, 0);
            match head.kind {
                HeadKind::Continuous => acc * head.std + head.mean,
                HeadKind::Binary => acc,
            }
        })
        .collect()
}

fn linear_relu(x: &[f64], lin: &LinearParams) -> Vec<f64> {
    let (input, output) = lin.w.shape();
    debug_assert_eq!(x.len(), input);
    let mut out = vec![0.0; output];
    for (o, outv) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (i, &v) in x.iter().enumerate() {
            acc += v * lin.w.get(i, o);
        }
        acc += lin.b.get(0, o);
        *outv = if acc > 0.0 { acc } else { 0.0 };
    }
    out
}

/// A structured layer's parameters bound onto a tape as leaves, so that
/// gradients flow to them. Node order matches [`StructuredLayerParams::tensors`].
pub struct BoundLayer {
    pub backbone: Vec<(NodeId, NodeId)>,
    pub heads: Vec<(NodeId, NodeId)>,
}

impl BoundLayer {
    pub fn bind(tape: &mut Tape, params: &StructuredLayerParams) -> Self {
        let mut bind_lin = |l: &LinearParams| (tape.leaf(l.w.clone()), tape.leaf(l.b.clone()));
        BoundLayer {
            backbone: params.backbone.iter().map(&mut bind_lin).collect(),
            heads: params.heads.iter().map(&mut bind_lin).collect(),
        }
    }

    /// Leaf node ids in the same fixed order as the parameter tensors.
    pub fn leaf_ids(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        for (w, b) in self.backbone.iter().chain(&self.heads) {
            out.push(*w);
            out.push(*b);
        }
        out
    }
}

/// Batched tape forward: `inputs` holds one [B,1] node per spec input, in
/// spec order. Returns one [B,1] node per head.
pub fn structured_forward_tape(
    tape: &mut Tape,
    spec: &StructuredLayerSpec,
    bound: &BoundLayer,
    inputs: &[NodeId],
) -> Vec<NodeId> {
    assert_eq!(inputs.len(), spec.inputs.len(), "input arity mismatch");
    // Centering and scaling mirror the plain path's operation order exactly.
    let normalized: Vec<NodeId> = spec
        .inputs
        .iter()
        .zip(inputs)
        .map(|(f, &id)| {
            let centered = tape.affine(id, 1.0, -f.mean);
            tape.scale(centered, 1.0 / f.std)
        })
        .collect();
    let mut h = tape.concat_cols(&normalized);
    for (w, b) in &bound.backbone {
        let mm = tape.matmul(h, *w);
        let biased = tape.add_row(mm, *b);
        h = tape.relu(biased);
    }
    spec.heads
        .iter()
        .zip(&bound.heads)
        .map(|(head, (w, b))| {
            let mm = tape.matmul(h, *w);
            let raw = tape.add_row(mm, *b);
            match head.kind {
                HeadKind::Continuous => tape.affine(raw, head.std, head.mean),
                HeadKind::Binary => raw,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn feature(name: &str, mean: f64, std: f64) -> FeatureNorm {
        FeatureNorm {
            name: name.into(),
            mean,
            std,
        }
    }

    fn head(name: &str, mean: f64, std: f64, kind: HeadKind) -> HeadSpec {
        HeadSpec {
            name: name.into(),
            dim: 1,
            mean,
            std,
            kind,
        }
    }

    fn small_spec() -> StructuredLayerSpec {
        StructuredLayerSpec {
            name: "test".into(),
            inputs: vec![feature("a", 2.0, 4.0), feature("b", -1.0, 0.5)],
            hidden_width: 3,
            depth: 2,
            heads: vec![
                head("y", 10.0, 2.0, HeadKind::Continuous),
                head("z", 0.0, 1.0, HeadKind::Binary),
            ],
        }
    }

    #[test]
    fn zero_params_return_head_means() {
        let spec = small_spec();
        let mut params = StructuredLayerParams::init(&spec, 1);
        for t in params.tensors_mut() {
            for v in t.data_mut() {
                *v = 0.0;
            }
        }
        let inputs: BTreeMap<String, f64> = [("a".to_string(), 7.0), ("b".to_string(), 0.3)]
            .into_iter()
            .collect();
        let out = structured_forward(&spec, &params, &inputs).unwrap();
        assert_eq!(out["y"], 10.0); // denormalized zero = mean
        assert_eq!(out["z"], 0.0); // binary head: raw logit
    }

    #[test]
    fn mean_inputs_normalize_to_zero() {
        // Identity backbone (positive path) and a head reading one feature:
        // feeding the feature means must produce the head's own mean.
        let spec = StructuredLayerSpec {
            name: "t".into(),
            inputs: vec![feature("a", 2.0, 4.0), feature("b", -1.0, 0.5)],
            hidden_width: 2,
            depth: 2,
            heads: vec![head("y", 5.0, 3.0, HeadKind::Continuous)],
        };
        let mut params = StructuredLayerParams::init(&spec, 1);
        for lin in &mut params.backbone {
            for v in lin.w.data_mut() {
                *v = 0.0;
            }
            lin.w.set(0, 0, 1.0);
            lin.w.set(1, 1, 1.0);
            for v in lin.b.data_mut() {
                *v = 0.0;
            }
        }
        params.heads[0].w.set(0, 0, 1.0);
        params.heads[0].w.set(1, 0, 1.0);
        params.heads[0].b.set(0, 0, 0.0);
        let out = forward_slice(&spec, &params, &[2.0, -1.0]);
        assert_eq!(out[0], 5.0);
        // And a non-mean input moves the output by std-scaled normalized input.
        let out = forward_slice(&spec, &params, &[6.0, -1.0]); // a normalizes to 1.0
        assert_eq!(out[0], 5.0 + 3.0);
    }

    #[test]
    fn micro_net_matches_hand_composition() {
        // 1 input, width-1 backbone, identity weights: the full chain is
        // y = ((x - mu)/sigma passed through two ReLUs) * std_o + mean_o.
        let spec = StructuredLayerSpec {
            name: "micro".into(),
            inputs: vec![feature("x", 1.0, 2.0)],
            hidden_width: 1,
            depth: 2,
            heads: vec![head("y", -3.0, 0.5, HeadKind::Continuous)],
        };
        let mut params = StructuredLayerParams::init(&spec, 0);
        for lin in params.backbone.iter_mut().chain(params.heads.iter_mut()) {
            lin.w.set(0, 0, 1.0);
            lin.b.set(0, 0, 0.0);
        }
        // x = 5 -> normalized 2 -> relu(2) -> relu(2) -> head 2 -> 2*0.5 - 3 = -2.
        assert_eq!(forward_slice(&spec, &params, &[5.0]), vec![-2.0]);
        // x = -5 -> normalized -3 -> relu -> 0 -> head 0 -> -3.
        assert_eq!(forward_slice(&spec, &params, &[-5.0]), vec![-3.0]);
    }

    #[test]
    fn missing_and_non_finite_inputs_error() {
        let spec = small_spec();
        let params = StructuredLayerParams::init(&spec, 1);
        let missing: BTreeMap<String, f64> = [("a".to_string(), 1.0)].into_iter().collect();
        assert!(matches!(
            structured_forward(&spec, &params, &missing),
            Err(NnError::MissingFeature(f)) if f == "b"
        ));
        let nan: BTreeMap<String, f64> =
            [("a".to_string(), 1.0), ("b".to_string(), f64::NAN)]
                .into_iter()
                .collect();
        assert!(matches!(
            structured_forward(&spec, &params, &nan),
            Err(NnError::NonFiniteInput(f)) if f == "b"
        ));
    }

    #[test]
    fn tape_forward_matches_plain_forward() {
        let spec = small_spec();
        let params = StructuredLayerParams::init(&spec, 42);
        let raw_inputs = [1.7, -0.4];
        let plain = forward_slice(&spec, &params, &raw_inputs);

        let mut tape = Tape::new();
        let bound = BoundLayer::bind(&mut tape, &params);
        let nodes: Vec<NodeId> = raw_inputs
            .iter()
            .map(|&v| tape.constant(Tensor2::scalar(v)))
            .collect();
        let outs = structured_forward_tape(&mut tape, &spec, &bound, &nodes);
        for (o, p) in outs.iter().zip(&plain) {
            assert_relative_eq!(tape.value(*o).item(), *p, max_relative = 1e-15);
        }
    }

    #[test]
    fn layer_gradients_match_finite_differences() {
        let spec = small_spec();
        let params = StructuredLayerParams::init(&spec, 7);
        let inputs = [0.9, -1.3];

        // Loss: mean of squared head outputs (continuous heads only to keep
        // scales finite).
        let loss_of = |params: &StructuredLayerParams| -> f64 {
            let out = forward_slice(&spec, params, &inputs);
            out.iter().map(|v| v * v).sum::<f64>() / out.len() as f64
        };

        // Analytic gradients via the tape.
        let mut tape = Tape::new();
        let bound = BoundLayer::bind(&mut tape, &params);
        let nodes: Vec<NodeId> = inputs
            .iter()
            .map(|&v| tape.constant(Tensor2::scalar(v)))
            .collect();
        let outs = structured_forward_tape(&mut tape, &spec, &bound, &nodes);
        let sq: Vec<NodeId> = outs.iter().map(|&o| tape.mul(o, o)).collect();
        let cat = tape.concat_cols(&sq);
        let loss = tape.mean_all(cat);
        let grads = tape.backward(loss).unwrap();

        let leaf_ids = bound.leaf_ids();
        let tensors = params.tensors();
        for (param_idx, (id, tensor)) in leaf_ids.iter().zip(&tensors).enumerate() {
            let g = grads.get_or_zeros(*id, tensor.shape());
            for k in 0..tensor.len() {
                let eps = 1e-6;
                let mut plus = params.clone();
                plus.tensors_mut()[param_idx].data_mut()[k] += eps;
                let mut minus = params.clone();
                minus.tensors_mut()[param_idx].data_mut()[k] -= eps;
                let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * eps);
                assert_relative_eq!(g.data()[k], fd, max_relative = 1e-5, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let spec = small_spec();
        let a = StructuredLayerParams::init(&spec, 99);
        let b = StructuredLayerParams::init(&spec, 99);
        assert_eq!(a, b);
        let c = StructuredLayerParams::init(&spec, 100);
        assert_ne!(a, c);
        for lin in a.backbone.iter().chain(&a.heads) {
            assert!(lin.b.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn init_variance_matches_kaiming_fan_in() {
        // fan_in = 24: sample variance of U(-sqrt(6/24), sqrt(6/24)) must be
        // within 20% of 2/24 over >= 10^4 draws.
        let spec = StructuredLayerSpec {
            name: "k".into(),
            inputs: (0..24)
                .map(|i| feature(&format!("f{i}"), 0.0, 1.0))
                .collect(),
            hidden_width: 417,
            depth: 1,
            heads: vec![head("y", 0.0, 1.0, HeadKind::Continuous)],
        };
        let params = StructuredLayerParams::init(&spec, 3);
        let w = &params.backbone[0].w;
        assert!(w.len() >= 10_000);
        let mean = w.data().iter().sum::<f64>() / w.len() as f64;
        let var = w.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / w.len() as f64;
        let target = 2.0 / 24.0;
        assert!(
            (var - target).abs() <= 0.2 * target,
            "variance {var} vs target {target}"
        );
    }
}
