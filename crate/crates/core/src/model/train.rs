//! Mini-batch training loop with per-epoch validation and best-checkpoint
//! tracking.

use super::rollout::build_batch_graph;
use super::{LossConfig, ModelError, NodeFdmModel};
use crate::data::Sequence;
use crate::nn::{adamw_step, AdamWConfig, AdamWState, Tensor2};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: AdamWConfig,
    pub loss: LossConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            batch_size: 32,
            seed: 0,
            optimizer: AdamWConfig::default(),
            loss: LossConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    /// One row per epoch plus the pre-training row 0.
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub diverged: bool,
}

/// Train a fresh model on the given sequences. Returns the best-validation
/// model and the loss history; deterministic for a fixed seed.
pub fn train(
    train_seqs: &[Sequence],
    val_seqs: &[Sequence],
    model: NodeFdmModel,
    cfg: &TrainConfig,
) -> Result<(NodeFdmModel, TrainReport), ModelError> {
    assert!(!train_seqs.is_empty(), "empty training set");
    assert!(cfg.batch_size >= 1);
    let mut model = model;
    let shapes = model.param_shapes();
    let mut opt_state = AdamWState::new(&shapes);

    let eval_loss = |model: &NodeFdmModel, seqs: &[Sequence]| -> Result<f64, ModelError> {
        if seqs.is_empty() {
            return Ok(f64::NAN);
        }
        let mut total = 0.0;
        let mut count = 0usize;
        for chunk in seqs.chunks(cfg.batch_size) {
            let windows: Vec<&[_]> = chunk.iter().map(|s| &s.records[..]).collect();
            let graph = build_batch_graph(model, &windows)?;
            total += graph.loss_value() * chunk.len() as f64;
            count += chunk.len();
        }
        Ok(total / count as f64)
    };

    let mut history = Vec::with_capacity(cfg.epochs + 1);
    let initial = EpochStats {
        epoch: 0,
        train_loss: eval_loss(&model, train_seqs)?,
        val_loss: eval_loss(&model, val_seqs)?,
    };
    history.push(initial);

    let mut best = snapshot(&model);
    let mut best_epoch = 0usize;
    let mut best_val = if initial.val_loss.is_nan() {
        initial.train_loss
    } else {
        initial.val_loss
    };
    let mut diverged = false;

    let mut order: Vec<usize> = (0..train_seqs.len()).collect();
    'epochs: for epoch in 1..=cfg.epochs {
        let mut rng =
            ChaCha8Rng::seed_from_u64(crate::synthetic::mix(cfg.seed, 0x5EED ^ epoch as u64));
        shuffle(&mut order, &mut rng);

        let mut train_total = 0.0;
        let mut train_count = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let windows: Vec<&[_]> = chunk
                .iter()
                .map(|&i| &train_seqs[i].records[..])
                .collect();
            let graph = build_batch_graph(&model, &windows)?;
            let loss = graph.loss_value();
            if !loss.is_finite() {
                log::warn!("training diverged at epoch {epoch}; keeping best checkpoint");
                diverged = true;
                break 'epochs;
            }
            train_total += loss * chunk.len() as f64;
            train_count += chunk.len();

            let grads = graph.tape.backward(graph.loss)?;
            let grad_tensors: Vec<Tensor2> = graph
                .leaf_ids
                .iter()
                .zip(&shapes)
                .map(|(&id, &shape)| grads.get_or_zeros(id, shape))
                .collect();
            let mut params = model.param_tensors_mut();
            adamw_step(&cfg.optimizer, &mut params, &grad_tensors, &mut opt_state);
        }

        let val_loss = eval_loss(&model, val_seqs)?;
        let train_loss = train_total / train_count as f64;
        history.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
        });
        let score = if val_loss.is_nan() { train_loss } else { val_loss };
        if score.is_finite() && score < best_val {
            best_val = score;
            best_epoch = epoch;
            best = snapshot(&model);
        }
        if epoch % 50 == 0 || epoch == cfg.epochs {
            log::info!("epoch {epoch}: train {train_loss:.6}, val {val_loss:.6}");
        }
    }

    restore(&mut model, &best);
    Ok((
        model,
        TrainReport {
            history,
            best_epoch,
            best_val_loss: best_val,
            diverged,
        },
    ))
}

fn snapshot(model: &NodeFdmModel) -> Vec<Tensor2> {
    model.param_tensors().into_iter().cloned().collect()
}

fn restore(model: &mut NodeFdmModel, params: &[Tensor2]) {
    for (dst, src) in model.param_tensors_mut().into_iter().zip(params) {
        *dst = src.clone();
    }
}

/// Fisher-Yates with the crate's seeded RNG.
fn shuffle(xs: &mut [usize], rng: &mut ChaCha8Rng) {
    use rand::Rng;
    for i in (1..xs.len()).rev() {
        let j = rng.random_range(0..=i);
        xs.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::ControlGains;
    use crate::data::slice_sequences;
    use crate::performance::PerformanceConfig;
    use crate::synthetic::{generate_flight, FlightScript};

    fn sequences() -> Vec<Sequence> {
        let mut script = FlightScript::nominal();
        script.thrust_noise_frac = 0.005;
        script.seed = 31;
        script.wind.par_sl_mps = -4.0;
        script.wind.par_slope_per_m = 3e-4;
        script.wind.perp_sl_mps = 5.0;
        script.wind.perp_slope_per_m = -2e-4;
        let flight =
            generate_flight(&PerformanceConfig::default(), &script, &ControlGains::default())
                .unwrap();
        slice_sequences(&flight)
    }

    fn fresh_model(seqs: &[Sequence], seed: u64) -> NodeFdmModel {
        let records: Vec<crate::data::FlightRecord> =
            seqs.iter().flat_map(|s| s.records.clone()).collect();
        let flight = crate::data::FlightSeries::new("AF00-0000", records);
        NodeFdmModel::from_training_flights(&[flight], LossConfig::default(), seed).unwrap()
    }

    #[test]
    fn zero_epochs_returns_initialized_model_with_one_history_row() {
        let seqs = sequences();
        let model = fresh_model(&seqs, 3);
        let before = model.param_tensors().into_iter().cloned().collect::<Vec<_>>();
        let cfg = TrainConfig {
            epochs: 0,
            batch_size: 4,
            seed: 3,
            ..TrainConfig::default()
        };
        let (out, report) = train(&seqs[..4], &seqs[4..6], model, &cfg).unwrap();
        assert_eq!(report.history.len(), 1);
        assert_eq!(report.best_epoch, 0);
        assert!(report.history[0].val_loss.is_finite());
        let after = out.param_tensors();
        for (a, b) in before.iter().zip(after) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn short_training_reduces_loss_deterministically() {
        let seqs = sequences();
        let cfg = TrainConfig {
            epochs: 8,
            batch_size: 4,
            seed: 5,
            optimizer: AdamWConfig {
                lr: 3e-3,
                ..AdamWConfig::default()
            },
            ..TrainConfig::default()
        };
        let (m1, r1) = train(&seqs[..6], &seqs[6..8], fresh_model(&seqs, 5), &cfg).unwrap();
        let (m2, r2) = train(&seqs[..6], &seqs[6..8], fresh_model(&seqs, 5), &cfg).unwrap();
        assert_eq!(report_bits(&r1), report_bits(&r2), "determinism");
        assert_eq!(m1.param_tensors(), m2.param_tensors());
        assert_eq!(r1.history.len(), cfg.epochs + 1);
        let first = r1.history[0].train_loss;
        let last = r1.history.last().unwrap().train_loss;
        assert!(last < first, "loss did not decrease: {first} -> {last}");
        assert!(!r1.diverged);
    }

    fn report_bits(r: &TrainReport) -> Vec<u64> {
        r.history
            .iter()
            .flat_map(|e| [e.train_loss.to_bits(), e.val_loss.to_bits()])
            .collect()
    }
}
