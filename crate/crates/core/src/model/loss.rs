//! Composite training loss: per-feature MSE weighted inversely by the
//! training-set spread of each supervised variable.

use super::rollout::RolloutOutput;
use super::ModelError;
use crate::data::{DataError, FeatureId, NormStats, Sequence};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// How the per-feature weights derive from the empirical std.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightConvention {
    /// α = 1/σ² (z-scored MSE; dimensionless terms). Default.
    InvVariance,
    /// α = 1/σ.
    InvStd,
}

impl std::str::FromStr for WeightConvention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inv-variance" | "inv_variance" => Ok(WeightConvention::InvVariance),
            "inv-std" | "inv_std" => Ok(WeightConvention::InvStd),
            other => Err(format!("unknown weight convention '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub convention: WeightConvention,
    /// Supervise along-track distance as well. Off by default: its error is
    /// the integral of the ground-speed error and double-counts airspeed
    /// supervision.
    pub include_distance: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            convention: WeightConvention::InvVariance,
            include_distance: false,
        }
    }
}

/// Supervised state features (d optional), in state order.
pub(crate) fn supervised_state_features(include_distance: bool) -> Vec<FeatureId> {
    let mut v = vec![FeatureId::Altitude];
    if include_distance {
        v.push(FeatureId::Distance);
    }
    v.extend([FeatureId::FlightPathAngle, FeatureId::Tas, FeatureId::Mass]);
    v
}

/// Supervised intermediate features (e2 and e3).
pub(crate) fn supervised_intermediate_features() -> Vec<FeatureId> {
    vec![
        FeatureId::Aoa,
        FeatureId::Pitch,
        FeatureId::N1,
        FeatureId::FuelFlow,
    ]
}

/// Per-feature weighting coefficients α, keyed by feature name.
#[derive(Debug, Clone, PartialEq)]
pub struct LossWeights {
    weights: BTreeMap<String, f64>,
}

impl LossWeights {
    pub fn from_stats(stats: &NormStats, cfg: &LossConfig) -> Result<Self, DataError> {
        let mut weights = BTreeMap::new();
        for f in supervised_state_features(cfg.include_distance)
            .into_iter()
            .chain(supervised_intermediate_features())
        {
            let s = stats.get(f)?;
            let w = match cfg.convention {
                WeightConvention::InvVariance => 1.0 / (s.std * s.std),
                WeightConvention::InvStd => 1.0 / s.std,
            };
            weights.insert(f.name().to_string(), w);
        }
        Ok(LossWeights { weights })
    }

    pub fn from_map(weights: BTreeMap<String, f64>) -> Self {
        LossWeights { weights }
    }

    pub fn as_map(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn get(&self, f: FeatureId) -> f64 {
        self.weights.get(f.name()).copied().unwrap_or(0.0)
    }

    pub fn scaled(&self, factor: f64) -> LossWeights {
        LossWeights {
            weights: self
                .weights
                .iter()
                .map(|(k, v)| (k.clone(), v * factor))
                .collect(),
        }
    }
}

/// Plain composite loss over one predicted/recorded sequence pair:
/// sum over supervised features of α_i times the MSE over supervised
/// timesteps (states from step 1, intermediates from step 0).
pub fn composite_loss(
    pred: &RolloutOutput,
    truth: &Sequence,
    weights: &LossWeights,
    include_distance: bool,
) -> Result<f64, ModelError> {
    let n = truth.records.len();
    if pred.states.len() != n || pred.intermediates.len() != n {
        return Err(ModelError::Checkpoint(format!(
            "misaligned horizons: pred {} vs truth {}",
            pred.states.len(),
            n
        )));
    }
    let mut total = 0.0;
    for f in supervised_state_features(include_distance) {
        let mut sse = 0.0;
        for k in 1..n {
            let p = state_feature(&pred.states[k], f);
            let t = f.get(&truth.records[k]);
            sse += (p - t) * (p - t);
        }
        total += weights.get(f) * sse / (n - 1) as f64;
    }
    for f in supervised_intermediate_features() {
        let mut sse = 0.0;
        for k in 0..n {
            let p = intermediate_feature(&pred.intermediates[k], f);
            let t = f.get(&truth.records[k]);
            sse += (p - t) * (p - t);
        }
        total += weights.get(f) * sse / n as f64;
    }
    Ok(total)
}

fn state_feature(s: &crate::data::StateVector, f: FeatureId) -> f64 {
    match f {
        FeatureId::Altitude => s.h,
        FeatureId::Distance => s.d,
        FeatureId::FlightPathAngle => s.gamma,
        FeatureId::Tas => s.v_tas,
        FeatureId::Mass => s.m,
        _ => unreachable!("not a state feature"),
    }
}

fn intermediate_feature(e: &crate::data::IntermediateVector, f: FeatureId) -> f64 {
    match f {
        FeatureId::Aoa => e.alpha,
        FeatureId::Pitch => e.theta,
        FeatureId::N1 => e.n1,
        FeatureId::FuelFlow => e.fuel_flow,
        _ => unreachable!("not a supervised intermediate"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureStat;

    #[test]
    fn weight_conventions() {
        let stats = super::super::test_support::stats_with(&[(FeatureId::Altitude, 0.0, 2.0)]);
        let w = LossWeights::from_stats(
            &stats,
            &LossConfig {
                convention: WeightConvention::InvVariance,
                include_distance: false,
            },
        )
        .unwrap();
        assert_eq!(w.get(FeatureId::Altitude), 0.25);
        let w = LossWeights::from_stats(
            &stats,
            &LossConfig {
                convention: WeightConvention::InvStd,
                include_distance: false,
            },
        )
        .unwrap();
        assert_eq!(w.get(FeatureId::Altitude), 0.5);
        // Distance excluded by default.
        assert_eq!(w.get(FeatureId::Distance), 0.0);
    }

    #[test]
    fn single_feature_constant_error_contribution() {
        // sigma = 2, constant error 1 over all steps, weight 1/sigma^2:
        // contribution = 1/4.
        let mut weights = BTreeMap::new();
        weights.insert("alt".to_string(), 0.25);
        let w = LossWeights::from_map(weights);
        // Emulate via the formula directly: MSE of a constant error 1 is 1.
        let contribution = w.get(FeatureId::Altitude) * 1.0;
        assert_eq!(contribution, 0.25);
    }

    #[test]
    fn doubling_weights_doubles_loss() {
        let stats = super::super::test_support::uniform_stats(0.0, 1.0);
        let deriv = super::super::test_support::flat_deriv_stats();
        let model = super::super::test_support::zeroed_model(&stats, &deriv);
        let seq = synthetic_sequence();
        let pred = super::super::rollout(
            &model,
            &seq.records[0].state,
            &seq.records.iter().map(|r| r.controls).collect::<Vec<_>>(),
            &seq.records.iter().map(|r| r.context).collect::<Vec<_>>(),
        )
        .unwrap();
        let w1 = model.weights.clone();
        let w2 = w1.scaled(2.0);
        let l1 = composite_loss(&pred, &seq, &w1, false).unwrap();
        let l2 = composite_loss(&pred, &seq, &w2, false).unwrap();
        assert!((l2 - 2.0 * l1).abs() <= 1e-12 * l1.abs().max(1.0));
        assert!(l1 > 0.0);
    }

    #[test]
    fn perfect_prediction_has_zero_loss() {
        let seq = synthetic_sequence();
        let pred = RolloutOutput {
            states: seq.records.iter().map(|r| r.state).collect(),
            intermediates: seq.records.iter().map(|r| r.intermediates).collect(),
        };
        let mut weights = BTreeMap::new();
        for f in supervised_state_features(true)
            .into_iter()
            .chain(supervised_intermediate_features())
        {
            weights.insert(f.name().to_string(), 1.0);
        }
        let loss = composite_loss(&pred, &seq, &LossWeights::from_map(weights), true).unwrap();
        assert_eq!(loss, 0.0);
    }

    fn synthetic_sequence() -> Sequence {
        use crate::baseline::ControlGains;
        use crate::performance::PerformanceConfig;
        use crate::synthetic::{generate_flight, FlightScript};
        let mut script = FlightScript::nominal();
        script.seed = 3;
        let flight =
            generate_flight(&PerformanceConfig::default(), &script, &ControlGains::default())
                .unwrap();
        crate::data::slice_sequences(&flight).remove(1)
    }

    #[test]
    fn stats_support_helpers_cover_all_features() {
        let stats = super::super::test_support::stats_with(&[(FeatureId::Mass, 100.0, 10.0)]);
        assert_eq!(
            stats.get(FeatureId::Mass).unwrap(),
            FeatureStat { mean: 100.0, std: 10.0 }
        );
        assert_eq!(
            stats.get(FeatureId::Aoa).unwrap(),
            FeatureStat { mean: 0.0, std: 1.0 }
        );
    }
}
