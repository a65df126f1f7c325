//! Shared-representation multi-task network with trade-off conditioning.
//!
//! The trunk `h` maps features plus a one-hot group encoding to a
//! representation `z`; each task head `f_t` maps `z` to a prediction. Every
//! trunk layer is modulated feature-wise (FiLM) by scale/shift vectors that
//! are affine functions of `log(lambda)`, so one trained network covers a
//! whole range of task weightings. During training a fresh `lambda` is drawn
//! from `U(b_l, b_u)` for each mini-batch and used both for the modulation and
//! for weighting the per-task losses.

mod network;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fairtransform::GroupLabel;
use crate::metrics::MetricsError;

pub use network::{
    backward, loss, Activation, Batch, Dense, Film, HeadConfig, LossKind, MtlNetwork, NetworkConfig,
    NetworkDocument, OutputActivation, Params, NETWORK_FORMAT_VERSION,
};
pub use train::{calibrate_lambda, evaluate_lambda_grid, train, LambdaObjective, TrainOutcome, YotoConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MtlError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("group {0} is not part of the network's group encoding")]
    UnknownGroup(GroupLabel),
    #[error("no labels present for any task")]
    NoLabels,
    #[error("numerical failure{}: {message}", epoch.map(|e| format!(" in epoch {e}")).unwrap_or_default())]
    Numerical { epoch: Option<usize>, message: String },
    #[error("malformed network document: {0}")]
    Format(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Positive per-task loss weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TaskWeights(Vec<f64>);

impl TaskWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self, MtlError> {
        if weights.is_empty() {
            return Err(MtlError::InvalidConfig("task weights are empty".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(MtlError::InvalidConfig(format!(
                "task weights must be finite and > 0, got {w}"
            )));
        }
        Ok(Self(weights))
    }

    /// The same weight for every task.
    pub fn uniform(n_tasks: usize, value: f64) -> Result<Self, MtlError> {
        Self::new(vec![value; n_tasks])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for TaskWeights {
    type Error = MtlError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<TaskWeights> for Vec<f64> {
    fn from(w: TaskWeights) -> Self {
        w.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_must_be_positive() {
        assert!(TaskWeights::new(vec![1.0, 0.5]).is_ok());
        assert!(TaskWeights::new(vec![1.0, 0.0]).is_err());
        assert!(TaskWeights::new(vec![-1.0]).is_err());
        assert!(TaskWeights::new(vec![]).is_err());
        assert!(serde_json::from_str::<TaskWeights>("[1.0, -2.0]").is_err());
        let w: TaskWeights = serde_json::from_str("[0.5, 2]").unwrap();
        assert_eq!(w.as_slice(), &[0.5, 2.0]);
    }

    #[test]
    fn numerical_error_mentions_epoch() {
        let e = MtlError::Numerical {
            epoch: Some(3),
            message: "loss is NaN".into(),
        };
        assert_eq!(e.to_string(), "numerical failure in epoch 3: loss is NaN");
    }
}
