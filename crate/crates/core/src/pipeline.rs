//! End-to-end wiring: train on the training split, pick `lambda` on the
//! validation split, fit the fairness calibrator on the unlabeled pool, and
//! score predictions on held-out rows.
//!
//! The calibrator only ever sees [`PoolSet`] predictions, so labelled rows
//! cannot leak into it by construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Dataset, PoolSet};
use crate::distrib::{DistribError, JitterConfig, DEFAULT_JITTER_HALF_WIDTH};
use crate::fairtransform::{FairCalibrator, FairError, GroupLabel, Predictions};
use crate::metrics::{self, MetricsError, MetricsReport, TaskMetrics, TaskSummary};
use crate::mtl::{
    calibrate_lambda, train, Activation, HeadConfig, LambdaObjective, MtlError, MtlNetwork, NetworkConfig,
    TaskWeights, YotoConfig,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Mtl(#[from] MtlError),
    #[error(transparent)]
    Fair(#[from] FairError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl From<DistribError> for PipelineError {
    fn from(e: DistribError) -> Self {
        Self::Fair(e.into())
    }
}

/// Trunk shape; input and head sizes come from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Architecture {
    pub hidden: Vec<usize>,
    pub repr_dim: usize,
    pub activation: Activation,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            hidden: vec![32],
            repr_dim: 16,
            activation: Activation::Tanh,
        }
    }
}

/// Network configuration matching `ds`'s features, groups and tasks, with
/// the FiLM centre at the middle of the YOTO sampling range.
pub fn network_config(ds: &Dataset, arch: &Architecture, yoto: &YotoConfig, seed: u64) -> NetworkConfig {
    NetworkConfig {
        n_features: ds.n_features(),
        groups: ds.group_set().into_iter().collect(),
        hidden: arch.hidden.clone(),
        repr_dim: arch.repr_dim,
        heads: ds.task_kinds().into_iter().map(HeadConfig::for_task).collect(),
        activation: arch.activation,
        lambda_center: yoto.lambda_midpoint(),
        seed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub yoto: YotoConfig,
    pub objective: LambdaObjective,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::default(),
            yoto: YotoConfig::default(),
            objective: LambdaObjective::Regression,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FittedModel {
    pub network: MtlNetwork,
    pub lambda: TaskWeights,
    pub epoch_losses: Vec<f64>,
}

/// Trains a fresh network on `train` and selects `lambda` on `validation`.
pub fn fit_model(
    train_set: &Dataset,
    validation: &Dataset,
    cfg: &ModelConfig,
    seed: u64,
) -> Result<FittedModel, PipelineError> {
    let net = MtlNetwork::init(network_config(train_set, &cfg.architecture, &cfg.yoto, seed))?;
    let yoto = YotoConfig { seed, ..cfg.yoto.clone() };
    let outcome = train(&net, train_set, &yoto)?;
    let grid = yoto.grid(net.n_tasks())?;
    let lambda = calibrate_lambda(&outcome.network, validation, &grid, cfg.objective)?;
    Ok(FittedModel {
        network: outcome.network,
        lambda,
        epoch_losses: outcome.epoch_losses,
    })
}

/// Fits the calibrator on the network's predictions for the unlabeled pool.
pub fn fit_pool_calibrator(
    net: &MtlNetwork,
    pool: &PoolSet,
    lambda: &TaskWeights,
    jitter: JitterConfig,
) -> Result<FairCalibrator, PipelineError> {
    let preds = net.predict_pool(pool, lambda)?;
    Ok(FairCalibrator::fit(&preds, &net.task_kinds(), jitter)?)
}

/// Jitter settings used by the pipeline when none are configured.
pub fn default_jitter(seed: u64) -> JitterConfig {
    JitterConfig {
        half_width: DEFAULT_JITTER_HALF_WIDTH,
        seed,
    }
}

/// Performance on the labelled rows and unfairness over all rows, per task.
pub fn evaluate_predictions(preds: &Predictions, labels: &Dataset) -> Result<MetricsReport, PipelineError> {
    if preds.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            left: preds.len(),
            right: labels.len(),
        }
        .into());
    }
    if preds.is_empty() {
        return Err(MetricsError::EmptyInput.into());
    }
    if preds.n_tasks() != labels.n_tasks() {
        return Err(PipelineError::InvalidConfig(format!(
            "{} prediction columns for {} label columns",
            preds.n_tasks(),
            labels.n_tasks()
        )));
    }
    if preds.groups() != labels.groups() {
        return Err(PipelineError::InvalidConfig(
            "prediction groups differ from label groups".into(),
        ));
    }
    let mut report = MetricsReport::new();
    for (t, col) in labels.tasks().iter().enumerate() {
        let idx: Vec<usize> = (0..labels.len()).filter(|&i| col.present()[i]).collect();
        let p: Vec<f64> = idx.iter().map(|&i| preds.column(t)[i]).collect();
        let y: Vec<f64> = idx.iter().map(|&i| col.values()[i]).collect();
        let performance = metrics::task_performance(col.kind, &p, &y)?;
        let unfairness = metrics::ks_unfairness(preds.column(t), preds.groups())?;
        report.insert(
            col.name.clone(),
            TaskMetrics {
                performance,
                unfairness,
            },
        );
    }
    Ok(report)
}

/// Mean and standard deviation of [`evaluate_predictions`] over `replicates`
/// bootstrap resamples of the rows.
pub fn bootstrap_evaluate(
    preds: &Predictions,
    labels: &Dataset,
    replicates: usize,
    seed: u64,
) -> Result<std::collections::BTreeMap<String, TaskSummary>, PipelineError> {
    if replicates == 0 {
        return Err(PipelineError::InvalidConfig("bootstrap needs >= 1 replicate".into()));
    }
    if preds.is_empty() || labels.is_empty() {
        return Err(MetricsError::EmptyInput.into());
    }
    // validates shapes once on the full sample
    evaluate_predictions(preds, labels)?;
    let n = preds.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut runs: std::collections::BTreeMap<String, Vec<TaskMetrics>> = Default::default();
    for _ in 0..replicates {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let resampled = Predictions::new(
            idx.iter().map(|&i| preds.groups()[i]).collect::<Vec<GroupLabel>>(),
            preds
                .columns()
                .iter()
                .map(|c| idx.iter().map(|&i| c[i]).collect())
                .collect(),
        )?;
        let report = evaluate_predictions(&resampled, &labels.subset(&idx))?;
        for (task, m) in report {
            runs.entry(task).or_default().push(m);
        }
    }
    Ok(runs
        .into_iter()
        .map(|(task, ms)| (task, TaskSummary::from_runs(&ms)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split, synth_generate, SplitSpec, SynthConfig};

    fn small_model() -> ModelConfig {
        ModelConfig {
            architecture: Architecture {
                hidden: vec![8],
                repr_dim: 4,
                activation: Activation::Tanh,
            },
            yoto: YotoConfig {
                epochs: 5,
                batch_size: 32,
                ..YotoConfig::default()
            },
            objective: LambdaObjective::Regression,
        }
    }

    #[test]
    fn pipeline_lowers_unfairness() {
        let ds = synth_generate(&SynthConfig {
            n: 1500,
            d: 4,
            delta: 1.0,
            seed: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        let splits = split(&ds, &SplitSpec::default()).unwrap();
        let model = fit_model(&splits.train, &splits.validation, &small_model(), 1).unwrap();
        let cal = fit_pool_calibrator(&model.network, &splits.pool, &model.lambda, default_jitter(5)).unwrap();
        let raw = model.network.predict_pool(&splits.pool, &model.lambda).unwrap();
        let fair = cal.transform_batch(&raw, 9).unwrap();
        for t in 0..2 {
            let before = metrics::ks_unfairness(raw.column(t), raw.groups()).unwrap();
            let after = metrics::ks_unfairness(fair.column(t), fair.groups()).unwrap();
            assert!(after < before, "task {t}: {before} -> {after}");
        }
    }

    #[test]
    fn evaluation_reports_every_task() {
        let ds = synth_generate(&SynthConfig {
            n: 300,
            d: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        let preds = Predictions::new(
            ds.groups().to_vec(),
            ds.tasks().iter().map(|c| c.values().to_vec()).collect(),
        )
        .unwrap();
        let report = evaluate_predictions(&preds, &ds).unwrap();
        assert_eq!(report["y1"].performance, 0.0);
        assert_eq!(report["y2"].performance, 1.0);

        let boot = bootstrap_evaluate(&preds, &ds, 20, 1).unwrap();
        assert_eq!(boot.len(), 2);
        assert_eq!(boot["y1"].performance.mean, 0.0);
        assert!(boot["y1"].unfairness.std > 0.0);
        assert_eq!(bootstrap_evaluate(&preds, &ds, 20, 1).unwrap(), boot);
    }

    #[test]
    fn empty_predictions_are_rejected() {
        let ds = synth_generate(&SynthConfig {
            n: 10,
            d: 2,
            ..SynthConfig::default()
        })
        .unwrap();
        let empty = ds.subset(&[]);
        let preds = Predictions::new(vec![], vec![vec![], vec![]]).unwrap();
        assert!(matches!(
            evaluate_predictions(&preds, &empty),
            Err(PipelineError::Metrics(MetricsError::EmptyInput))
        ));
    }
}
