use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{backward, MtlNetwork};
use super::{MtlError, TaskWeights};
use crate::data::Dataset;
use crate::fairtransform::TaskKind;
use crate::metrics::{self, MetricsError};

/// Points per task in the default validation grid.
const DEFAULT_GRID_POINTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct YotoConfig {
    /// Lower bound `b_l` of the per-task weight distribution `U(b_l, b_u)`.
    pub lambda_lower: f64,
    pub lambda_upper: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Candidate weights for [`calibrate_lambda`]; empty means an evenly
    /// spaced product grid over the sampling range.
    pub validation_grid: Vec<TaskWeights>,
    /// Reshuffle the training rows each epoch.
    pub shuffle: bool,
    pub seed: u64,
}

impl Default for YotoConfig {
    fn default() -> Self {
        Self {
            lambda_lower: 0.1,
            lambda_upper: 2.0,
            batch_size: 64,
            epochs: 30,
            learning_rate: 0.05,
            validation_grid: Vec::new(),
            shuffle: true,
            seed: 0,
        }
    }
}

impl YotoConfig {
    pub fn validate(&self) -> Result<(), MtlError> {
        let bad = |m: String| Err(MtlError::InvalidConfig(m));
        if !(self.lambda_lower > 0.0 && self.lambda_lower < self.lambda_upper && self.lambda_upper.is_finite()) {
            return bad(format!(
                "need 0 < lambda_lower < lambda_upper, got [{}, {}]",
                self.lambda_lower, self.lambda_upper
            ));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        Ok(())
    }

    /// Midpoint of the sampling range; networks trained with this config
    /// should use it as their FiLM centre.
    pub fn lambda_midpoint(&self) -> f64 {
        0.5 * (self.lambda_lower + self.lambda_upper)
    }

    /// The configured validation grid, or the default product grid.
    pub fn grid(&self, n_tasks: usize) -> Result<Vec<TaskWeights>, MtlError> {
        if !self.validation_grid.is_empty() {
            return Ok(self.validation_grid.clone());
        }
        let k = DEFAULT_GRID_POINTS;
        let step = (self.lambda_upper - self.lambda_lower) / (k - 1) as f64;
        let points: Vec<f64> = (0..k)
            .map(|i| {
                if i == k - 1 {
                    self.lambda_upper
                } else {
                    self.lambda_lower + step * i as f64
                }
            })
            .collect();
        let mut grid = vec![Vec::new()];
        for _ in 0..n_tasks {
            grid = grid
                .into_iter()
                .flat_map(|prefix: Vec<f64>| {
                    points.iter().map(move |&p| {
                        let mut v = prefix.clone();
                        v.push(p);
                        v
                    })
                })
                .collect();
        }
        grid.into_iter().map(TaskWeights::new).collect()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: MtlNetwork,
    /// Mean mini-batch loss per epoch, measured before each update.
    pub epoch_losses: Vec<f64>,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }
}

/// Mini-batch gradient descent with a fresh `lambda ~ U(b_l, b_u)^T` per batch.
///
/// Rows whose labels are all masked are skipped exactly, so a masked sample
/// has the same effect as removing it (given identical batching).
pub fn train(net: &MtlNetwork, ds: &Dataset, cfg: &YotoConfig) -> Result<TrainOutcome, MtlError> {
    cfg.validate()?;
    if ds.n_tasks() != net.n_tasks() {
        return Err(MtlError::Shape(format!(
            "dataset has {} tasks, network has {} heads",
            ds.n_tasks(),
            net.n_tasks()
        )));
    }
    if let Some(t) = ds.tasks().iter().position(|c| c.n_present() == 0) {
        return Err(MtlError::InvalidConfig(format!(
            "task `{}` has no labelled rows",
            ds.task(t).name
        )));
    }
    let mut net = net.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let lambda: Vec<f64> = (0..net.n_tasks())
                .map(|_| rng.random_range(cfg.lambda_lower..cfg.lambda_upper))
                .collect();
            let lambda = TaskWeights::new(lambda)?;
            let batch = net.encode_batch(ds, chunk)?;
            if !batch.mask.iter().any(|&m| m) {
                continue;
            }
            let (loss, grads) = backward(&net, &batch, &lambda).map_err(|e| with_epoch(e, epoch))?;
            net.params.axpy(-cfg.learning_rate, &grads);
            if !net.params.all_finite() {
                return Err(MtlError::Numerical {
                    epoch: Some(epoch),
                    message: "parameters diverged".into(),
                });
            }
            total += loss;
            batches += 1;
        }
        epoch_losses.push(if batches == 0 { 0.0 } else { total / batches as f64 });
    }
    net.set_trained_bounds((cfg.lambda_lower, cfg.lambda_upper));
    Ok(TrainOutcome {
        network: net,
        epoch_losses,
    })
}

fn with_epoch(e: MtlError, epoch: usize) -> MtlError {
    match e {
        MtlError::Numerical { message, .. } => MtlError::Numerical {
            epoch: Some(epoch),
            message,
        },
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LambdaObjective {
    /// Minimise validation MSE of the first regression task.
    #[default]
    Regression,
    /// Minimise the mean over tasks of errors min-max normalised across the grid.
    BothTasks,
}

/// Validation error of one task: MSE for regression, `1 - AUC` for scores
/// (Brier score when the labels are all one class).
fn task_error(kind: TaskKind, pred: &[f64], label: &[f64]) -> Result<f64, MtlError> {
    match kind {
        TaskKind::Regression => Ok(metrics::mse(pred, label)?),
        TaskKind::BinaryScore => match metrics::task_performance(kind, pred, label) {
            Ok(auc) => Ok(1.0 - auc),
            Err(MetricsError::DegenerateLabels) => Ok(metrics::mse(pred, label)?),
            Err(e) => Err(e.into()),
        },
    }
}

/// Per-weight, per-task validation errors (lower is better).
pub fn evaluate_lambda_grid(
    net: &MtlNetwork,
    validation: &Dataset,
    grid: &[TaskWeights],
) -> Result<Vec<Vec<f64>>, MtlError> {
    if grid.is_empty() {
        return Err(MtlError::InvalidConfig("lambda grid is empty".into()));
    }
    if let Some((lo, hi)) = net.trained_bounds() {
        for w in grid {
            if let Some(v) = w.as_slice().iter().find(|&&v| v < lo || v > hi) {
                return Err(MtlError::InvalidConfig(format!(
                    "grid weight {v} lies outside the trained range [{lo}, {hi}]"
                )));
            }
        }
    }
    if validation.n_tasks() != net.n_tasks() {
        return Err(MtlError::Shape(format!(
            "validation set has {} tasks, network has {} heads",
            validation.n_tasks(),
            net.n_tasks()
        )));
    }
    let present: Vec<Vec<usize>> = validation
        .tasks()
        .iter()
        .map(|c| (0..c.values().len()).filter(|&i| c.present()[i]).collect())
        .collect();
    if present.iter().any(|p| p.is_empty()) {
        return Err(MtlError::NoLabels);
    }
    grid.iter()
        .map(|w| {
            let preds = net.predict_dataset(validation, w)?;
            validation
                .tasks()
                .iter()
                .enumerate()
                .map(|(t, col)| {
                    let p: Vec<f64> = present[t].iter().map(|&i| preds.column(t)[i]).collect();
                    let y: Vec<f64> = present[t].iter().map(|&i| col.values()[i]).collect();
                    task_error(col.kind, &p, &y)
                })
                .collect()
        })
        .collect()
}

/// Picks the grid entry minimising `objective` on `validation`; ties go to
/// the earliest entry.
pub fn calibrate_lambda(
    net: &MtlNetwork,
    validation: &Dataset,
    grid: &[TaskWeights],
    objective: LambdaObjective,
) -> Result<TaskWeights, MtlError> {
    let errors = evaluate_lambda_grid(net, validation, grid)?;
    let scores: Vec<f64> = match objective {
        LambdaObjective::Regression => {
            let t = net
                .task_kinds()
                .iter()
                .position(|&k| k == TaskKind::Regression)
                .ok_or_else(|| MtlError::InvalidConfig("no regression task to calibrate on".into()))?;
            errors.iter().map(|e| e[t]).collect()
        }
        LambdaObjective::BothTasks => {
            let n_tasks = net.n_tasks();
            let mut scores = vec![0.0; errors.len()];
            for t in 0..n_tasks {
                let lo = errors.iter().map(|e| e[t]).fold(f64::INFINITY, f64::min);
                let hi = errors.iter().map(|e| e[t]).fold(f64::NEG_INFINITY, f64::max);
                for (s, e) in scores.iter_mut().zip(&errors) {
                    if hi > lo {
                        *s += (e[t] - lo) / (hi - lo);
                    }
                }
            }
            scores.iter().map(|s| s / n_tasks as f64).collect()
        }
    };
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    Ok(grid[best].clone())
}
