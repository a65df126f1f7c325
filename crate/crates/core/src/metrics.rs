//! Unfairness and predictive performance.
//!
//! Unfairness is the largest two-sample Kolmogorov-Smirnov statistic between
//! group-conditional prediction samples. Both ECDFs are step functions that
//! only jump at sample points, so scanning the merged sorted support gives the
//! exact supremum.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fairtransform::{classify, GroupLabel, TaskKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("need at least two groups, found {0}")]
    InsufficientGroups(usize),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("labels contain a single class")]
    DegenerateLabels,
    #[error("label {0} is not 0 or 1")]
    InvalidLabel(u8),
    #[error("non-finite value at index {0}")]
    InvalidValue(usize),
    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
}

fn check_lengths(left: usize, right: usize) -> Result<(), MetricsError> {
    if left != right {
        return Err(MetricsError::LengthMismatch { left, right });
    }
    if left == 0 {
        return Err(MetricsError::EmptyInput);
    }
    Ok(())
}

fn check_finite(values: &[f64]) -> Result<(), MetricsError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(MetricsError::InvalidValue(i)),
        None => Ok(()),
    }
}

/// Two-sample KS statistic `sup_u |F_a(u) - F_b(u)|` for sorted samples.
pub fn ks_statistic_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let (nf, mf) = (n as f64, m as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup = 0.0f64;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / nf - j as f64 / mf).abs());
    }
    sup
}

/// Largest pairwise KS statistic between the group-conditional samples.
pub fn ks_unfairness(values: &[f64], groups: &[GroupLabel]) -> Result<f64, MetricsError> {
    check_lengths(values.len(), groups.len())?;
    check_finite(values)?;
    let mut by_group: BTreeMap<GroupLabel, Vec<f64>> = BTreeMap::new();
    for (&v, &g) in values.iter().zip(groups) {
        by_group.entry(g).or_default().push(v);
    }
    if by_group.len() < 2 {
        return Err(MetricsError::InsufficientGroups(by_group.len()));
    }
    let samples: Vec<Vec<f64>> = by_group
        .into_values()
        .map(|mut v| {
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();
    let mut worst = 0.0f64;
    for (k, a) in samples.iter().enumerate() {
        for b in &samples[k + 1..] {
            worst = worst.max(ks_statistic_sorted(a, b));
        }
    }
    Ok(worst)
}

/// Mean squared error.
pub fn mse(pred: &[f64], label: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(pred.len(), label.len())?;
    let sum: f64 = pred.iter().zip(label).map(|(p, y)| (p - y) * (p - y)).sum();
    Ok(sum / pred.len() as f64)
}

/// Area under the ROC curve as the normalized Mann-Whitney statistic, with
/// half credit for tied positive/negative pairs.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64, MetricsError> {
    check_lengths(scores.len(), labels.len())?;
    check_finite(scores)?;
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(MetricsError::InvalidLabel(bad));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::DegenerateLabels);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // ranks are 1-based; tied blocks share their average rank
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        let pos_in_block = order[start..end].iter().filter(|&&i| labels[i] == 1).count();
        rank_sum_pos += avg_rank * pos_in_block as f64;
        start = end;
    }
    let np = n_pos as f64;
    let u = rank_sum_pos - np * (np + 1.0) / 2.0;
    Ok(u / (np * n_neg as f64))
}

/// Fraction of samples whose thresholded score disagrees with the label.
pub fn misclassification(scores: &[f64], labels: &[u8], tau: f64) -> Result<f64, MetricsError> {
    check_lengths(scores.len(), labels.len())?;
    let mut wrong = 0usize;
    for (&s, &y) in scores.iter().zip(labels) {
        let c = classify(s, tau).map_err(|_| MetricsError::InvalidThreshold(tau))?;
        if c != y {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / scores.len() as f64)
}

/// Performance in the task's natural unit: MSE for regression, AUC for
/// scores.
pub fn task_performance(kind: TaskKind, pred: &[f64], label: &[f64]) -> Result<f64, MetricsError> {
    match kind {
        TaskKind::Regression => mse(pred, label),
        TaskKind::BinaryScore => {
            let labels: Vec<u8> = label.iter().map(|&y| u8::from(y >= 0.5)).collect();
            auc(pred, &labels)
        }
    }
}

/// Point metrics for one task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub performance: f64,
    pub unfairness: f64,
}

/// Task name to point metrics.
pub type MetricsReport = BTreeMap<String, TaskMetrics>;

/// Mean and sample standard deviation over replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn from_samples(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ± {:.2}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub performance: Summary,
    pub unfairness: Summary,
}

impl TaskSummary {
    pub fn from_runs(runs: &[TaskMetrics]) -> Self {
        let perf: Vec<f64> = runs.iter().map(|m| m.performance).collect();
        let unf: Vec<f64> = runs.iter().map(|m| m.unfairness).collect();
        Self {
            performance: Summary::from_samples(&perf),
            unfairness: Summary::from_samples(&unf),
        }
    }
}

/// `{variant: {task: {performance: {mean, std}, unfairness: {mean, std}}}}`.
pub type VariantReport = BTreeMap<String, BTreeMap<String, TaskSummary>>;
