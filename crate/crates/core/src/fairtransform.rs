//! Plug-in Wasserstein fair estimator.
//!
//! A [`FairCalibrator`] is fitted on predictions for an unlabeled pool split.
//! For every task `t` and group `s` it keeps the ECDF of the (jittered) pool
//! predictions, plus the empirical group frequencies `pi_s`. A new prediction
//! `g` for a member of group `s` is mapped to
//!
//! ```text
//! sum_{s'} pi_{s'} * Q_{t|s'}( F_{t|s}(g + zeta) ),   zeta ~ U(-u, u)
//! ```
//!
//! which pushes each group-conditional distribution onto the `pi`-weighted
//! Wasserstein-2 barycenter of all of them. Within a group the map is
//! non-decreasing, so group-wise ranks are kept.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distrib::{DistribError, EmpiricalDistribution, JitterConfig, JitterStream};

/// JSON document version written by [`FairCalibrator::to_json`].
pub const CALIBRATOR_FORMAT_VERSION: u32 = 1;

/// Stream id for jitter drawn while fitting.
const FIT_STREAM: u64 = 0;
/// Stream id for jitter drawn while transforming.
const TRANSFORM_STREAM: u64 = 1;

/// Sensitive attribute value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupLabel(pub i64);

impl fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<i64> for GroupLabel {
    fn from(v: i64) -> Self {
        GroupLabel(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Real-valued target.
    Regression,
    /// Probability of the positive class, in `[0, 1]`.
    BinaryScore,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FairError {
    #[error("group {group} has {count} pool samples, need at least 2")]
    InsufficientGroupData { group: GroupLabel, count: usize },
    #[error("pool contains {0} group(s), need at least 2")]
    TooFewGroups(usize),
    #[error("group {0} was not present when the calibrator was fitted")]
    UnknownGroup(GroupLabel),
    #[error("calibrator holds no fitted task distributions")]
    NotFitted,
    #[error("task index {index} out of range ({n_tasks} tasks)")]
    InvalidTask { index: usize, n_tasks: usize },
    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed calibrator document: {0}")]
    Format(String),
    #[error(transparent)]
    Distrib(#[from] DistribError),
}

/// Per-sample predictions for every task, stored column-wise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    groups: Vec<GroupLabel>,
    columns: Vec<Vec<f64>>,
}

impl Predictions {
    /// `columns[t][i]` is the prediction of task `t` for sample `i`.
    pub fn new(groups: Vec<GroupLabel>, columns: Vec<Vec<f64>>) -> Result<Self, FairError> {
        if let Some((t, c)) = columns.iter().enumerate().find(|(_, c)| c.len() != groups.len()) {
            return Err(FairError::InvalidConfig(format!(
                "task column {t} has {} values for {} samples",
                c.len(),
                groups.len()
            )));
        }
        Ok(Self { groups, columns })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn n_tasks(&self) -> usize {
        self.columns.len()
    }

    pub fn groups(&self) -> &[GroupLabel] {
        &self.groups
    }

    pub fn column(&self, task: usize) -> &[f64] {
        &self.columns[task]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn into_columns(self) -> Vec<Vec<f64>> {
        self.columns
    }
}

/// Fitted per-task, per-group ECDFs with group frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FairCalibrator {
    task_kinds: Vec<TaskKind>,
    group_weights: BTreeMap<GroupLabel, f64>,
    distributions: Vec<BTreeMap<GroupLabel, EmpiricalDistribution>>,
    jitter: JitterConfig,
}

/// Fits the calibrator on pool predictions produced by the model that will
/// later be post-processed.
pub fn fit_calibrator(
    pool: &Predictions,
    task_kinds: &[TaskKind],
    jitter: JitterConfig,
) -> Result<FairCalibrator, FairError> {
    FairCalibrator::fit(pool, task_kinds, jitter)
}

impl FairCalibrator {
    pub fn fit(
        pool: &Predictions,
        task_kinds: &[TaskKind],
        jitter: JitterConfig,
    ) -> Result<Self, FairError> {
        jitter.validate()?;
        if task_kinds.len() != pool.n_tasks() {
            return Err(FairError::InvalidConfig(format!(
                "{} task kinds given for {} prediction columns",
                task_kinds.len(),
                pool.n_tasks()
            )));
        }
        if task_kinds.is_empty() {
            return Err(FairError::InvalidConfig("no tasks to calibrate".into()));
        }

        let mut members: BTreeMap<GroupLabel, Vec<usize>> = BTreeMap::new();
        for (i, &g) in pool.groups().iter().enumerate() {
            members.entry(g).or_default().push(i);
        }
        if members.len() < 2 {
            return Err(FairError::TooFewGroups(members.len()));
        }
        if let Some((&group, idx)) = members.iter().find(|(_, idx)| idx.len() < 2) {
            return Err(FairError::InsufficientGroupData {
                group,
                count: idx.len(),
            });
        }

        let total = pool.len() as f64;
        let group_weights = members
            .iter()
            .map(|(&g, idx)| (g, idx.len() as f64 / total))
            .collect();

        let mut stream = jitter.stream(FIT_STREAM);
        let mut distributions = Vec::with_capacity(task_kinds.len());
        for t in 0..task_kinds.len() {
            let col = pool.column(t);
            let noisy: Vec<f64> = col.iter().map(|&v| v + stream.draw()).collect();
            let mut per_group = BTreeMap::new();
            for (&g, idx) in &members {
                let sample: Vec<f64> = idx.iter().map(|&i| noisy[i]).collect();
                per_group.insert(g, EmpiricalDistribution::from_vec(sample)?);
            }
            distributions.push(per_group);
        }

        Ok(Self {
            task_kinds: task_kinds.to_vec(),
            group_weights,
            distributions,
            jitter,
        })
    }

    /// Assembles a calibrator from already-computed pieces.
    ///
    /// Unlike [`fit`](Self::fit) this accepts a single group, which makes the
    /// degenerate identity map `Q_s o F_s` constructible.
    pub fn from_parts(
        task_kinds: Vec<TaskKind>,
        group_weights: BTreeMap<GroupLabel, f64>,
        distributions: Vec<BTreeMap<GroupLabel, EmpiricalDistribution>>,
        jitter: JitterConfig,
    ) -> Result<Self, FairError> {
        jitter.validate()?;
        if distributions.is_empty() {
            return Err(FairError::NotFitted);
        }
        if task_kinds.len() != distributions.len() {
            return Err(FairError::InvalidConfig(format!(
                "{} task kinds for {} task distributions",
                task_kinds.len(),
                distributions.len()
            )));
        }
        if group_weights.is_empty() {
            return Err(FairError::InvalidConfig("no group weights".into()));
        }
        if let Some((g, w)) = group_weights.iter().find(|(_, &w)| !(w > 0.0 && w.is_finite())) {
            return Err(FairError::InvalidConfig(format!(
                "group {g} has non-positive weight {w}"
            )));
        }
        let sum: f64 = group_weights.values().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(FairError::InvalidConfig(format!(
                "group weights sum to {sum}, expected 1"
            )));
        }
        for (t, per_group) in distributions.iter().enumerate() {
            if !per_group.keys().eq(group_weights.keys()) {
                return Err(FairError::InvalidConfig(format!(
                    "task {t} groups do not match the weighted groups"
                )));
            }
        }
        Ok(Self {
            task_kinds,
            group_weights,
            distributions,
            jitter,
        })
    }

    pub fn n_tasks(&self) -> usize {
        self.distributions.len()
    }

    pub fn task_kinds(&self) -> &[TaskKind] {
        &self.task_kinds
    }

    /// Empirical group frequencies `pi_s`.
    pub fn group_weights(&self) -> &BTreeMap<GroupLabel, f64> {
        &self.group_weights
    }

    pub fn jitter(&self) -> &JitterConfig {
        &self.jitter
    }

    pub fn distribution(&self, task: usize, group: GroupLabel) -> Option<&EmpiricalDistribution> {
        self.distributions.get(task)?.get(&group)
    }

    fn task_distributions(
        &self,
        task: usize,
    ) -> Result<&BTreeMap<GroupLabel, EmpiricalDistribution>, FairError> {
        if self.distributions.is_empty() {
            return Err(FairError::NotFitted);
        }
        self.distributions.get(task).ok_or(FairError::InvalidTask {
            index: task,
            n_tasks: self.distributions.len(),
        })
    }

    /// Maps one prediction. `zeta` is the jitter draw to add before the ECDF
    /// lookup; pass `0.0` for the unrandomised map.
    pub fn transform(
        &self,
        task: usize,
        value: f64,
        group: GroupLabel,
        zeta: f64,
    ) -> Result<f64, FairError> {
        let dists = self.task_distributions(task)?;
        let own = dists.get(&group).ok_or(FairError::UnknownGroup(group))?;
        let level = own.cdf(value + zeta);
        let mut out = 0.0;
        for (g, &w) in &self.group_weights {
            out += w * dists[g].quantile_at_level(level);
        }
        if self.task_kinds[task] == TaskKind::BinaryScore {
            out = out.clamp(0.0, 1.0);
        }
        Ok(out)
    }

    /// Maps every prediction of every task with fresh i.i.d. jitter per
    /// (sample, task). The transform-time stream is independent of the one
    /// used during fitting even when `seed` equals the fit seed.
    pub fn transform_batch(&self, preds: &Predictions, seed: u64) -> Result<Predictions, FairError> {
        if preds.n_tasks() != self.n_tasks() {
            return Err(FairError::InvalidConfig(format!(
                "batch has {} task columns, calibrator has {}",
                preds.n_tasks(),
                self.n_tasks()
            )));
        }
        let mut stream = JitterStream::new(self.jitter.half_width, seed, TRANSFORM_STREAM);
        let mut columns = Vec::with_capacity(self.n_tasks());
        for t in 0..self.n_tasks() {
            let col = preds
                .column(t)
                .iter()
                .zip(preds.groups())
                .map(|(&v, &g)| self.transform(t, v, g, stream.draw()))
                .collect::<Result<Vec<_>, _>>()?;
            columns.push(col);
        }
        Predictions::new(preds.groups().to_vec(), columns)
    }

    pub fn to_document(&self) -> CalibratorDocument {
        CalibratorDocument {
            version: CALIBRATOR_FORMAT_VERSION,
            task_kinds: self.task_kinds.clone(),
            group_weights: self.group_weights.clone(),
            distributions: self
                .distributions
                .iter()
                .map(|m| m.iter().map(|(&g, d)| (g, d.values().to_vec())).collect())
                .collect(),
            jitter: self.jitter,
        }
    }

    pub fn from_document(doc: CalibratorDocument) -> Result<Self, FairError> {
        if doc.version != CALIBRATOR_FORMAT_VERSION {
            return Err(FairError::Format(format!(
                "unsupported version {} (expected {CALIBRATOR_FORMAT_VERSION})",
                doc.version
            )));
        }
        let distributions = doc
            .distributions
            .into_iter()
            .map(|m| {
                m.into_iter()
                    .map(|(g, v)| Ok((g, EmpiricalDistribution::from_vec(v)?)))
                    .collect::<Result<BTreeMap<_, _>, FairError>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_parts(doc.task_kinds, doc.group_weights, distributions, doc.jitter)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("calibrator serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, FairError> {
        let doc: CalibratorDocument =
            serde_json::from_str(s).map_err(|e| FairError::Format(e.to_string()))?;
        Self::from_document(doc)
    }
}

/// Serialized form of a [`FairCalibrator`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratorDocument {
    pub version: u32,
    pub task_kinds: Vec<TaskKind>,
    pub group_weights: BTreeMap<GroupLabel, f64>,
    /// `distributions[t][s]` is the sorted jittered pool sample.
    pub distributions: Vec<BTreeMap<GroupLabel, Vec<f64>>>,
    pub jitter: JitterConfig,
}

/// Thresholded decision `1{score >= tau}`.
pub fn classify(score: f64, tau: f64) -> Result<u8, FairError> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(FairError::InvalidThreshold(tau));
    }
    Ok(u8::from(score >= tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ks_unfairness;
    use proptest::prelude::*;

    const A: GroupLabel = GroupLabel(0);
    const B: GroupLabel = GroupLabel(1);

    fn preds(groups: &[i64], values: &[f64]) -> Predictions {
        Predictions::new(
            groups.iter().map(|&g| GroupLabel(g)).collect(),
            vec![values.to_vec()],
        )
        .unwrap()
    }

    fn hand_calibrator() -> FairCalibrator {
        let p = preds(&[0, 0, 0, 1, 1, 1], &[1.0, 2.0, 3.0, 3.0, 4.0, 5.0]);
        fit_calibrator(&p, &[TaskKind::Regression], JitterConfig::none()).unwrap()
    }

    #[test]
    fn group_frequencies() {
        let mut groups = vec![0; 60];
        groups.extend(vec![1; 40]);
        let values: Vec<f64> = (0..100).map(f64::from).collect();
        let cal =
            fit_calibrator(&preds(&groups, &values), &[TaskKind::Regression], JitterConfig::none())
                .unwrap();
        assert_eq!(cal.group_weights()[&A], 0.6);
        assert_eq!(cal.group_weights()[&B], 0.4);
    }

    #[test]
    fn fit_rejects_degenerate_pools() {
        let single = preds(&[0, 0, 0], &[1.0, 2.0, 3.0]);
        assert_eq!(
            fit_calibrator(&single, &[TaskKind::Regression], JitterConfig::none()),
            Err(FairError::TooFewGroups(1))
        );
        let tiny = preds(&[0, 0, 1], &[1.0, 2.0, 3.0]);
        assert_eq!(
            fit_calibrator(&tiny, &[TaskKind::Regression], JitterConfig::none()),
            Err(FairError::InsufficientGroupData { group: B, count: 1 })
        );
        let p = preds(&[0, 0, 1, 1], &[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(
            fit_calibrator(&p, &[TaskKind::Regression, TaskKind::BinaryScore], JitterConfig::none()),
            Err(FairError::InvalidConfig(_))
        ));
    }

    #[test]
    fn ecdfs_equal_pool_samples_without_jitter() {
        let cal = hand_calibrator();
        assert_eq!(cal.distribution(0, A).unwrap().values(), &[1.0, 2.0, 3.0]);
        assert_eq!(cal.distribution(0, B).unwrap().values(), &[3.0, 4.0, 5.0]);
    }

    #[test]
    fn transform_hand_example() {
        // F_A(2) = 2/3, Q_A(2/3) = 2, Q_B(2/3) = 4 -> 0.5 * 2 + 0.5 * 4
        assert_eq!(hand_calibrator().transform(0, 2.0, A, 0.0).unwrap(), 3.0);
    }

    #[test]
    fn transform_errors() {
        let cal = hand_calibrator();
        assert_eq!(
            cal.transform(0, 1.0, GroupLabel(7), 0.0),
            Err(FairError::UnknownGroup(GroupLabel(7)))
        );
        assert!(matches!(
            cal.transform(3, 1.0, A, 0.0),
            Err(FairError::InvalidTask { index: 3, .. })
        ));
        assert_eq!(
            FairCalibrator::from_parts(vec![], BTreeMap::from([(A, 1.0)]), vec![], JitterConfig::none()),
            Err(FairError::NotFitted)
        );
    }

    #[test]
    fn out_of_support_maps_to_barycentric_extremes() {
        let cal = hand_calibrator();
        // below support: F = 0, Q(0) = minimum of each group
        assert_eq!(cal.transform(0, -100.0, A, 0.0).unwrap(), 0.5 * 1.0 + 0.5 * 3.0);
        assert_eq!(cal.transform(0, 100.0, A, 0.0).unwrap(), 0.5 * 3.0 + 0.5 * 5.0);
    }

    #[test]
    fn identical_groups_fix_support_points() {
        let vals = [0.3, -1.2, 4.5, 2.25, 0.0];
        let mut all = vals.to_vec();
        all.extend_from_slice(&vals);
        let groups: Vec<i64> = (0..10).map(|i| i64::from(i >= 5)).collect();
        let cal =
            fit_calibrator(&preds(&groups, &all), &[TaskKind::Regression], JitterConfig::none())
                .unwrap();
        for &v in &vals {
            assert_eq!(cal.transform(0, v, A, 0.0).unwrap(), v);
            assert_eq!(cal.transform(0, v, B, 0.0).unwrap(), v);
        }
    }

    #[test]
    fn single_group_is_identity_on_distinct_support() {
        let d = EmpiricalDistribution::new(&[0.1, 0.7, -3.0, 9.5]).unwrap();
        let cal = FairCalibrator::from_parts(
            vec![TaskKind::Regression],
            BTreeMap::from([(A, 1.0)]),
            vec![BTreeMap::from([(A, d.clone())])],
            JitterConfig::none(),
        )
        .unwrap();
        for &v in d.values() {
            assert_eq!(cal.transform(0, v, A, 0.0).unwrap(), v);
        }
    }

    #[test]
    fn from_parts_checks_weights() {
        let d = EmpiricalDistribution::new(&[1.0, 2.0]).unwrap();
        let dists = vec![BTreeMap::from([(A, d.clone()), (B, d)])];
        let bad = BTreeMap::from([(A, 0.5), (B, 0.6)]);
        assert!(matches!(
            FairCalibrator::from_parts(vec![TaskKind::Regression], bad, dists.clone(), JitterConfig::none()),
            Err(FairError::InvalidConfig(_))
        ));
        let zero = BTreeMap::from([(A, 0.0), (B, 1.0)]);
        assert!(FairCalibrator::from_parts(vec![TaskKind::Regression], zero, dists, JitterConfig::none())
            .is_err());
    }

    #[test]
    fn score_tasks_are_clamped() {
        let p = Predictions::new(
            vec![A, A, B, B],
            vec![vec![0.0, 1.0, 0.0, 1.0]],
        )
        .unwrap();
        let cal = fit_calibrator(&p, &[TaskKind::BinaryScore], JitterConfig::new(0.01, 3).unwrap())
            .unwrap();
        let out = cal.transform_batch(&p, 11).unwrap();
        assert!(out.column(0).iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn empty_batch() {
        let cal = hand_calibrator();
        let empty = Predictions::new(vec![], vec![vec![]]).unwrap();
        let out = cal.transform_batch(&empty, 0).unwrap();
        assert!(out.is_empty());
        assert_eq!(out.n_tasks(), 1);
    }

    #[test]
    fn batch_on_pool_keeps_within_group_ranks() {
        let p = preds(&[0, 1, 0, 1, 0, 1, 0], &[5.0, 1.0, -2.0, 8.0, 0.5, 3.0, 7.0]);
        let cal = fit_calibrator(&p, &[TaskKind::Regression], JitterConfig::none()).unwrap();
        let out = cal.transform_batch(&p, 4).unwrap();
        for i in 0..p.len() {
            for j in 0..p.len() {
                if p.groups()[i] == p.groups()[j] && p.column(0)[i] < p.column(0)[j] {
                    assert!(out.column(0)[i] <= out.column(0)[j]);
                }
            }
        }
    }

    #[test]
    fn batch_is_deterministic_and_reduces_ks() {
        let n = 400;
        let groups: Vec<GroupLabel> = (0..n).map(|i| GroupLabel((i % 2) as i64)).collect();
        let values: Vec<f64> = (0..n)
            .map(|i| (i as f64 * 0.618).fract() + if i % 2 == 0 { 0.0 } else { 0.4 })
            .collect();
        let p = Predictions::new(groups.clone(), vec![values.clone()]).unwrap();
        let cal = fit_calibrator(&p, &[TaskKind::Regression], JitterConfig::new(0.001, 5).unwrap())
            .unwrap();
        let a = cal.transform_batch(&p, 9).unwrap();
        let b = cal.transform_batch(&p, 9).unwrap();
        assert_eq!(a, b);
        let before = ks_unfairness(&values, &groups).unwrap();
        let after = ks_unfairness(a.column(0), &groups).unwrap();
        assert!(before > 0.3, "{before}");
        assert!(after < before);
        assert!(after <= 0.02, "{after}");
    }

    #[test]
    fn equal_group_sizes_give_zero_ks_on_pool() {
        let p = preds(&[0, 0, 0, 0, 1, 1, 1, 1], &[1.0, 4.0, 2.0, 9.0, 10.0, 30.0, 20.0, 15.0]);
        let cal = fit_calibrator(&p, &[TaskKind::Regression], JitterConfig::none()).unwrap();
        let out = cal.transform_batch(&p, 0).unwrap();
        assert_eq!(ks_unfairness(out.column(0), p.groups()).unwrap(), 0.0);
    }

    #[test]
    fn classify_boundary() {
        assert_eq!(classify(0.7, 0.5).unwrap(), 1);
        assert_eq!(classify(0.5, 0.5).unwrap(), 1);
        assert_eq!(classify(0.49, 0.5).unwrap(), 0);
        assert_eq!(classify(0.2, 1.5), Err(FairError::InvalidThreshold(1.5)));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let p = Predictions::new(
            vec![A, B, A, B, A, GroupLabel(-1), GroupLabel(-1)],
            vec![
                vec![0.1, 0.2, 1.0 / 3.0, 1e-300, -7.25, 2.0_f64.sqrt(), 0.0],
                vec![0.91, 0.02, 0.5, 0.49999999999999994, 0.1, 0.3, 0.7],
            ],
        )
        .unwrap();
        let cal = fit_calibrator(
            &p,
            &[TaskKind::Regression, TaskKind::BinaryScore],
            JitterConfig::new(0.001, 42).unwrap(),
        )
        .unwrap();
        let back = FairCalibrator::from_json(&cal.to_json()).unwrap();
        assert_eq!(back, cal);
        for t in 0..2 {
            for g in cal.group_weights().keys() {
                let x = cal.distribution(t, *g).unwrap().values();
                let y = back.distribution(t, *g).unwrap().values();
                assert!(x.iter().zip(y).all(|(a, b)| a.to_bits() == b.to_bits()));
            }
        }
    }

    #[test]
    fn json_rejects_wrong_version() {
        let mut doc = hand_calibrator().to_document();
        doc.version = 99;
        assert!(matches!(
            FairCalibrator::from_document(doc),
            Err(FairError::Format(_))
        ));
        assert!(FairCalibrator::from_json("{").is_err());
    }

    /// Labels in `0..3` where every group present has at least two members.
    fn grouped_sample() -> impl Strategy<Value = (Vec<i64>, Vec<f64>)> {
        (4usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(0i64..3, n).prop_map(|mut g| {
                    g[0] = 0;
                    g[1] = 0;
                    g[2] = 1;
                    g[3] = 1;
                    if g.iter().filter(|&&x| x == 2).count() == 1 {
                        g.iter_mut().filter(|x| **x == 2).for_each(|x| *x = 0);
                    }
                    g
                }),
                prop::collection::vec(-100.0f64..100.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn rank_preservation((groups, values) in grouped_sample(), probes in prop::collection::vec(-120.0f64..120.0, 2..20)) {
            let p = preds(&groups, &values);
            let cal = fit_calibrator(&p, &[TaskKind::Regression], JitterConfig::none()).unwrap();
            let mut sorted = probes.clone();
            sorted.sort_by(f64::total_cmp);
            for &g in cal.group_weights().keys() {
                let mapped: Vec<f64> = sorted.iter().map(|&v| cal.transform(0, v, g, 0.0).unwrap()).collect();
                prop_assert!(mapped.windows(2).all(|w| w[0] <= w[1]));
            }
        }

        #[test]
        fn scale_shift_equivariance((groups, values) in grouped_sample(), a in 0.1f64..10.0, b in -50.0f64..50.0) {
            let p = preds(&groups, &values);
            let scaled: Vec<f64> = values.iter().map(|&v| a * v + b).collect();
            let q = preds(&groups, &scaled);
            let cal = fit_calibrator(&p, &[TaskKind::Regression], JitterConfig::none()).unwrap();
            let cal_q = fit_calibrator(&q, &[TaskKind::Regression], JitterConfig::none()).unwrap();
            let out = cal.transform_batch(&p, 0).unwrap();
            let out_q = cal_q.transform_batch(&q, 0).unwrap();
            for (x, y) in out.column(0).iter().zip(out_q.column(0)) {
                let expect = a * x + b;
                prop_assert!((expect - y).abs() <= 1e-9 * (1.0 + expect.abs()));
            }
        }
    }
}
