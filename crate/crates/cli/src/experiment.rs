//! Missing-label protocol: for each fraction of hidden regression labels,
//! compare one multi-task network against one single-task network per task,
//! before and after fairness calibration, over independent replications.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use fairmtl_core::data::{mask_labels, split, synth_generate, Dataset, SplitSpec, Splits, SynthConfig};
use fairmtl_core::distrib::{JitterConfig, DEFAULT_JITTER_HALF_WIDTH};
use fairmtl_core::metrics::{TaskMetrics, TaskSummary};
use fairmtl_core::mtl::LambdaObjective;
use fairmtl_core::pipeline::{evaluate_predictions, fit_model, fit_pool_calibrator, ModelConfig, PipelineError};
use fairmtl_core::TaskKind;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{write_json, write_text, CliError};

pub const LEARNERS: [&str; 2] = ["mtl", "stl"];
pub const REGIMES: [&str; 2] = ["raw", "post"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub synth: SynthConfig,
    pub model: ModelConfig,
    pub split: SplitSpec,
    /// Fractions of training labels hidden for `masked_task`.
    pub fractions: Vec<f64>,
    pub masked_task: usize,
    pub replications: usize,
    pub jitter_half_width: f64,
    /// Master seed; every replication derives its own seeds from it.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            synth: SynthConfig::default(),
            model: ModelConfig::default(),
            split: SplitSpec::default(),
            fractions: vec![0.0, 0.25, 0.5, 0.75, 0.95],
            masked_task: 0,
            replications: 5,
            jitter_half_width: DEFAULT_JITTER_HALF_WIDTH,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.replications == 0 {
            return Err(CliError::Config("replications must be >= 1".into()));
        }
        if self.fractions.is_empty() {
            return Err(CliError::Config("no label fractions given".into()));
        }
        if let Some(f) = self.fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(CliError::Config(format!("fraction {f} is outside [0, 1]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub fraction: f64,
    pub learner: String,
    pub regime: String,
    pub tasks: BTreeMap<String, TaskSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub replications: usize,
    pub cells: Vec<Cell>,
}

impl ExperimentReport {
    pub fn cell(&self, fraction: f64, learner: &str, regime: &str) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.fraction == fraction && c.learner == learner && c.regime == regime)
    }

    /// Plain-text rendering, one line per cell.
    pub fn table(&self) -> String {
        let tasks: Vec<&String> = self.cells.first().map(|c| c.tasks.keys().collect()).unwrap_or_default();
        let mut out = format!("{:>8}  {:<5} {:<4}", "missing", "model", "");
        for t in &tasks {
            let _ = write!(out, "  {:>16}  {:>16}", format!("{t} perf"), format!("{t} unfair"));
        }
        out.push('\n');
        for c in &self.cells {
            let _ = write!(out, "{:>7.0}%  {:<5} {:<4}", c.fraction * 100.0, c.learner, c.regime);
            for t in &tasks {
                let s = &c.tasks[*t];
                let _ = write!(out, "  {:>16}  {:>16}", s.performance.to_string(), s.unfairness.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// One replication: raw and post-processed test metrics per learner.
type Replication = BTreeMap<(String, String), BTreeMap<String, TaskMetrics>>;

fn learner_metrics(
    train: &Dataset,
    splits: &Splits,
    tasks: &[usize],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<[BTreeMap<String, TaskMetrics>; 2], PipelineError> {
    let train = train.select_tasks(tasks)?;
    let validation = splits.validation.select_tasks(tasks)?;
    let test = splits.test.select_tasks(tasks)?;
    let mut model = cfg.model.clone();
    if !train.task_kinds().contains(&TaskKind::Regression) {
        // a score-only learner tunes its weight on its own task
        model.objective = LambdaObjective::BothTasks;
    }
    let fitted = fit_model(&train, &validation, &model, seed)?;
    let jitter = JitterConfig::new(cfg.jitter_half_width, seed)?;
    let calibrator = fit_pool_calibrator(&fitted.network, &splits.pool, &fitted.lambda, jitter)?;
    let raw = fitted.network.predict_dataset(&test, &fitted.lambda)?;
    let post = calibrator.transform_batch(&raw, seed)?;
    Ok([evaluate_predictions(&raw, &test)?, evaluate_predictions(&post, &test)?])
}

fn replicate(cfg: &ExperimentConfig, fraction: f64, seed: u64) -> Result<Replication, PipelineError> {
    let ds = synth_generate(&SynthConfig {
        seed,
        ..cfg.synth.clone()
    })?;
    let splits = split(&ds, &SplitSpec { seed, ..cfg.split })?;
    let train = mask_labels(&splits.train, cfg.masked_task, fraction, seed)?;
    let all: Vec<usize> = (0..ds.n_tasks()).collect();

    let mut out = Replication::new();
    let mut record = |learner: &str, metrics: [BTreeMap<String, TaskMetrics>; 2]| {
        for (regime, m) in REGIMES.iter().zip(metrics) {
            out.entry((learner.to_string(), regime.to_string())).or_default().extend(m);
        }
    };
    record("mtl", learner_metrics(&train, &splits, &all, cfg, seed)?);
    for &t in &all {
        record("stl", learner_metrics(&train, &splits, &[t], cfg, seed)?);
    }
    Ok(out)
}

/// Replication seeds drawn from the master seed.
fn replication_seeds(master: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..n).map(|_| rng.next_u64()).collect()
}

/// Runs the full grid. Replications run in parallel; results are gathered
/// in a fixed order so the report does not depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, CliError> {
    cfg.validate()?;
    let seeds = replication_seeds(cfg.seed, cfg.replications);
    let jobs: Vec<(f64, u64)> = cfg
        .fractions
        .iter()
        .flat_map(|&f| seeds.iter().map(move |&s| (f, s)))
        .collect();
    let results: Vec<Replication> = jobs
        .par_iter()
        .map(|&(f, s)| replicate(cfg, f, s))
        .collect::<Result<_, _>>()?;

    let mut cells = Vec::new();
    for (k, &fraction) in cfg.fractions.iter().enumerate() {
        let reps = &results[k * cfg.replications..(k + 1) * cfg.replications];
        for learner in LEARNERS {
            for regime in REGIMES {
                let key = (learner.to_string(), regime.to_string());
                let mut per_task: BTreeMap<String, Vec<TaskMetrics>> = BTreeMap::new();
                for rep in reps {
                    for (task, m) in &rep[&key] {
                        per_task.entry(task.clone()).or_default().push(*m);
                    }
                }
                cells.push(Cell {
                    fraction,
                    learner: learner.into(),
                    regime: regime.into(),
                    tasks: per_task.iter().map(|(t, ms)| (t.clone(), TaskSummary::from_runs(ms))).collect(),
                });
            }
        }
    }
    Ok(ExperimentReport {
        replications: cfg.replications,
        cells,
    })
}

/// Writes `report.json` and `report.txt` into `dir`.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write_json(&dir.join("report.json"), report)?;
    write_text(&dir.join("report.txt"), &report.table())
}
