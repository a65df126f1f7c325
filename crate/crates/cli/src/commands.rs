use std::collections::BTreeMap;
use std::path::Path;

use fairmtl_core::data::{load_csv, save_csv, split, synth_generate, Dataset, SplitSpec, SynthConfig, SPLIT_NAMES};
use fairmtl_core::distrib::{JitterConfig, DEFAULT_JITTER_HALF_WIDTH};
use fairmtl_core::metrics::{MetricsError, VariantReport};
use fairmtl_core::mtl::{MtlNetwork, NetworkDocument, TaskWeights};
use fairmtl_core::pipeline::{bootstrap_evaluate, fit_model, fit_pool_calibrator, ModelConfig};
use fairmtl_core::{GroupLabel, Predictions};
use serde::{Deserialize, Serialize};

use crate::{read_text, write_json, CliError};

pub const MODEL_FORMAT_VERSION: u32 = 1;

pub fn synth(cfg: &SynthConfig, out: &Path) -> Result<(), CliError> {
    let ds = synth_generate(cfg)?;
    save_csv(&ds, out)?;
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub split: SplitSpec,
    /// Network initialisation and SGD seed.
    pub seed: u64,
}

/// A trained network together with the weights chosen on validation data
/// and the split it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub task_names: Vec<String>,
    pub lambda: TaskWeights,
    pub split: SplitSpec,
    pub epoch_losses: Vec<f64>,
    pub network: NetworkDocument,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let model: ModelFile =
            serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(CliError::Input(format!(
                "{}: unsupported model version {}",
                path.display(),
                model.version
            )));
        }
        Ok(model)
    }

    pub fn network(&self) -> Result<MtlNetwork, CliError> {
        Ok(MtlNetwork::from_document(self.network.clone())?)
    }
}

/// Trains on the training split of `data` and picks `lambda` on its
/// validation split.
pub fn train(data: &Path, cfg: &TrainConfig, out: &Path) -> Result<ModelFile, CliError> {
    let ds = load_csv(data, None)?;
    let splits = split(&ds, &cfg.split)?;
    let fitted = fit_model(&splits.train, &splits.validation, &cfg.model, cfg.seed)?;
    let model = ModelFile {
        version: MODEL_FORMAT_VERSION,
        task_names: ds.tasks().iter().map(|c| c.name.clone()).collect(),
        lambda: fitted.lambda,
        split: cfg.split,
        epoch_losses: fitted.epoch_losses,
        network: fitted.network.to_document(),
    };
    write_json(out, &model)?;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FairifyConfig {
    /// Task weights to predict with; defaults to the ones stored in the model.
    pub lambda: Option<TaskWeights>,
    pub jitter_half_width: f64,
    /// Jitter seed.
    pub seed: u64,
}

impl Default for FairifyConfig {
    fn default() -> Self {
        Self {
            lambda: None,
            jitter_half_width: DEFAULT_JITTER_HALF_WIDTH,
            seed: 0,
        }
    }
}

fn check_tasks(model: &ModelFile, ds: &Dataset) -> Result<(), CliError> {
    let names: Vec<&str> = ds.tasks().iter().map(|c| c.name.as_str()).collect();
    if names != model.task_names {
        return Err(CliError::Input(format!(
            "data tasks {names:?} do not match model tasks {:?}",
            model.task_names
        )));
    }
    Ok(())
}

/// Base and fair predictions for every row of `data`. The calibrator is
/// fitted on the pool split recorded in the model, with labels dropped.
pub fn fairify(model_path: &Path, data: &Path, cfg: &FairifyConfig, out: &Path) -> Result<(), CliError> {
    let model = ModelFile::load(model_path)?;
    let net = model.network()?;
    let ds = load_csv(data, None)?;
    check_tasks(&model, &ds)?;
    let lambda = cfg.lambda.clone().unwrap_or_else(|| model.lambda.clone());
    let jitter = JitterConfig::new(cfg.jitter_half_width, cfg.seed)?;
    let splits = split(&ds, &model.split)?;
    let calibrator = fit_pool_calibrator(&net, &splits.pool, &lambda, jitter)?;
    let base = net.predict_dataset(&ds, &lambda)?;
    let fair = calibrator.transform_batch(&base, cfg.seed)?;
    let labels = splits.indices.labels(ds.len());

    let mut w = csv::Writer::from_path(out).map_err(|e| csv_error(out, e))?;
    let mut header = vec!["row".to_string(), "s".to_string(), "split".to_string()];
    for name in &model.task_names {
        header.push(format!("base_{name}"));
        header.push(format!("fair_{name}"));
    }
    w.write_record(&header).map_err(|e| csv_error(out, e))?;
    for (i, (group, label)) in ds.groups().iter().zip(&labels).enumerate() {
        let mut rec = vec![i.to_string(), group.to_string(), label.to_string()];
        for t in 0..model.task_names.len() {
            rec.push(base.column(t)[i].to_string());
            rec.push(fair.column(t)[i].to_string());
        }
        w.write_record(&rec).map_err(|e| csv_error(out, e))?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    Ok(())
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Bootstrap resamples per variant.
    pub replicates: usize,
    /// Only rows from this split are scored; `None` scores every row.
    pub split: Option<String>,
    pub seed: u64,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            replicates: 20,
            split: Some("test".into()),
            seed: 0,
        }
    }
}

/// Parsed output of [`fairify`].
struct PredictionTable {
    rows: Vec<usize>,
    groups: Vec<GroupLabel>,
    /// `(variant, task name, values)`.
    columns: Vec<(String, String, Vec<f64>)>,
}

fn read_predictions(path: &Path, split_filter: Option<&str>) -> Result<PredictionTable, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| csv_error(path, e))?.iter().map(str::to_string).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Input(format!("{}: missing column `{name}`", path.display())))
    };
    let (row_col, s_col, split_col) = (find("row")?, find("s")?, find("split")?);
    let mut columns: Vec<(usize, String, String, Vec<f64>)> = header
        .iter()
        .enumerate()
        .filter_map(|(j, h)| {
            let (variant, task) = h.split_once('_')?;
            matches!(variant, "base" | "fair").then(|| (j, variant.to_string(), task.to_string(), Vec::new()))
        })
        .collect();
    if columns.is_empty() {
        return Err(CliError::Input(format!("{}: no prediction columns", path.display())));
    }
    if let Some(name) = split_filter {
        if !SPLIT_NAMES.contains(&name) {
            return Err(CliError::Config(format!("unknown split `{name}`; expected one of {SPLIT_NAMES:?}")));
        }
    }
    let mut rows = Vec::new();
    let mut groups = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let bad = |col: &str| CliError::Input(format!("{}: record {}: bad `{col}` value", path.display(), line + 1));
        if split_filter.is_some_and(|f| rec.get(split_col) != Some(f)) {
            continue;
        }
        rows.push(rec.get(row_col).and_then(|v| v.parse().ok()).ok_or_else(|| bad("row"))?);
        groups.push(GroupLabel(rec.get(s_col).and_then(|v| v.parse().ok()).ok_or_else(|| bad("s"))?));
        for (j, _, task, values) in columns.iter_mut() {
            let v: f64 = rec.get(*j).and_then(|v| v.parse().ok()).ok_or_else(|| bad(task))?;
            values.push(v);
        }
    }
    Ok(PredictionTable {
        rows,
        groups,
        columns: columns.into_iter().map(|(_, v, t, vals)| (v, t, vals)).collect(),
    })
}

/// Bootstrap performance and unfairness of every prediction variant.
pub fn evaluate(predictions: &Path, labels: &Path, cfg: &EvaluateConfig, out: &Path) -> Result<VariantReport, CliError> {
    let table = read_predictions(predictions, cfg.split.as_deref())?;
    if table.rows.is_empty() {
        return Err(MetricsError::EmptyInput.into());
    }
    let ds = load_csv(labels, None)?;
    if let Some(&i) = table.rows.iter().find(|&&i| i >= ds.len()) {
        return Err(CliError::Input(format!("prediction row {i} is outside the label file")));
    }
    let subset = ds.subset(&table.rows);
    if subset.groups() != table.groups.as_slice() {
        return Err(CliError::Input("prediction groups disagree with the label file".into()));
    }
    let task_names: Vec<String> = ds.tasks().iter().map(|c| c.name.clone()).collect();

    let mut variants: BTreeMap<String, Vec<Option<Vec<f64>>>> = BTreeMap::new();
    for (variant, task, values) in &table.columns {
        let t = task_names
            .iter()
            .position(|n| n == task)
            .ok_or_else(|| CliError::Input(format!("no label column for task `{task}`")))?;
        variants.entry(variant.clone()).or_insert_with(|| vec![None; task_names.len()])[t] = Some(values.clone());
    }
    let mut report = VariantReport::new();
    for (variant, cols) in variants {
        let cols: Vec<Vec<f64>> = cols
            .into_iter()
            .enumerate()
            .map(|(t, c)| c.ok_or_else(|| CliError::Input(format!("variant `{variant}` lacks task `{}`", task_names[t]))))
            .collect::<Result<_, _>>()?;
        let preds = Predictions::new(table.groups.clone(), cols)?;
        report.insert(variant, bootstrap_evaluate(&preds, &subset, cfg.replicates, cfg.seed)?);
    }
    write_json(out, &report)?;
    Ok(report)
}
