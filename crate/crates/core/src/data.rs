//! Datasets, splits, label masking and the synthetic generator.
//!
//! # CSV layout
//!
//! Feature columns `x0..x{d-1}`, integer group column `s`, and label columns
//! `y1` (real) and `y2` (`0`/`1`). An empty label cell is a missing label.
//!
//! # Synthetic generator
//!
//! For each row, with group label `s` drawn from the configured proportions:
//!
//! ```text
//! x  ~ N(0, I_d)
//! u  = w . x + delta * s + noise * e,      e ~ N(0, 1), |w| = 1
//! y1 = u
//! y2 ~ Bernoulli(sigmoid(rho * u + (1 - rho) * v + log_odds_shift * s)),   v ~ N(0, 1)
//! ```
//!
//! `w` is drawn once per seed and normalized. The group label value itself
//! multiplies the shifts, so labels `{-1, 1}` separate the group means by
//! `2 * delta`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fairtransform::{GroupLabel, TaskKind};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing column `{0}`")]
    Schema(String),
    #[error("row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Shape(String),
    #[error("split `{split}` would contain no samples of group {group}")]
    Stratification { split: &'static str, group: GroupLabel },
    #[error("task index {index} out of range ({n_tasks} tasks)")]
    InvalidTask { index: usize, n_tasks: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Labels for one task with an explicit presence mask.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskColumn {
    pub name: String,
    pub kind: TaskKind,
    values: Vec<f64>,
    present: Vec<bool>,
}

impl TaskColumn {
    /// Missing entries may hold any value; it is replaced with `0.0`.
    pub fn new(name: impl Into<String>, kind: TaskKind, values: Vec<f64>, present: Vec<bool>) -> Result<Self, DataError> {
        let name = name.into();
        if values.len() != present.len() {
            return Err(DataError::Shape(format!(
                "task `{name}`: {} values but {} mask entries",
                values.len(),
                present.len()
            )));
        }
        let values: Vec<f64> = values
            .into_iter()
            .zip(&present)
            .map(|(v, &p)| if p { v } else { 0.0 })
            .collect();
        for (i, (&v, &p)) in values.iter().zip(&present).enumerate() {
            if !p {
                continue;
            }
            let ok = match kind {
                TaskKind::Regression => v.is_finite(),
                TaskKind::BinaryScore => v == 0.0 || v == 1.0,
            };
            if !ok {
                return Err(DataError::Parse {
                    row: i,
                    column: name,
                    message: format!("invalid {kind:?} label {v}"),
                });
            }
        }
        Ok(Self {
            name,
            kind,
            values,
            present,
        })
    }

    pub fn fully_present(name: impl Into<String>, kind: TaskKind, values: Vec<f64>) -> Result<Self, DataError> {
        let present = vec![true; values.len()];
        Self::new(name, kind, values, present)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn present(&self) -> &[bool] {
        &self.present
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.present[i].then_some(self.values[i])
    }

    pub fn n_present(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    fn subset(&self, idx: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            kind: self.kind,
            values: idx.iter().map(|&i| self.values[i]).collect(),
            present: idx.iter().map(|&i| self.present[i]).collect(),
        }
    }
}

/// Features, sensitive group and task labels, row-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_features: usize,
    features: Vec<f64>,
    groups: Vec<GroupLabel>,
    tasks: Vec<TaskColumn>,
}

impl Dataset {
    /// `features` is row-major with `n_features` columns.
    pub fn new(
        n_features: usize,
        features: Vec<f64>,
        groups: Vec<GroupLabel>,
        tasks: Vec<TaskColumn>,
    ) -> Result<Self, DataError> {
        let n = groups.len();
        if features.len() != n * n_features {
            return Err(DataError::Shape(format!(
                "{} feature values for {n} rows of width {n_features}",
                features.len()
            )));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(DataError::Parse {
                row: i / n_features.max(1),
                column: format!("x{}", i % n_features.max(1)),
                message: "non-finite feature".into(),
            });
        }
        if let Some(t) = tasks.iter().find(|t| t.values.len() != n) {
            return Err(DataError::Shape(format!(
                "task `{}` has {} rows, expected {n}",
                t.name,
                t.values.len()
            )));
        }
        let ds = Self {
            n_features,
            features,
            groups,
            tasks,
        };
        if n > 0 && ds.group_set().len() < 2 {
            return Err(DataError::InvalidConfig(
                "dataset needs at least two groups".into(),
            ));
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn groups(&self) -> &[GroupLabel] {
        &self.groups
    }

    pub fn group_set(&self) -> BTreeSet<GroupLabel> {
        self.groups.iter().copied().collect()
    }

    pub fn tasks(&self) -> &[TaskColumn] {
        &self.tasks
    }

    pub fn task(&self, t: usize) -> &TaskColumn {
        &self.tasks[t]
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn task_kinds(&self) -> Vec<TaskKind> {
        self.tasks.iter().map(|t| t.kind).collect()
    }

    /// Rows `idx`, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut features = Vec::with_capacity(idx.len() * self.n_features);
        for &i in idx {
            features.extend_from_slice(self.row(i));
        }
        Self {
            n_features: self.n_features,
            features,
            groups: idx.iter().map(|&i| self.groups[i]).collect(),
            tasks: self.tasks.iter().map(|t| t.subset(idx)).collect(),
        }
    }

    /// Keeps only the listed tasks, e.g. `&[0]` for a single-task view.
    pub fn select_tasks(&self, tasks: &[usize]) -> Result<Self, DataError> {
        let mut out = Vec::with_capacity(tasks.len());
        for &t in tasks {
            let col = self.tasks.get(t).ok_or(DataError::InvalidTask {
                index: t,
                n_tasks: self.tasks.len(),
            })?;
            out.push(col.clone());
        }
        Ok(Self {
            tasks: out,
            ..self.clone()
        })
    }

    /// Features and groups only.
    pub fn unlabeled(&self) -> PoolSet {
        PoolSet {
            n_features: self.n_features,
            features: self.features.clone(),
            groups: self.groups.clone(),
        }
    }
}

/// Unlabeled rows reserved for fitting the fairness calibrator.
///
/// Kept as a separate type so it cannot be handed to the trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolSet {
    n_features: usize,
    features: Vec<f64>,
    groups: Vec<GroupLabel>,
}

impl PoolSet {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn groups(&self) -> &[GroupLabel] {
        &self.groups
    }
}

// ---------------------------------------------------------------------------
// CSV

/// Column names for [`load_csv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub features: Vec<String>,
    pub group: String,
    pub tasks: Vec<(String, TaskKind)>,
}

impl CsvSchema {
    /// `x0..x{d-1}`, `s`, `y1` (regression), `y2` (binary).
    pub fn standard(d: usize) -> Self {
        Self {
            features: (0..d).map(|i| format!("x{i}")).collect(),
            group: "s".into(),
            tasks: vec![
                ("y1".into(), TaskKind::Regression),
                ("y2".into(), TaskKind::BinaryScore),
            ],
        }
    }

    /// Standard layout with `d` taken from the `x*` columns present in the
    /// header. Label columns that are absent are dropped.
    pub fn infer(header: &[String]) -> Self {
        let mut d = 0;
        while header.iter().any(|h| *h == format!("x{d}")) {
            d += 1;
        }
        let mut schema = Self::standard(d);
        schema.tasks.retain(|(name, _)| header.contains(name));
        schema
    }
}

fn column_index(header: &[String], name: &str) -> Result<usize, DataError> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| DataError::Schema(name.to_string()))
}

/// Reads a dataset; `schema = None` infers the standard layout.
pub fn read_csv<R: Read>(reader: R, schema: Option<&CsvSchema>) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let inferred;
    let schema = match schema {
        Some(s) => s,
        None => {
            inferred = CsvSchema::infer(&header);
            &inferred
        }
    };
    let feat_idx = schema
        .features
        .iter()
        .map(|c| column_index(&header, c))
        .collect::<Result<Vec<_>, _>>()?;
    let group_idx = column_index(&header, &schema.group)?;
    let task_idx = schema
        .tasks
        .iter()
        .map(|(c, _)| column_index(&header, c))
        .collect::<Result<Vec<_>, _>>()?;

    let d = feat_idx.len();
    let mut features = Vec::new();
    let mut groups = Vec::new();
    let mut labels: Vec<(Vec<f64>, Vec<bool>)> = vec![(Vec::new(), Vec::new()); task_idx.len()];
    let parse_err = |row: usize, column: &str, message: String| DataError::Parse {
        row,
        column: column.to_string(),
        message,
    };

    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (&ci, name) in feat_idx.iter().zip(&schema.features) {
            let cell = rec.get(ci).unwrap_or("");
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(row, name, format!("`{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(row, name, format!("`{cell}` is not finite")));
            }
            features.push(v);
        }
        let cell = rec.get(group_idx).unwrap_or("");
        let g: i64 = cell
            .parse()
            .map_err(|_| parse_err(row, &schema.group, format!("`{cell}` is not an integer group")))?;
        groups.push(GroupLabel(g));
        for (k, (&ci, (name, _))) in task_idx.iter().zip(&schema.tasks).enumerate() {
            let cell = rec.get(ci).unwrap_or("");
            if cell.is_empty() {
                labels[k].0.push(0.0);
                labels[k].1.push(false);
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| parse_err(row, name, format!("`{cell}` is not a number")))?;
                labels[k].0.push(v);
                labels[k].1.push(true);
            }
        }
    }

    let tasks = schema
        .tasks
        .iter()
        .zip(labels)
        .map(|((name, kind), (values, present))| TaskColumn::new(name.clone(), *kind, values, present))
        .collect::<Result<Vec<_>, _>>()?;
    Dataset::new(d, features, groups, tasks)
}

pub fn load_csv(path: impl AsRef<Path>, schema: Option<&CsvSchema>) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file), schema)
}

/// Writes the standard layout. Task columns keep their own names.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..ds.n_features()).map(|i| format!("x{i}")).collect();
    header.push("s".into());
    header.extend(ds.tasks().iter().map(|t| t.name.clone()));
    w.write_record(&header)?;
    let mut rec: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..ds.len() {
        rec.clear();
        rec.extend(ds.row(i).iter().map(|v| v.to_string()));
        rec.push(ds.groups()[i].to_string());
        for t in ds.tasks() {
            rec.push(match (t.get(i), t.kind) {
                (None, _) => String::new(),
                (Some(v), TaskKind::BinaryScore) => format!("{}", v as u8),
                (Some(v), TaskKind::Regression) => v.to_string(),
            });
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let file = std::fs::File::create(path)?;
    write_csv(ds, std::io::BufWriter::new(file))
}

// ---------------------------------------------------------------------------
// Splitting

/// Train / pool / validation / test fractions.
///
/// The default holds out 20% for testing and divides the rest in half
/// between labelled rows (train plus validation) and the unlabeled pool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub train: f64,
    pub pool: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.3,
            pool: 0.4,
            validation: 0.1,
            test: 0.2,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn fractions(&self) -> [f64; 4] {
        [self.train, self.pool, self.validation, self.test]
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let f = self.fractions();
        if f.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(DataError::InvalidConfig(format!("split fractions must be >= 0: {f:?}")));
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(DataError::InvalidConfig(format!("split fractions sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

pub const SPLIT_NAMES: [&str; 4] = ["train", "pool", "validation", "test"];

/// Row indices of each split, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub pool: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    pub fn parts(&self) -> [&[usize]; 4] {
        [&self.train, &self.pool, &self.validation, &self.test]
    }

    /// Split name per row.
    pub fn labels(&self, n: usize) -> Vec<&'static str> {
        let mut out = vec![""; n];
        for (name, part) in SPLIT_NAMES.iter().zip(self.parts()) {
            for &i in part {
                out[i] = name;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Dataset,
    pub pool: PoolSet,
    pub validation: Dataset,
    pub test: Dataset,
    pub indices: SplitIndices,
}

/// Largest-remainder allocation of `n` items over `fractions`.
fn allocate(n: usize, fractions: &[f64; 4]) -> [usize; 4] {
    let mut counts = [0usize; 4];
    let mut rema = [(0.0f64, 0usize); 4];
    for (k, &f) in fractions.iter().enumerate() {
        let exact = f * n as f64;
        counts[k] = exact.floor() as usize;
        rema[k] = (exact - exact.floor(), k);
    }
    let mut left = n - counts.iter().sum::<usize>().min(n);
    rema.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, k) in rema.iter().cycle() {
        if left == 0 {
            break;
        }
        if fractions[k] > 0.0 {
            counts[k] += 1;
            left -= 1;
        }
    }
    counts
}

/// Group-stratified random partition of row indices.
pub fn split_indices(groups: &[GroupLabel], spec: &SplitSpec) -> Result<SplitIndices, DataError> {
    spec.validate()?;
    let fractions = spec.fractions();
    let mut members: BTreeMap<GroupLabel, Vec<usize>> = BTreeMap::new();
    for (i, &g) in groups.iter().enumerate() {
        members.entry(g).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut parts: [Vec<usize>; 4] = Default::default();
    let mut per_group_counts = Vec::new();
    for (&g, idx) in members.iter_mut() {
        idx.shuffle(&mut rng);
        let counts = allocate(idx.len(), &fractions);
        let mut start = 0;
        for (k, &c) in counts.iter().enumerate() {
            parts[k].extend_from_slice(&idx[start..start + c]);
            start += c;
        }
        per_group_counts.push((g, counts));
    }
    for (k, part) in parts.iter().enumerate() {
        if part.is_empty() {
            continue;
        }
        if let Some((g, _)) = per_group_counts.iter().find(|(_, c)| c[k] == 0) {
            return Err(DataError::Stratification {
                split: SPLIT_NAMES[k],
                group: *g,
            });
        }
    }
    for p in parts.iter_mut() {
        p.sort_unstable();
    }
    let [train, pool, validation, test] = parts;
    Ok(SplitIndices {
        train,
        pool,
        validation,
        test,
    })
}

pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<Splits, DataError> {
    let indices = split_indices(ds.groups(), spec)?;
    Ok(Splits {
        train: ds.subset(&indices.train),
        pool: ds.subset(&indices.pool).unlabeled(),
        validation: ds.subset(&indices.validation),
        test: ds.subset(&indices.test),
        indices,
    })
}

// ---------------------------------------------------------------------------
// Masking

/// Hides `floor(fraction * n_present)` present labels of `task`, chosen
/// uniformly at random.
pub fn mask_labels(ds: &Dataset, task: usize, fraction: f64, seed: u64) -> Result<Dataset, DataError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(DataError::InvalidConfig(format!(
            "mask fraction {fraction} is outside [0, 1]"
        )));
    }
    if task >= ds.n_tasks() {
        return Err(DataError::InvalidTask {
            index: task,
            n_tasks: ds.n_tasks(),
        });
    }
    let present: Vec<usize> = (0..ds.len()).filter(|&i| ds.tasks[task].present[i]).collect();
    // tolerate representation error such as 0.95 * 20 = 18.999...
    let k = ((fraction * present.len() as f64 + 1e-9).floor() as usize).min(present.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ds.clone();
    for j in index::sample(&mut rng, present.len(), k) {
        let i = present[j];
        out.tasks[task].present[i] = false;
        out.tasks[task].values[i] = 0.0;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Synthetic data

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub label: i64,
    pub proportion: f64,
}

/// Parameters of the synthetic generator described in the module docs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n: usize,
    pub d: usize,
    pub groups: Vec<GroupSpec>,
    /// Mean shift of the regression signal per unit of group label.
    pub delta: f64,
    /// Log-odds shift of the classification signal per unit of group label.
    pub log_odds_shift: f64,
    /// Weight of the shared latent in the classification logit.
    pub rho: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 5000,
            d: 10,
            groups: vec![
                GroupSpec {
                    label: -1,
                    proportion: 0.4,
                },
                GroupSpec {
                    label: 1,
                    proportion: 0.6,
                },
            ],
            delta: 1.0,
            log_odds_shift: 0.5,
            rho: 0.8,
            noise: 1.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: String| Err(DataError::InvalidConfig(m));
        if self.d == 0 {
            return bad("d must be >= 1".into());
        }
        if self.groups.len() < 2 {
            return bad("need at least two groups".into());
        }
        let labels: BTreeSet<i64> = self.groups.iter().map(|g| g.label).collect();
        if labels.len() != self.groups.len() {
            return bad("group labels must be distinct".into());
        }
        if self.groups.iter().any(|g| g.proportion.is_nan() || g.proportion <= 0.0) {
            return bad("group proportions must be > 0".into());
        }
        let sum: f64 = self.groups.iter().map(|g| g.proportion).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("group proportions sum to {sum}, expected 1"));
        }
        if !(self.noise > 0.0 && self.noise.is_finite()) {
            return bad(format!("noise scale must be > 0, got {}", self.noise));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1], got {}", self.rho));
        }
        if !self.delta.is_finite() || !self.log_odds_shift.is_finite() {
            return bad("shifts must be finite".into());
        }
        Ok(())
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn synth_generate(cfg: &SynthConfig) -> Result<Dataset, DataError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w: Vec<f64> = (0..cfg.d).map(|_| rng.sample(StandardNormal)).collect();
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    w.iter_mut().for_each(|x| *x /= norm);

    let mut cumulative = Vec::with_capacity(cfg.groups.len());
    let mut acc = 0.0;
    for g in &cfg.groups {
        acc += g.proportion;
        cumulative.push(acc);
    }

    let mut features = Vec::with_capacity(cfg.n * cfg.d);
    let mut groups = Vec::with_capacity(cfg.n);
    let mut y1 = Vec::with_capacity(cfg.n);
    let mut y2 = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let r: f64 = rng.random();
        let k = cumulative.iter().position(|&c| r < c).unwrap_or(cfg.groups.len() - 1);
        let s = cfg.groups[k].label;
        let mut signal = 0.0;
        for wj in &w {
            let x: f64 = rng.sample(StandardNormal);
            features.push(x);
            signal += wj * x;
        }
        let e: f64 = rng.sample(StandardNormal);
        let v: f64 = rng.sample(StandardNormal);
        let u = signal + cfg.delta * s as f64 + cfg.noise * e;
        let p = sigmoid(cfg.rho * u + (1.0 - cfg.rho) * v + cfg.log_odds_shift * s as f64);
        let label = Bernoulli::new(p).expect("p in [0, 1]").sample(&mut rng);
        groups.push(GroupLabel(s));
        y1.push(u);
        y2.push(if label { 1.0 } else { 0.0 });
    }
    Dataset::new(
        cfg.d,
        features,
        groups,
        vec![
            TaskColumn::fully_present("y1", TaskKind::Regression, y1)?,
            TaskColumn::fully_present("y2", TaskKind::BinaryScore, y2)?,
        ],
    )
}
