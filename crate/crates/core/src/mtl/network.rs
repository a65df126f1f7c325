use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{MtlError, TaskWeights};
use crate::data::{Dataset, PoolSet};
use crate::fairtransform::{GroupLabel, Predictions, TaskKind};

/// Per-layer FiLM scale and shift.
pub type Modulation = (Vec<f64>, Vec<f64>);

pub const NETWORK_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation `x` and output `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Linear,
    Sigmoid,
}

impl OutputActivation {
    pub fn for_task(kind: TaskKind) -> Self {
        match kind {
            TaskKind::Regression => OutputActivation::Linear,
            TaskKind::BinaryScore => OutputActivation::Sigmoid,
        }
    }
}

/// Per-task training loss. Squared loss is the default for both task kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    Squared,
    /// Binary cross-entropy; only valid on sigmoid heads.
    CrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadConfig {
    pub kind: TaskKind,
    pub output: OutputActivation,
    #[serde(default)]
    pub loss: LossKind,
}

impl HeadConfig {
    pub fn for_task(kind: TaskKind) -> Self {
        Self {
            kind,
            output: OutputActivation::for_task(kind),
            loss: LossKind::Squared,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Number of non-sensitive features.
    pub n_features: usize,
    /// Groups in one-hot order; appended to the features.
    pub groups: Vec<GroupLabel>,
    pub hidden: Vec<usize>,
    /// Width of the shared representation.
    pub repr_dim: usize,
    pub heads: Vec<HeadConfig>,
    #[serde(default)]
    pub activation: Activation,
    /// `lambda` value at which the FiLM inputs `log(lambda / center)` vanish.
    #[serde(default = "default_center")]
    pub lambda_center: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_center() -> f64 {
    1.0
}

impl NetworkConfig {
    pub fn input_dim(&self) -> usize {
        self.n_features + self.groups.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.heads.len()
    }

    /// Widths of the trunk layers, ending with the representation.
    pub fn trunk_widths(&self) -> Vec<usize> {
        let mut w = self.hidden.clone();
        w.push(self.repr_dim);
        w
    }

    pub fn validate(&self) -> Result<(), MtlError> {
        let bad = |m: String| Err(MtlError::InvalidConfig(m));
        if self.input_dim() == 0 {
            return bad("input dimension is zero".into());
        }
        if self.repr_dim == 0 || self.hidden.contains(&0) {
            return bad("layer sizes must be >= 1".into());
        }
        if self.heads.is_empty() {
            return bad("at least one task head is required".into());
        }
        let mut seen = self.groups.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.groups.len() {
            return bad("group encoding lists a group twice".into());
        }
        for (t, h) in self.heads.iter().enumerate() {
            if h.output != OutputActivation::for_task(h.kind) {
                return bad(format!(
                    "head {t}: {:?} task needs {:?} output, got {:?}",
                    h.kind,
                    OutputActivation::for_task(h.kind),
                    h.output
                ));
            }
            if h.loss == LossKind::CrossEntropy && h.output != OutputActivation::Sigmoid {
                return bad(format!("head {t}: cross-entropy needs a sigmoid output"));
            }
        }
        if !(self.lambda_center.is_finite() && self.lambda_center > 0.0) {
            return bad(format!("lambda_center must be > 0, got {}", self.lambda_center));
        }
        Ok(())
    }
}

/// Affine layer, `weights` row-major `out x inp`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inp: usize,
    pub out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inp: usize, out: usize) -> Self {
        Self {
            inp,
            out,
            weights: vec![0.0; inp * out],
            bias: vec![0.0; out],
        }
    }

    fn glorot(inp: usize, out: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (inp + out) as f64).sqrt();
        let mut d = Self::zeros(inp, out);
        d.weights
            .iter_mut()
            .for_each(|w| *w = rng.random_range(-limit..limit));
        d
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (o, yo) in y.iter_mut().enumerate() {
            let row = &self.weights[o * self.inp..(o + 1) * self.inp];
            *yo = self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }
}

/// FiLM generator for one trunk layer:
/// `gamma = gamma_bias + gamma_weights . l`, `beta = beta_bias + beta_weights . l`
/// with `l = log(lambda) - log(center)`. Weight matrices are `out x n_tasks`.
#[derive(Debug, Clone, PartialEq)]
pub struct Film {
    pub n_tasks: usize,
    pub out: usize,
    pub gamma_weights: Vec<f64>,
    pub gamma_bias: Vec<f64>,
    pub beta_weights: Vec<f64>,
    pub beta_bias: Vec<f64>,
}

impl Film {
    fn zeros(n_tasks: usize, out: usize) -> Self {
        Self {
            n_tasks,
            out,
            gamma_weights: vec![0.0; out * n_tasks],
            gamma_bias: vec![0.0; out],
            beta_weights: vec![0.0; out * n_tasks],
            beta_bias: vec![0.0; out],
        }
    }

    /// gamma = 1, beta = 0 for every lambda.
    fn neutral(n_tasks: usize, out: usize) -> Self {
        let mut f = Self::zeros(n_tasks, out);
        f.gamma_bias.iter_mut().for_each(|g| *g = 1.0);
        f
    }

    /// `(gamma, beta)` for the centred log-weights `l`.
    pub fn modulation(&self, l: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let t = self.n_tasks;
        let gamma = (0..self.out)
            .map(|o| {
                self.gamma_bias[o]
                    + self.gamma_weights[o * t..(o + 1) * t].iter().zip(l).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect();
        let beta = (0..self.out)
            .map(|o| {
                self.beta_bias[o]
                    + self.beta_weights[o * t..(o + 1) * t].iter().zip(l).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect();
        (gamma, beta)
    }
}

/// All trainable parameters. Gradients use the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub trunk: Vec<Dense>,
    pub film: Vec<Film>,
    pub heads: Vec<Dense>,
}

impl Params {
    fn zeros_like(other: &Params) -> Self {
        Self {
            trunk: other.trunk.iter().map(|d| Dense::zeros(d.inp, d.out)).collect(),
            film: other.film.iter().map(|f| Film::zeros(f.n_tasks, f.out)).collect(),
            heads: other.heads.iter().map(|d| Dense::zeros(d.inp, d.out)).collect(),
        }
    }

    /// Named flat parameter blocks in a fixed order.
    pub fn blocks(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = Vec::new();
        for (l, (d, f)) in self.trunk.iter().zip(&self.film).enumerate() {
            out.push((format!("trunk.{l}.weight"), &d.weights));
            out.push((format!("trunk.{l}.bias"), &d.bias));
            out.push((format!("film.{l}.gamma_weight"), &f.gamma_weights));
            out.push((format!("film.{l}.gamma_bias"), &f.gamma_bias));
            out.push((format!("film.{l}.beta_weight"), &f.beta_weights));
            out.push((format!("film.{l}.beta_bias"), &f.beta_bias));
        }
        for (t, h) in self.heads.iter().enumerate() {
            out.push((format!("head.{t}.weight"), &h.weights));
            out.push((format!("head.{t}.bias"), &h.bias));
        }
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out: Vec<(String, &mut [f64])> = Vec::new();
        for (l, (d, f)) in self.trunk.iter_mut().zip(self.film.iter_mut()).enumerate() {
            out.push((format!("trunk.{l}.weight"), &mut d.weights));
            out.push((format!("trunk.{l}.bias"), &mut d.bias));
            out.push((format!("film.{l}.gamma_weight"), &mut f.gamma_weights));
            out.push((format!("film.{l}.gamma_bias"), &mut f.gamma_bias));
            out.push((format!("film.{l}.beta_weight"), &mut f.beta_weights));
            out.push((format!("film.{l}.beta_bias"), &mut f.beta_bias));
        }
        for (t, h) in self.heads.iter_mut().enumerate() {
            out.push((format!("head.{t}.weight"), &mut h.weights));
            out.push((format!("head.{t}.bias"), &mut h.bias));
        }
        out
    }

    pub(crate) fn axpy(&mut self, alpha: f64, other: &Params) {
        for ((_, dst), (_, src)) in self.blocks_mut().into_iter().zip(other.blocks()) {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += alpha * s);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.blocks().iter().all(|(_, b)| b.iter().all(|v| v.is_finite()))
    }
}

/// Encoded inputs and labels for a set of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub n: usize,
    pub input_dim: usize,
    pub n_tasks: usize,
    /// `n x input_dim`, features followed by the group one-hot.
    pub inputs: Vec<f64>,
    /// `n x n_tasks`; masked entries hold `0.0`.
    pub labels: Vec<f64>,
    pub mask: Vec<bool>,
}

impl Batch {
    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }
}

/// Values kept from the forward pass for backpropagation.
struct Trace {
    /// `acts[0]` is the input, `acts[l + 1]` the output of trunk layer `l`.
    acts: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    modulated: Vec<Vec<f64>>,
    logits: Vec<f64>,
    outputs: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtlNetwork {
    config: NetworkConfig,
    pub params: Params,
    /// Sampling range of lambda used in training, if trained.
    trained_bounds: Option<(f64, f64)>,
}

impl MtlNetwork {
    /// Glorot-uniform weights, zero biases, neutral FiLM generators.
    pub fn init(config: NetworkConfig) -> Result<Self, MtlError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let t = config.n_tasks();
        let mut trunk = Vec::new();
        let mut film = Vec::new();
        let mut width = config.input_dim();
        for out in config.trunk_widths() {
            trunk.push(Dense::glorot(width, out, &mut rng));
            film.push(Film::neutral(t, out));
            width = out;
        }
        let heads = (0..t).map(|_| Dense::glorot(width, 1, &mut rng)).collect();
        Ok(Self {
            config,
            params: Params { trunk, film, heads },
            trained_bounds: None,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn n_tasks(&self) -> usize {
        self.config.n_tasks()
    }

    pub fn task_kinds(&self) -> Vec<TaskKind> {
        self.config.heads.iter().map(|h| h.kind).collect()
    }

    pub fn trained_bounds(&self) -> Option<(f64, f64)> {
        self.trained_bounds
    }

    pub(crate) fn set_trained_bounds(&mut self, bounds: (f64, f64)) {
        self.trained_bounds = Some(bounds);
    }

    fn check_weights(&self, lambda: &TaskWeights) -> Result<(), MtlError> {
        if lambda.len() != self.n_tasks() {
            return Err(MtlError::Shape(format!(
                "{} task weights for {} heads",
                lambda.len(),
                self.n_tasks()
            )));
        }
        Ok(())
    }

    fn film_input(&self, lambda: &TaskWeights) -> Vec<f64> {
        let c = self.config.lambda_center.ln();
        lambda.as_slice().iter().map(|l| l.ln() - c).collect()
    }

    /// FiLM `(gamma, beta)` per trunk layer at `lambda`.
    pub fn modulations(&self, lambda: &TaskWeights) -> Result<Vec<Modulation>, MtlError> {
        self.check_weights(lambda)?;
        let l = self.film_input(lambda);
        Ok(self.params.film.iter().map(|f| f.modulation(&l)).collect())
    }

    /// Features followed by the one-hot group code.
    pub fn encode_input(&self, x: &[f64], group: GroupLabel, out: &mut Vec<f64>) -> Result<(), MtlError> {
        if x.len() != self.config.n_features {
            return Err(MtlError::Shape(format!(
                "expected {} features, got {}",
                self.config.n_features,
                x.len()
            )));
        }
        let k = self
            .config
            .groups
            .iter()
            .position(|&g| g == group)
            .ok_or(MtlError::UnknownGroup(group))?;
        out.extend_from_slice(x);
        out.extend((0..self.config.groups.len()).map(|j| if j == k { 1.0 } else { 0.0 }));
        Ok(())
    }

    fn trace(&self, input: &[f64], film: &[(Vec<f64>, Vec<f64>)]) -> Trace {
        let act = self.config.activation;
        let mut acts = vec![input.to_vec()];
        let mut pre_all = Vec::with_capacity(self.params.trunk.len());
        let mut mod_all = Vec::with_capacity(self.params.trunk.len());
        for (layer, (gamma, beta)) in self.params.trunk.iter().zip(film) {
            let mut pre = vec![0.0; layer.out];
            layer.apply(acts.last().expect("input present"), &mut pre);
            let modulated: Vec<f64> = pre
                .iter()
                .zip(gamma)
                .zip(beta)
                .map(|((p, g), b)| g * p + b)
                .collect();
            acts.push(modulated.iter().map(|&m| act.apply(m)).collect());
            pre_all.push(pre);
            mod_all.push(modulated);
        }
        let z = acts.last().expect("trunk output");
        let mut logits = Vec::with_capacity(self.params.heads.len());
        let mut outputs = Vec::with_capacity(self.params.heads.len());
        for (head, cfg) in self.params.heads.iter().zip(&self.config.heads) {
            let mut o = [0.0];
            head.apply(z, &mut o);
            logits.push(o[0]);
            outputs.push(match cfg.output {
                OutputActivation::Linear => o[0],
                OutputActivation::Sigmoid => sigmoid(o[0]),
            });
        }
        Trace {
            acts,
            pre: pre_all,
            modulated: mod_all,
            logits,
            outputs,
        }
    }

    /// Per-task predictions for one sample.
    pub fn forward(&self, x: &[f64], group: GroupLabel, lambda: &TaskWeights) -> Result<Vec<f64>, MtlError> {
        let film = self.modulations(lambda)?;
        let mut input = Vec::with_capacity(self.config.input_dim());
        self.encode_input(x, group, &mut input)?;
        Ok(self.trace(&input, &film).outputs)
    }

    fn predict_rows<'a>(
        &self,
        rows: impl Iterator<Item = &'a [f64]>,
        groups: &[GroupLabel],
        lambda: &TaskWeights,
    ) -> Result<Predictions, MtlError> {
        let film = self.modulations(lambda)?;
        let mut columns = vec![Vec::with_capacity(groups.len()); self.n_tasks()];
        let mut input = Vec::with_capacity(self.config.input_dim());
        for (x, &g) in rows.zip(groups) {
            input.clear();
            self.encode_input(x, g, &mut input)?;
            for (col, y) in columns.iter_mut().zip(self.trace(&input, &film).outputs) {
                col.push(y);
            }
        }
        Predictions::new(groups.to_vec(), columns).map_err(|e| MtlError::Shape(e.to_string()))
    }

    pub fn predict_dataset(&self, ds: &Dataset, lambda: &TaskWeights) -> Result<Predictions, MtlError> {
        self.predict_rows((0..ds.len()).map(|i| ds.row(i)), ds.groups(), lambda)
    }

    pub fn predict_pool(&self, pool: &PoolSet, lambda: &TaskWeights) -> Result<Predictions, MtlError> {
        self.predict_rows((0..pool.len()).map(|i| pool.row(i)), pool.groups(), lambda)
    }

    /// Encodes rows `idx` of `ds`; its tasks must line up with the heads.
    pub fn encode_batch(&self, ds: &Dataset, idx: &[usize]) -> Result<Batch, MtlError> {
        if ds.n_tasks() != self.n_tasks() {
            return Err(MtlError::Shape(format!(
                "dataset has {} tasks, network has {} heads",
                ds.n_tasks(),
                self.n_tasks()
            )));
        }
        for (t, (col, head)) in ds.tasks().iter().zip(&self.config.heads).enumerate() {
            if col.kind != head.kind {
                return Err(MtlError::Shape(format!(
                    "task {t} is {:?} but head is {:?}",
                    col.kind, head.kind
                )));
            }
        }
        let d = self.config.input_dim();
        let t = self.n_tasks();
        let mut batch = Batch {
            n: idx.len(),
            input_dim: d,
            n_tasks: t,
            inputs: Vec::with_capacity(idx.len() * d),
            labels: Vec::with_capacity(idx.len() * t),
            mask: Vec::with_capacity(idx.len() * t),
        };
        for &i in idx {
            self.encode_input(ds.row(i), ds.groups()[i], &mut batch.inputs)?;
            for col in ds.tasks() {
                let present = col.present()[i];
                batch.mask.push(present);
                batch.labels.push(if present { col.values()[i] } else { 0.0 });
            }
        }
        Ok(batch)
    }

    fn present_counts(batch: &Batch) -> Vec<usize> {
        (0..batch.n_tasks)
            .map(|t| (0..batch.n).filter(|&i| batch.mask[i * batch.n_tasks + t]).count())
            .collect()
    }

    /// Weighted loss of the network on `batch`, honouring each head's loss
    /// kind.
    pub fn batch_loss(&self, batch: &Batch, lambda: &TaskWeights) -> Result<f64, MtlError> {
        self.check_batch(batch)?;
        let film = self.modulations(lambda)?;
        let counts = Self::present_counts(batch);
        if counts.iter().all(|&c| c == 0) {
            return Err(MtlError::NoLabels);
        }
        let mut per_task = vec![0.0; batch.n_tasks];
        for i in 0..batch.n {
            let tr = self.trace(batch.input(i), &film);
            for (t, acc) in per_task.iter_mut().enumerate() {
                let k = i * batch.n_tasks + t;
                if batch.mask[k] {
                    *acc += self.sample_loss(t, &tr, batch.labels[k]);
                }
            }
        }
        Ok(weighted_sum(&per_task, &counts, lambda))
    }

    fn sample_loss(&self, t: usize, tr: &Trace, y: f64) -> f64 {
        match self.config.heads[t].loss {
            LossKind::Squared => {
                let r = tr.outputs[t] - y;
                r * r
            }
            LossKind::CrossEntropy => softplus(tr.logits[t]) - y * tr.logits[t],
        }
    }

    fn check_batch(&self, batch: &Batch) -> Result<(), MtlError> {
        if batch.input_dim != self.config.input_dim() || batch.n_tasks != self.n_tasks() {
            return Err(MtlError::Shape(format!(
                "batch is {}x{} inputs / {} tasks, network expects {} / {}",
                batch.n,
                batch.input_dim,
                batch.n_tasks,
                self.config.input_dim(),
                self.n_tasks()
            )));
        }
        Ok(())
    }

    pub fn to_document(&self) -> NetworkDocument {
        NetworkDocument {
            version: NETWORK_FORMAT_VERSION,
            config: self.config.clone(),
            parameters: self
                .params
                .blocks()
                .into_iter()
                .map(|(k, v)| (k, v.to_vec()))
                .collect(),
            trained_lambda_bounds: self.trained_bounds.map(|(a, b)| [a, b]),
        }
    }

    pub fn from_document(doc: NetworkDocument) -> Result<Self, MtlError> {
        if doc.version != NETWORK_FORMAT_VERSION {
            return Err(MtlError::Format(format!(
                "unsupported version {} (expected {NETWORK_FORMAT_VERSION})",
                doc.version
            )));
        }
        let mut net = Self::init(doc.config)?;
        let mut params = doc.parameters;
        for (name, block) in net.params.blocks_mut() {
            let src = params
                .remove(&name)
                .ok_or_else(|| MtlError::Format(format!("missing parameter block `{name}`")))?;
            if src.len() != block.len() {
                return Err(MtlError::Format(format!(
                    "block `{name}` has {} values, expected {}",
                    src.len(),
                    block.len()
                )));
            }
            block.copy_from_slice(&src);
        }
        if let Some(name) = params.keys().next() {
            return Err(MtlError::Format(format!("unexpected parameter block `{name}`")));
        }
        if !net.params.all_finite() {
            return Err(MtlError::Format("non-finite parameter".into()));
        }
        net.trained_bounds = doc.trained_lambda_bounds.map(|[a, b]| (a, b));
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("network serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, MtlError> {
        let doc: NetworkDocument =
            serde_json::from_str(s).map_err(|e| MtlError::Format(e.to_string()))?;
        Self::from_document(doc)
    }
}

/// Serialized network: configuration plus flat parameter arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub version: u32,
    pub config: NetworkConfig,
    pub parameters: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub trained_lambda_bounds: Option<[f64; 2]>,
}

fn weighted_sum(per_task: &[f64], counts: &[usize], lambda: &TaskWeights) -> f64 {
    per_task
        .iter()
        .zip(counts)
        .zip(lambda.as_slice())
        .filter(|((_, &c), _)| c > 0)
        .map(|((s, &c), w)| w * s / c as f64)
        .sum()
}

/// `sum_t lambda_t * mean_{i unmasked} (pred[i][t] - label[i][t])^2`.
///
/// Rows are samples. A task without unmasked samples contributes nothing.
pub fn loss(
    predictions: &[Vec<f64>],
    labels: &[Vec<f64>],
    mask: &[Vec<bool>],
    lambda: &TaskWeights,
) -> Result<f64, MtlError> {
    if predictions.len() != labels.len() || labels.len() != mask.len() {
        return Err(MtlError::Shape("predictions, labels and mask differ in length".into()));
    }
    let t = lambda.len();
    let mut per_task = vec![0.0; t];
    let mut counts = vec![0usize; t];
    for ((p, y), m) in predictions.iter().zip(labels).zip(mask) {
        if p.len() != t || y.len() != t || m.len() != t {
            return Err(MtlError::Shape(format!("expected {t} tasks per row")));
        }
        for k in 0..t {
            if m[k] {
                per_task[k] += (p[k] - y[k]) * (p[k] - y[k]);
                counts[k] += 1;
            }
        }
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(MtlError::NoLabels);
    }
    Ok(weighted_sum(&per_task, &counts, lambda))
}

/// Loss and exact gradient of [`MtlNetwork::batch_loss`] with respect to every
/// parameter, FiLM generators included.
pub fn backward(net: &MtlNetwork, batch: &Batch, lambda: &TaskWeights) -> Result<(f64, Params), MtlError> {
    net.check_batch(batch)?;
    let film = net.modulations(lambda)?;
    let l_in = net.film_input(lambda);
    let counts = MtlNetwork::present_counts(batch);
    if counts.iter().all(|&c| c == 0) {
        return Err(MtlError::NoLabels);
    }
    let w = lambda.as_slice();
    let act = net.config.activation;
    let n_layers = net.params.trunk.len();
    let mut grads = Params::zeros_like(&net.params);
    // dL/dgamma, dL/dbeta summed over samples, per layer
    let mut d_gamma: Vec<Vec<f64>> = net.params.trunk.iter().map(|d| vec![0.0; d.out]).collect();
    let mut d_beta = d_gamma.clone();
    let mut per_task = vec![0.0; batch.n_tasks];

    for i in 0..batch.n {
        if !batch.mask[i * batch.n_tasks..(i + 1) * batch.n_tasks].iter().any(|&m| m) {
            continue;
        }
        let tr = net.trace(batch.input(i), &film);
        let z = &tr.acts[n_layers];
        let mut dz = vec![0.0; z.len()];
        for t in 0..batch.n_tasks {
            let k = i * batch.n_tasks + t;
            if !batch.mask[k] {
                continue;
            }
            let y = batch.labels[k];
            per_task[t] += net.sample_loss(t, &tr, y);
            let scale = w[t] / counts[t] as f64;
            let head_cfg = net.config.heads[t];
            let d_logit = match (head_cfg.loss, head_cfg.output) {
                (LossKind::CrossEntropy, _) => scale * (tr.outputs[t] - y),
                (LossKind::Squared, OutputActivation::Linear) => scale * 2.0 * (tr.outputs[t] - y),
                (LossKind::Squared, OutputActivation::Sigmoid) => {
                    let p = tr.outputs[t];
                    scale * 2.0 * (p - y) * p * (1.0 - p)
                }
            };
            let head = &net.params.heads[t];
            let g = &mut grads.heads[t];
            for (j, &zj) in z.iter().enumerate() {
                g.weights[j] += d_logit * zj;
                dz[j] += d_logit * head.weights[j];
            }
            g.bias[0] += d_logit;
        }

        let mut d_act = dz;
        for l in (0..n_layers).rev() {
            let layer = &net.params.trunk[l];
            let (gamma, _) = &film[l];
            let a_prev = &tr.acts[l];
            let g = &mut grads.trunk[l];
            let mut d_prev = vec![0.0; layer.inp];
            for o in 0..layer.out {
                let d_mod = d_act[o] * act.derivative(tr.modulated[l][o], tr.acts[l + 1][o]);
                d_gamma[l][o] += d_mod * tr.pre[l][o];
                d_beta[l][o] += d_mod;
                let d_pre = d_mod * gamma[o];
                g.bias[o] += d_pre;
                let row = o * layer.inp;
                for j in 0..layer.inp {
                    g.weights[row + j] += d_pre * a_prev[j];
                    d_prev[j] += d_pre * layer.weights[row + j];
                }
            }
            d_act = d_prev;
        }
    }

    let t = l_in.len();
    for (l, f) in grads.film.iter_mut().enumerate() {
        for o in 0..f.out {
            f.gamma_bias[o] = d_gamma[l][o];
            f.beta_bias[o] = d_beta[l][o];
            for (k, &lk) in l_in.iter().enumerate() {
                f.gamma_weights[o * t + k] = d_gamma[l][o] * lk;
                f.beta_weights[o * t + k] = d_beta[l][o] * lk;
            }
        }
    }

    let value = weighted_sum(&per_task, &counts, lambda);
    if !value.is_finite() {
        return Err(MtlError::Numerical {
            epoch: None,
            message: format!("loss is {value}"),
        });
    }
    Ok((value, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TaskColumn;

    fn config(seed: u64) -> NetworkConfig {
        NetworkConfig {
            n_features: 3,
            groups: vec![GroupLabel(-1), GroupLabel(1)],
            hidden: vec![5],
            repr_dim: 4,
            heads: vec![
                HeadConfig::for_task(TaskKind::Regression),
                HeadConfig::for_task(TaskKind::BinaryScore),
            ],
            activation: Activation::Tanh,
            lambda_center: 1.0,
            seed,
        }
    }

    fn tiny_dataset() -> Dataset {
        let features = vec![0.1, -0.3, 0.8, 1.2, 0.0, -0.5, -0.7, 0.4, 0.2, 0.3, 0.3, 0.3];
        let groups = vec![GroupLabel(-1), GroupLabel(1), GroupLabel(1), GroupLabel(-1)];
        Dataset::new(
            3,
            features,
            groups,
            vec![
                TaskColumn::new("y1", TaskKind::Regression, vec![0.5, -1.0, 2.0, 0.0], vec![true, true, false, true]).unwrap(),
                TaskColumn::new("y2", TaskKind::BinaryScore, vec![1.0, 0.0, 1.0, 0.0], vec![true, true, true, false]).unwrap(),
            ],
        )
        .unwrap()
    }

    fn lam(a: f64, b: f64) -> TaskWeights {
        TaskWeights::new(vec![a, b]).unwrap()
    }

    #[test]
    fn init_is_seeded() {
        let a = MtlNetwork::init(config(1)).unwrap();
        let b = MtlNetwork::init(config(1)).unwrap();
        let c = MtlNetwork::init(config(2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn init_film_is_neutral_at_midpoint() {
        let mut cfg = config(1);
        cfg.lambda_center = 0.55;
        let net = MtlNetwork::init(cfg).unwrap();
        for (gamma, beta) in net.modulations(&lam(0.55, 0.55)).unwrap() {
            assert!(gamma.iter().all(|&g| g == 1.0));
            assert!(beta.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn init_rejects_bad_configs() {
        let mut cfg = config(0);
        cfg.hidden = vec![0];
        assert!(matches!(MtlNetwork::init(cfg), Err(MtlError::InvalidConfig(_))));
        let mut cfg = config(0);
        cfg.repr_dim = 0;
        assert!(MtlNetwork::init(cfg).is_err());
        let mut cfg = config(0);
        cfg.heads[1].output = OutputActivation::Linear;
        assert!(MtlNetwork::init(cfg).is_err());
        let mut cfg = config(0);
        cfg.heads[0].loss = LossKind::CrossEntropy;
        assert!(MtlNetwork::init(cfg).is_err());
        let mut cfg = config(0);
        cfg.heads.clear();
        assert!(MtlNetwork::init(cfg).is_err());
    }

    #[test]
    fn zero_network_outputs() {
        let mut net = MtlNetwork::init(config(3)).unwrap();
        for (_, b) in net.params.blocks_mut() {
            b.iter_mut().for_each(|v| *v = 0.0);
        }
        let out = net.forward(&[1.0, 2.0, 3.0], GroupLabel(1), &lam(1.0, 1.0)).unwrap();
        assert_eq!(out, vec![0.0, 0.5]);
    }

    #[test]
    fn lambda_inactive_at_init() {
        let net = MtlNetwork::init(config(4)).unwrap();
        let x = [0.3, -0.2, 0.9];
        let a = net.forward(&x, GroupLabel(-1), &lam(0.5, 0.7)).unwrap();
        let b = net.forward(&x, GroupLabel(-1), &lam(1.0, 1.4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forward_errors() {
        let net = MtlNetwork::init(config(4)).unwrap();
        assert!(matches!(
            net.forward(&[1.0], GroupLabel(1), &lam(1.0, 1.0)),
            Err(MtlError::Shape(_))
        ));
        assert_eq!(
            net.forward(&[1.0, 2.0, 3.0], GroupLabel(9), &lam(1.0, 1.0)),
            Err(MtlError::UnknownGroup(GroupLabel(9)))
        );
        assert!(net
            .forward(&[1.0, 2.0, 3.0], GroupLabel(1), &TaskWeights::new(vec![1.0]).unwrap())
            .is_err());
    }

    #[test]
    fn loss_examples() {
        let w = lam(2.0, 1.0);
        let perfect = loss(&[vec![1.0, 0.2]], &[vec![1.0, 0.2]], &[vec![true, true]], &w).unwrap();
        assert_eq!(perfect, 0.0);
        // task MSEs 0.5 and 1.0
        let preds = vec![vec![1.0, 1.0], vec![0.0, 0.0]];
        let labels = vec![vec![0.0, 0.0], vec![0.0, 1.0]];
        let mask = vec![vec![true, true]; 2];
        assert_eq!(loss(&preds, &labels, &mask, &w).unwrap(), 2.0);
        let mask = vec![vec![false, true]; 2];
        assert_eq!(loss(&preds, &labels, &mask, &w).unwrap(), 1.0);
        let none = vec![vec![false, false]; 2];
        assert_eq!(loss(&preds, &labels, &none, &w), Err(MtlError::NoLabels));
    }

    #[test]
    fn backward_loss_matches_batch_loss() {
        let net = MtlNetwork::init(config(6)).unwrap();
        let ds = tiny_dataset();
        let batch = net.encode_batch(&ds, &[0, 1, 2, 3]).unwrap();
        let (l, _) = backward(&net, &batch, &lam(0.7, 1.3)).unwrap();
        assert_eq!(l, net.batch_loss(&batch, &lam(0.7, 1.3)).unwrap());
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let net = MtlNetwork::init(config(8)).unwrap();
        let ds = tiny_dataset();
        let w = lam(1.0, 1.0);
        let preds = net.predict_dataset(&ds, &w).unwrap();
        // relabel with the network's own regression output, drop task 2
        let exact = Dataset::new(
            3,
            ds.features().to_vec(),
            ds.groups().to_vec(),
            vec![
                TaskColumn::fully_present("y1", TaskKind::Regression, preds.column(0).to_vec()).unwrap(),
                TaskColumn::new("y2", TaskKind::BinaryScore, vec![0.0; 4], vec![false; 4]).unwrap(),
            ],
        )
        .unwrap();
        let batch = net.encode_batch(&exact, &[0, 1, 2, 3]).unwrap();
        let (l, g) = backward(&net, &batch, &w).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.blocks().iter().all(|(_, b)| b.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn masked_task_head_gets_no_gradient() {
        let net = MtlNetwork::init(config(9)).unwrap();
        let ds = tiny_dataset();
        let no_y2 = Dataset::new(
            3,
            ds.features().to_vec(),
            ds.groups().to_vec(),
            vec![
                ds.task(0).clone(),
                TaskColumn::new("y2", TaskKind::BinaryScore, vec![0.0; 4], vec![false; 4]).unwrap(),
            ],
        )
        .unwrap();
        let batch = net.encode_batch(&no_y2, &[0, 1, 2, 3]).unwrap();
        let (_, g) = backward(&net, &batch, &lam(1.0, 1.0)).unwrap();
        assert!(g.heads[1].weights.iter().all(|&v| v == 0.0));
        assert_eq!(g.heads[1].bias[0], 0.0);
    }

    #[test]
    fn json_round_trip_reproduces_predictions() {
        let mut net = MtlNetwork::init(config(10)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (_, b) in net.params.blocks_mut() {
            b.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        }
        net.set_trained_bounds((0.1, 2.0));
        let back = MtlNetwork::from_json(&net.to_json()).unwrap();
        assert_eq!(back, net);
        let ds = tiny_dataset();
        let w = lam(0.3, 1.7);
        let a = net.predict_dataset(&ds, &w).unwrap();
        let b = back.predict_dataset(&ds, &w).unwrap();
        for t in 0..2 {
            assert!(a.column(t).iter().zip(b.column(t)).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn document_checks_blocks() {
        let net = MtlNetwork::init(config(10)).unwrap();
        let mut doc = net.to_document();
        doc.parameters.remove("head.0.bias");
        assert!(matches!(MtlNetwork::from_document(doc), Err(MtlError::Format(_))));
        let mut doc = net.to_document();
        doc.parameters.get_mut("head.0.bias").unwrap().push(1.0);
        assert!(MtlNetwork::from_document(doc).is_err());
        let mut doc = net.to_document();
        doc.version = 2;
        assert!(MtlNetwork::from_document(doc).is_err());
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }
}
