//! Multinomial logistic regression over hashed n-gram features, trained by
//! plain SGD, recording the probability of every label after every epoch.

use std::collections::HashSet;
use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Dataset, Instance, Split, VarietyLabel};
use crate::dynamics::EpochProbabilityLog;
use crate::features::{FeatureSpec, NgramRange, SparseVector};
use crate::rng::{self, SplitMix64};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("no instances to train on")]
    Empty,
    #[error("training data covers a single label (`{0}`); two are required")]
    SingleClass(String),
    #[error("instance `{0}` has no training label; run label assignment first")]
    Unlabeled(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("label `{0}` is not one of the dataset's varieties")]
    UnknownLabel(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
}

/// Which instances are trained on and logged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsScope {
    /// Instances in the `train` split.
    #[default]
    TrainSplit,
    /// Every instance regardless of split.
    FullDataset,
}

impl DynamicsScope {
    pub fn includes(self, inst: &Instance) -> bool {
        match self {
            DynamicsScope::TrainSplit => inst.split == Split::Train,
            DynamicsScope::FullDataset => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub word_ngrams: NgramRange,
    pub char_ngrams: NgramRange,
    pub hash_dim: usize,
    pub l2: f64,
    pub scope: DynamicsScope,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let features = FeatureSpec::default();
        Self {
            epochs: 10,
            learning_rate: 0.1,
            seed: 42,
            word_ngrams: features.word_ngrams,
            char_ngrams: features.char_ngrams,
            hash_dim: features.hash_dim,
            l2: 1e-6,
            scope: DynamicsScope::TrainSplit,
        }
    }
}

impl TrainConfig {
    pub fn features(&self) -> FeatureSpec {
        FeatureSpec {
            word_ngrams: self.word_ngrams,
            char_ngrams: self.char_ngrams,
            hash_dim: self.hash_dim,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.epochs < 1 {
            return bad("epochs must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.hash_dim < 2 || !self.hash_dim.is_power_of_two() {
            return bad("hash_dim must be a power of two, at least 2");
        }
        if self.l2.is_nan() || self.l2 < 0.0 {
            return bad("l2 must be non-negative");
        }
        for r in [self.word_ngrams, self.char_ngrams] {
            if r.max > 255 {
                return bad("n-gram length must fit in a byte");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    label_order: Vec<VarietyLabel>,
    features: FeatureSpec,
    /// Row-major `[label][bucket]`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `softmax(logits) - onehot(target)`: the logit gradient of the NLL.
fn logit_residual(logits: &[f64], target: usize) -> Vec<f64> {
    let mut g = softmax(logits);
    g[target] -= 1.0;
    g
}

impl LinearModel {
    pub fn zeros(label_order: Vec<VarietyLabel>, features: FeatureSpec) -> Self {
        let k = label_order.len();
        Self {
            weights: vec![0.0; k * features.hash_dim],
            bias: vec![0.0; k],
            label_order,
            features,
        }
    }

    pub fn labels(&self) -> &[VarietyLabel] {
        &self.label_order
    }

    pub fn features(&self) -> &FeatureSpec {
        &self.features
    }

    pub fn dim(&self) -> usize {
        self.features.hash_dim
    }

    pub fn weight(&self, label: usize, bucket: usize) -> f64 {
        self.weights[label * self.dim() + bucket]
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn label_index(&self, label: &VarietyLabel) -> Option<usize> {
        self.label_order.iter().position(|l| l == label)
    }

    pub fn logits(&self, x: &SparseVector) -> Vec<f64> {
        let d = self.dim();
        self.bias
            .iter()
            .enumerate()
            .map(|(k, b)| b + x.iter().map(|(f, v)| self.weights[k * d + f] * v).sum::<f64>())
            .collect()
    }

    pub fn predict_proba_vector(&self, x: &SparseVector) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    /// Label probabilities for `text`, in [`labels`](Self::labels) order.
    pub fn predict_proba(&self, text: &str) -> Vec<f64> {
        self.predict_proba_vector(&self.features.vectorize(text))
    }

    fn sgd_step(&mut self, x: &SparseVector, target: usize, lr: f64, l2: f64) {
        let g = logit_residual(&self.logits(x), target);
        let d = self.dim();
        for (k, gk) in g.iter().enumerate() {
            self.bias[k] -= lr * gk;
            for (f, v) in x.iter() {
                let w = &mut self.weights[k * d + f];
                *w -= lr * (gk * v + l2 * *w);
            }
        }
    }

    /// Write the `VCM1` checkpoint.
    ///
    /// Layout, little-endian: magic `VCM1`; u32 label count; per label a u32
    /// byte length and UTF-8 bytes; four u8 n-gram bounds (word min, word
    /// max, char min, char max); u64 hash_dim; bias as f64 per label; the
    /// weight matrix as f64, label-major.
    pub fn save<W: Write>(&self, mut out: W) -> Result<(), TrainError> {
        out.write_all(b"VCM1")?;
        out.write_u32::<LittleEndian>(self.label_order.len() as u32)?;
        for label in &self.label_order {
            let bytes = label.as_str().as_bytes();
            out.write_u32::<LittleEndian>(bytes.len() as u32)?;
            out.write_all(bytes)?;
        }
        let f = &self.features;
        for n in [f.word_ngrams.min, f.word_ngrams.max, f.char_ngrams.min, f.char_ngrams.max] {
            out.write_u8(n as u8)?;
        }
        out.write_u64::<LittleEndian>(f.hash_dim as u64)?;
        for &b in &self.bias {
            out.write_f64::<LittleEndian>(b)?;
        }
        for &w in &self.weights {
            out.write_f64::<LittleEndian>(w)?;
        }
        Ok(())
    }

    pub fn load<R: Read>(mut input: R) -> Result<Self, TrainError> {
        let bad = |m: &str| TrainError::Checkpoint(m.to_string());
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != b"VCM1" {
            return Err(bad("wrong magic bytes"));
        }
        let k = input.read_u32::<LittleEndian>()? as usize;
        if !(2..=1024).contains(&k) {
            return Err(bad("implausible label count"));
        }
        let mut labels = Vec::with_capacity(k);
        for _ in 0..k {
            let len = input.read_u32::<LittleEndian>()? as usize;
            let mut buf = vec![0u8; len];
            input.read_exact(&mut buf)?;
            labels.push(VarietyLabel::new(String::from_utf8(buf).map_err(|_| bad("label is not UTF-8"))?));
        }
        let mut bounds = [0u8; 4];
        input.read_exact(&mut bounds)?;
        let hash_dim = input.read_u64::<LittleEndian>()? as usize;
        if hash_dim < 2 || !hash_dim.is_power_of_two() {
            return Err(bad("hash_dim is not a power of two"));
        }
        let features = FeatureSpec {
            word_ngrams: NgramRange::new(bounds[0] as usize, bounds[1] as usize),
            char_ngrams: NgramRange::new(bounds[2] as usize, bounds[3] as usize),
            hash_dim,
        };
        let mut model = LinearModel::zeros(labels, features);
        input.read_f64_into::<LittleEndian>(&mut model.bias)?;
        input.read_f64_into::<LittleEndian>(&mut model.weights)?;
        Ok(model)
    }
}

/// Mean negative log-likelihood plus `l2 / 2 * ||W||²` (bias unpenalized).
pub fn objective(model: &LinearModel, examples: &[(SparseVector, usize)], l2: f64) -> f64 {
    let nll: f64 = examples
        .iter()
        .map(|(x, y)| -model.predict_proba_vector(x)[*y].ln())
        .sum::<f64>()
        / examples.len() as f64;
    nll + 0.5 * l2 * model.weights.iter().map(|w| w * w).sum::<f64>()
}

/// Analytic gradient of [`objective`]: `(dW row-major, db)`.
pub fn gradient(model: &LinearModel, examples: &[(SparseVector, usize)], l2: f64) -> (Vec<f64>, Vec<f64>) {
    let d = model.dim();
    let n = examples.len() as f64;
    let mut dw: Vec<f64> = model.weights.iter().map(|w| l2 * w).collect();
    let mut db = vec![0.0; model.bias.len()];
    for (x, y) in examples {
        let g = logit_residual(&model.logits(x), *y);
        for (k, gk) in g.iter().enumerate() {
            db[k] += gk / n;
            for (f, v) in x.iter() {
                dw[k * d + f] += gk * v / n;
            }
        }
    }
    (dw, db)
}

/// SGD without logging, shared by the per-label binary models.
fn fit(
    labels: Vec<VarietyLabel>,
    examples: &[(SparseVector, usize)],
    config: &TrainConfig,
    stream: &str,
    mut after_epoch: impl FnMut(usize, &LinearModel),
) -> LinearModel {
    let mut model = LinearModel::zeros(labels, config.features());
    let mut gen = rng::keyed(config.seed, "shuffle", stream);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 1..=config.epochs {
        order.sort_unstable();
        gen.shuffle(&mut order);
        for &i in &order {
            let (x, y) = &examples[i];
            model.sgd_step(x, *y, config.learning_rate, config.l2);
        }
        after_epoch(epoch, &model);
    }
    model
}

fn check_two_classes(labels: &[VarietyLabel], targets: impl Iterator<Item = usize>) -> Result<(), TrainError> {
    let seen: HashSet<usize> = targets.collect();
    match seen.len() {
        0 => Err(TrainError::Empty),
        1 => Err(TrainError::SingleClass(labels[*seen.iter().next().unwrap()].to_string())),
        _ => Ok(()),
    }
}

/// Train for `config.epochs` epochs and log every in-scope instance's label
/// probabilities after each epoch (an evaluation pass once the epoch's
/// updates are done).
pub fn train_with_dynamics(
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<(LinearModel, EpochProbabilityLog), TrainError> {
    config.validate()?;
    let labels = dataset.labels.varieties().to_vec();
    let spec = config.features();
    let scoped: Vec<&Instance> = dataset.instances.iter().filter(|i| config.scope.includes(i)).collect();
    if scoped.is_empty() {
        return Err(TrainError::Empty);
    }
    let mut examples = Vec::with_capacity(scoped.len());
    for inst in &scoped {
        let label = inst
            .train_label
            .as_ref()
            .ok_or_else(|| TrainError::Unlabeled(inst.id.clone()))?;
        let y = labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| TrainError::UnknownLabel(label.to_string()))?;
        examples.push((spec.vectorize(inst.text()), y));
    }
    check_two_classes(&labels, examples.iter().map(|(_, y)| *y))?;

    let ids = scoped.iter().map(|i| i.id.clone()).collect();
    let gold = examples.iter().map(|(_, y)| *y).collect();
    let mut log = EpochProbabilityLog::zeroed(labels.clone(), ids, gold, config.epochs);
    let model = fit(labels, &examples, config, "dynamics", |epoch, model| {
        for (i, (x, _)) in examples.iter().enumerate() {
            log.set_probs(i, epoch, &model.predict_proba_vector(x));
        }
    });
    Ok((model, log))
}

/// Macro-F1 per epoch, separately for common and non-common instances.
/// `None` marks a group with no instances in the log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupF1 {
    pub epoch: usize,
    pub f1_common: Option<f64>,
    pub f1_non_common: Option<f64>,
}

pub fn per_group_f1(log: &EpochProbabilityLog, dataset: &Dataset) -> Vec<GroupF1> {
    let flags = dataset.common_flags();
    let (mut common, mut rest) = (Vec::new(), Vec::new());
    for (i, id) in log.ids().iter().enumerate() {
        match flags.get(id) {
            Some(true) => common.push(i),
            Some(false) => rest.push(i),
            None => {}
        }
    }
    let k = log.labels().len();
    let group_f1 = |members: &[usize], epoch: usize| -> Option<f64> {
        if members.is_empty() {
            return None;
        }
        let pairs = members.iter().map(|&i| (log.gold_index(i), log.argmax(i, epoch)));
        Some(macro_f1(k, pairs))
    };
    (1..=log.epochs())
        .map(|epoch| GroupF1 {
            epoch,
            f1_common: group_f1(&common, epoch),
            f1_non_common: group_f1(&rest, epoch),
        })
        .collect()
}

/// Macro-F1 over the labels that occur as gold or prediction.
pub fn macro_f1(num_labels: usize, pairs: impl Iterator<Item = (usize, usize)>) -> f64 {
    let mut tp = vec![0usize; num_labels];
    let mut fp = vec![0usize; num_labels];
    let mut fn_ = vec![0usize; num_labels];
    for (gold, pred) in pairs {
        if gold == pred {
            tp[gold] += 1;
        } else {
            fp[pred] += 1;
            fn_[gold] += 1;
        }
    }
    let present: Vec<usize> = (0..num_labels).filter(|&j| tp[j] + fp[j] + fn_[j] > 0).collect();
    if present.is_empty() {
        return 0.0;
    }
    present
        .iter()
        .map(|&j| f1_from_counts(tp[j], fp[j], fn_[j]))
        .sum::<f64>()
        / present.len() as f64
}

fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// One row of the single-label vs per-label-binary comparison, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub approach: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
    /// `test` when the dataset has a test split, `train` otherwise.
    pub evaluated_on: String,
    pub evaluated_instances: usize,
}

/// Train one binary model per variety (common instances are positive for
/// both) and compare it with a single softmax model over the two varieties.
///
/// Predictions are label sets: a binary model votes its label in when its
/// probability exceeds 0.5; the single model always predicts one label.
/// Accuracy is exact set match; precision, recall and F1 are macro-averaged
/// over the varieties.
pub fn train_one_vs_rest(dataset: &Dataset, config: &TrainConfig) -> Result<BenchmarkReport, TrainError> {
    config.validate()?;
    let varieties = dataset.labels.varieties().to_vec();
    let spec = config.features();
    let truth = |inst: &Instance| -> Result<[bool; 2], TrainError> {
        if inst.is_common {
            return Ok([true, true]);
        }
        let label = inst
            .train_label
            .as_ref()
            .ok_or_else(|| TrainError::Unlabeled(inst.id.clone()))?;
        Ok([label == &varieties[0], label == &varieties[1]])
    };

    let train: Vec<&Instance> = dataset.instances.iter().filter(|i| config.scope.includes(i)).collect();
    if train.is_empty() {
        return Err(TrainError::Empty);
    }
    let has_test = dataset.instances.iter().any(|i| i.split == Split::Test);
    let eval: Vec<&Instance> = if has_test {
        dataset.instances.iter().filter(|i| i.split == Split::Test).collect()
    } else {
        train.clone()
    };

    let train_x: Vec<SparseVector> = train.iter().map(|i| spec.vectorize(i.text())).collect();
    let train_truth = train.iter().map(|i| truth(i)).collect::<Result<Vec<_>, _>>()?;
    let eval_x: Vec<SparseVector> = eval.iter().map(|i| spec.vectorize(i.text())).collect();
    let eval_truth = eval.iter().map(|i| truth(i)).collect::<Result<Vec<_>, _>>()?;

    // Single-label model on the (possibly randomly assigned) training labels.
    let mut single_examples = Vec::with_capacity(train.len());
    for (inst, x) in train.iter().zip(&train_x) {
        let label = inst
            .train_label
            .as_ref()
            .ok_or_else(|| TrainError::Unlabeled(inst.id.clone()))?;
        let y = varieties.iter().position(|l| l == label).unwrap_or(0);
        single_examples.push((x.clone(), y));
    }
    check_two_classes(&varieties, single_examples.iter().map(|(_, y)| *y))?;

    let binary_models: Vec<LinearModel> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..2)
            .map(|j| {
                let (train_x, train_truth, varieties) = (&train_x, &train_truth, &varieties);
                scope.spawn(move || {
                    let label = &varieties[j];
                    let examples: Vec<(SparseVector, usize)> = train_x
                        .iter()
                        .zip(train_truth)
                        .map(|(x, t)| (x.clone(), usize::from(t[j])))
                        .collect();
                    let names = vec![VarietyLabel::new(format!("not-{label}")), label.clone()];
                    fit(names, &examples, config, &format!("ovr-{label}"), |_, _| {})
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("binary trainer panicked")).collect()
    });
    let single = fit(varieties.clone(), &single_examples, config, "single", |_, _| {});

    let multi_pred: Vec<[bool; 2]> = eval_x
        .iter()
        .map(|x| [0, 1].map(|j| binary_models[j].predict_proba_vector(x)[1] > 0.5))
        .collect();
    let single_pred: Vec<[bool; 2]> = eval_x
        .iter()
        .map(|x| {
            let p = single.predict_proba_vector(x);
            if p[1] > p[0] {
                [false, true]
            } else {
                [true, false]
            }
        })
        .collect();

    Ok(BenchmarkReport {
        rows: vec![
            set_metrics("single-label", &single_pred, &eval_truth),
            set_metrics("one-vs-rest", &multi_pred, &eval_truth),
        ],
        evaluated_on: if has_test { "test" } else { "train" }.into(),
        evaluated_instances: eval.len(),
    })
}

fn set_metrics(name: &str, pred: &[[bool; 2]], truth: &[[bool; 2]]) -> BenchmarkRow {
    let n = pred.len().max(1) as f64;
    let exact = pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64;
    let (mut precision, mut recall, mut f1) = (0.0, 0.0, 0.0);
    for j in 0..2 {
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for (p, t) in pred.iter().zip(truth) {
            match (p[j], t[j]) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        precision += if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        recall += if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        f1 += f1_from_counts(tp, fp, fn_);
    }
    BenchmarkRow {
        approach: name.to_string(),
        accuracy: 100.0 * exact / n,
        precision: 50.0 * precision,
        recall: 50.0 * recall,
        f1: 50.0 * f1,
    }
}

/// Deterministic small random model, used by gradient checks.
pub fn random_model(labels: usize, dim: usize, seed: u64) -> LinearModel {
    let names = (0..labels).map(|k| VarietyLabel::new(format!("L{k}"))).collect();
    let spec = FeatureSpec {
        word_ngrams: NgramRange::new(1, 2),
        char_ngrams: NgramRange::new(2, 4),
        hash_dim: dim,
    };
    let mut model = LinearModel::zeros(names, spec);
    let mut g = SplitMix64::new(seed);
    for w in model.weights.iter_mut().chain(model.bias.iter_mut()) {
        *w = g.next_f64() * 2.0 - 1.0;
    }
    model
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LabelSet;

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            hash_dim: 1 << 12,
            ..Default::default()
        }
    }

    fn inst(id: &str, text: &str, label: &str, common: bool) -> Instance {
        Instance {
            id: id.into(),
            raw_text: text.into(),
            normalized_text: None,
            train_label: Some(label.into()),
            is_common: common,
            annotations: vec![],
            split: Split::Train,
        }
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = LinearModel::zeros(vec!["A".into(), "B".into()], FeatureSpec::default());
        assert_eq!(m.predict_proba("cualquier cosa"), vec![0.5, 0.5]);
        assert_eq!(m.predict_proba(""), vec![0.5, 0.5]);
    }

    #[test]
    fn single_class_and_empty_are_rejected() {
        let one = Dataset::new(LabelSet::cuban(), vec![inst("1", "a", "ES-CU", false), inst("2", "b", "ES-CU", false)]).unwrap();
        assert!(matches!(train_with_dynamics(&one, &tiny_config()), Err(TrainError::SingleClass(_))));
        let none = Dataset::new(LabelSet::cuban(), vec![]).unwrap();
        assert!(matches!(train_with_dynamics(&none, &tiny_config()), Err(TrainError::Empty)));
    }

    #[test]
    fn unlabeled_common_is_rejected() {
        let mut i = inst("1", "a", "ES-CU", true);
        i.train_label = None;
        let ds = Dataset::new(LabelSet::cuban(), vec![i, inst("2", "b", "not-ES-CU", false)]).unwrap();
        assert!(matches!(train_with_dynamics(&ds, &tiny_config()), Err(TrainError::Unlabeled(id)) if id == "1"));
    }

    #[test]
    fn one_epoch_log_is_dense() {
        let ds = Dataset::new(
            LabelSet::cuban(),
            vec![inst("1", "guagua", "ES-CU", false), inst("2", "autobús", "not-ES-CU", false), inst("3", "x", "ES-CU", true)],
        )
        .unwrap();
        let cfg = TrainConfig { epochs: 1, ..tiny_config() };
        let (_, log) = train_with_dynamics(&ds, &cfg).unwrap();
        assert_eq!(log.num_records(), 3);
        log.validate().unwrap();
    }

    #[test]
    fn checkpoint_round_trip() {
        let model = random_model(3, 16, 9);
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"VCM1");
        assert_eq!(LinearModel::load(&buf[..]).unwrap(), model);
        buf[0] = b'X';
        assert!(matches!(LinearModel::load(&buf[..]), Err(TrainError::Checkpoint(_))));
    }

    #[test]
    fn macro_f1_basics() {
        assert_eq!(macro_f1(2, [(0, 0), (1, 1)].into_iter()), 1.0);
        // gold [0,0,1], pred [0,1,1]: f1_0 = 2/3, f1_1 = 2/3
        let f = macro_f1(2, [(0, 0), (0, 1), (1, 1)].into_iter());
        assert!((f - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_group_is_undefined() {
        let ds = Dataset::new(
            LabelSet::cuban(),
            vec![inst("1", "guagua", "ES-CU", false), inst("2", "autobús", "not-ES-CU", false)],
        )
        .unwrap();
        let (_, log) = train_with_dynamics(&ds, &TrainConfig { epochs: 2, ..tiny_config() }).unwrap();
        let f1 = per_group_f1(&log, &ds);
        assert_eq!(f1.len(), 2);
        assert!(f1.iter().all(|g| g.f1_common.is_none() && g.f1_non_common.is_some()));
    }

    #[test]
    fn minimal_one_vs_rest() {
        let ds = Dataset::new(
            LabelSet::cuban(),
            vec![inst("1", "guagua", "ES-CU", false), inst("2", "autobús", "not-ES-CU", false)],
        )
        .unwrap();
        let report = train_one_vs_rest(&ds, &tiny_config()).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.evaluated_on, "train");
    }
}
