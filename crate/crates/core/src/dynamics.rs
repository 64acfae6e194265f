//! Per-epoch probability logs and the scorers computed from them.
//!
//! A log holds `p[i][e][j]`: the probability the model gave instance `i`
//! for label `j` after epoch `e` (epochs are numbered from 1). On disk it is
//! JSON Lines, one record per (instance, epoch):
//!
//! ```text
//! {"instance_id":"42","epoch":1,"probs":{"ES-AR":0.73,"ES-ES":0.27},"gold_label":"ES-AR"}
//! ```
//!
//! Every scorer is oriented so that a higher score means "more likely to be
//! a common example".

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::VarietyLabel;
use crate::rng;

/// Per-record tolerance on `Σ_j p = 1`.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("the log is empty")]
    Empty,
    #[error("instance `{id}`: {message}")]
    Invalid { id: String, message: String },
    #[error("instance `{id}` is missing epoch {epoch} (log has {epochs} epochs)")]
    NotDense { id: String, epoch: usize, epochs: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochProbabilityLog {
    labels: Vec<VarietyLabel>,
    epochs: usize,
    ids: Vec<String>,
    gold: Vec<usize>,
    /// Row-major `[instance][epoch][label]`.
    probs: Vec<f64>,
}

/// One line of the JSONL file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRecord {
    pub instance_id: String,
    pub epoch: usize,
    pub probs: serde_json::Map<String, serde_json::Value>,
    pub gold_label: String,
}

impl EpochProbabilityLog {
    /// A zero-filled dense log; fill it with [`set_probs`](Self::set_probs).
    pub fn zeroed(labels: Vec<VarietyLabel>, ids: Vec<String>, gold: Vec<usize>, epochs: usize) -> Self {
        assert_eq!(ids.len(), gold.len());
        let len = ids.len() * epochs * labels.len();
        Self {
            labels,
            epochs,
            ids,
            gold,
            probs: vec![0.0; len],
        }
    }

    pub fn labels(&self) -> &[VarietyLabel] {
        &self.labels
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn num_instances(&self) -> usize {
        self.ids.len()
    }

    pub fn gold_index(&self, instance: usize) -> usize {
        self.gold[instance]
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Number of (instance, epoch) records.
    pub fn num_records(&self) -> usize {
        self.ids.len() * self.epochs
    }

    fn offset(&self, instance: usize, epoch: usize) -> usize {
        assert!((1..=self.epochs).contains(&epoch), "epoch {epoch} out of range");
        (instance * self.epochs + (epoch - 1)) * self.labels.len()
    }

    /// Probabilities of `instance` after `epoch` (1-based), in label order.
    pub fn probs(&self, instance: usize, epoch: usize) -> &[f64] {
        let o = self.offset(instance, epoch);
        &self.probs[o..o + self.labels.len()]
    }

    pub fn set_probs(&mut self, instance: usize, epoch: usize, probs: &[f64]) {
        assert_eq!(probs.len(), self.labels.len());
        let o = self.offset(instance, epoch);
        self.probs[o..o + probs.len()].copy_from_slice(probs);
    }

    /// Highest probability per epoch for one instance.
    pub fn max_probs(&self, instance: usize) -> impl Iterator<Item = f64> + '_ {
        (1..=self.epochs).map(move |e| self.probs(instance, e).iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Predicted label index at `epoch`; ties go to the earlier label.
    pub fn argmax(&self, instance: usize, epoch: usize) -> usize {
        let p = self.probs(instance, epoch);
        let mut best = 0;
        for (j, &v) in p.iter().enumerate() {
            if v > p[best] {
                best = j;
            }
        }
        best
    }

    /// Check density bookkeeping and per-record normalization.
    pub fn validate(&self) -> Result<(), LogError> {
        if self.is_empty() || self.epochs == 0 {
            return Err(LogError::Empty);
        }
        for i in 0..self.num_instances() {
            for e in 1..=self.epochs {
                check_probs(&self.ids[i], self.probs(i, e))?;
            }
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for i in 0..self.num_instances() {
            for e in 1..=self.epochs {
                let mut probs = serde_json::Map::new();
                for (label, &p) in self.labels.iter().zip(self.probs(i, e)) {
                    probs.insert(label.to_string(), serde_json::Value::from(p));
                }
                let record = LogRecord {
                    instance_id: self.ids[i].clone(),
                    epoch: e,
                    probs,
                    gold_label: self.labels[self.gold[i]].to_string(),
                };
                serde_json::to_writer(&mut out, &record)?;
                out.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    /// Parse and validate a JSONL log. Records may come in any order.
    ///
    /// Hard problems (missing epochs, bad sums, inconsistent label sets) are
    /// errors; harmless irregularities are returned as warnings.
    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<(Self, Vec<String>), LogError> {
        let mut warnings = Vec::new();
        let mut labels: Option<Vec<VarietyLabel>> = None;
        let mut order: Vec<String> = Vec::new();
        let mut per_id: HashMap<String, (usize, HashMap<usize, Vec<f64>>)> = HashMap::new();
        let mut max_epoch = 0;

        for (n, line) in reader.lines().enumerate() {
            let line_no = n + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| LogError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            if let Some(obj) = value.as_object() {
                let extra: Vec<_> = obj
                    .keys()
                    .filter(|k| !matches!(k.as_str(), "instance_id" | "epoch" | "probs" | "gold_label"))
                    .cloned()
                    .collect();
                if !extra.is_empty() {
                    warnings.push(format!("line {line_no}: ignoring unknown field(s) {}", extra.join(", ")));
                }
            }
            let record: LogRecord = serde_json::from_value(value).map_err(|e| LogError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            let parse_err = |message: String| LogError::Parse { line: line_no, message };
            if record.epoch == 0 {
                return Err(parse_err("epochs are numbered from 1".into()));
            }

            let keys: Vec<VarietyLabel> = record.probs.keys().map(|k| VarietyLabel::new(k.as_str())).collect();
            let labels = labels.get_or_insert_with(|| keys.clone());
            if keys != *labels {
                let same_set = keys.len() == labels.len()
                    && keys.iter().collect::<HashSet<_>>() == labels.iter().collect::<HashSet<_>>();
                if !same_set {
                    return Err(parse_err(format!(
                        "label set {:?} differs from the first record's {:?}",
                        keys.iter().map(VarietyLabel::as_str).collect::<Vec<_>>(),
                        labels.iter().map(VarietyLabel::as_str).collect::<Vec<_>>()
                    )));
                }
                warnings.push(format!("line {line_no}: probability keys listed in a different order"));
            }
            let mut probs = Vec::with_capacity(labels.len());
            for label in labels.iter() {
                let p = record.probs[label.as_str()]
                    .as_f64()
                    .ok_or_else(|| parse_err(format!("probability for `{label}` is not a number")))?;
                probs.push(p);
            }
            check_probs(&record.instance_id, &probs)?;
            let gold = labels
                .iter()
                .position(|l| l.as_str() == record.gold_label)
                .ok_or_else(|| LogError::Invalid {
                    id: record.instance_id.clone(),
                    message: format!("gold label `{}` is not among the probability labels", record.gold_label),
                })?;

            let entry = per_id.entry(record.instance_id.clone()).or_insert_with(|| {
                order.push(record.instance_id.clone());
                (gold, HashMap::new())
            });
            if entry.0 != gold {
                return Err(LogError::Invalid {
                    id: record.instance_id,
                    message: "gold label changes between epochs".into(),
                });
            }
            if entry.1.insert(record.epoch, probs).is_some() {
                return Err(LogError::Invalid {
                    id: record.instance_id,
                    message: format!("epoch {} appears twice", record.epoch),
                });
            }
            max_epoch = max_epoch.max(record.epoch);
        }

        let labels = labels.ok_or(LogError::Empty)?;
        let gold = order.iter().map(|id| per_id[id].0).collect();
        let mut log = EpochProbabilityLog::zeroed(labels, order.clone(), gold, max_epoch);
        for (i, id) in order.iter().enumerate() {
            let epochs = &per_id[id].1;
            for e in 1..=max_epoch {
                let p = epochs.get(&e).ok_or_else(|| LogError::NotDense {
                    id: id.clone(),
                    epoch: e,
                    epochs: max_epoch,
                })?;
                log.set_probs(i, e, p);
            }
        }
        Ok((log, warnings))
    }
}

fn check_probs(id: &str, probs: &[f64]) -> Result<(), LogError> {
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(LogError::Invalid {
            id: id.to_string(),
            message: format!("probability {p} outside [0, 1]"),
        });
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
        return Err(LogError::Invalid {
            id: id.to_string(),
            message: format!("probabilities sum to {sum}"),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scorer {
    DmMeanPred,
    DmStdPred,
    DmGoldConfidence,
    Random,
}

impl Scorer {
    pub const ALL: [Scorer; 4] = [
        Scorer::DmMeanPred,
        Scorer::DmStdPred,
        Scorer::DmGoldConfidence,
        Scorer::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scorer::DmMeanPred => "dm_mean_pred",
            Scorer::DmStdPred => "dm_std_pred",
            Scorer::DmGoldConfidence => "dm_gold_confidence",
            Scorer::Random => "random",
        }
    }

    /// Run this scorer. `seed` only matters for [`Scorer::Random`].
    pub fn score(self, log: &EpochProbabilityLog, seed: u64) -> Result<Vec<ScoreRecord>, ScoreError> {
        match self {
            Scorer::DmMeanPred => dm_mean_pred(log),
            Scorer::DmStdPred => dm_std_pred(log),
            Scorer::DmGoldConfidence => dm_gold_confidence(log),
            Scorer::Random => random_scores(log.ids(), seed),
        }
    }
}

impl fmt::Display for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scorer {
    type Err = ScoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scorer::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| ScoreError::UnknownScorer(s.to_string()))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("cannot score an empty log")]
    EmptyLog,
    #[error("duplicate instance id `{0}`")]
    DuplicateId(String),
    #[error("score for `{0}` is not a finite number")]
    NonFinite(String),
    #[error("unknown scorer `{0}`")]
    UnknownScorer(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub instance_id: String,
    pub scorer: Scorer,
    pub score: f64,
}

fn per_instance(
    log: &EpochProbabilityLog,
    scorer: Scorer,
    f: impl Fn(usize) -> f64,
) -> Result<Vec<ScoreRecord>, ScoreError> {
    if log.is_empty() || log.epochs() == 0 {
        return Err(ScoreError::EmptyLog);
    }
    Ok((0..log.num_instances())
        .map(|i| ScoreRecord {
            instance_id: log.ids()[i].clone(),
            scorer,
            score: f(i),
        })
        .collect())
}

/// Negated mean over epochs of the highest label probability.
pub fn dm_mean_pred(log: &EpochProbabilityLog) -> Result<Vec<ScoreRecord>, ScoreError> {
    let epochs = log.epochs() as f64;
    per_instance(log, Scorer::DmMeanPred, |i| -log.max_probs(i).sum::<f64>() / epochs)
}

/// Population standard deviation over epochs of the highest label probability.
pub fn dm_std_pred(log: &EpochProbabilityLog) -> Result<Vec<ScoreRecord>, ScoreError> {
    let epochs = log.epochs() as f64;
    per_instance(log, Scorer::DmStdPred, |i| {
        // Deviations are taken around the first epoch's value first, so a
        // constant series gives exactly zero.
        let first = log.max_probs(i).next().unwrap_or(0.0);
        let shift = log.max_probs(i).map(|m| m - first).sum::<f64>() / epochs;
        let var = log
            .max_probs(i)
            .map(|m| {
                let d = m - first - shift;
                d * d
            })
            .sum::<f64>()
            / epochs;
        var.sqrt()
    })
}

/// Negated mean gold-label probability (classic cartography confidence,
/// flipped so that hard instances score high).
pub fn dm_gold_confidence(log: &EpochProbabilityLog) -> Result<Vec<ScoreRecord>, ScoreError> {
    let epochs = log.epochs() as f64;
    per_instance(log, Scorer::DmGoldConfidence, |i| {
        let gold = log.gold_index(i);
        -(1..=log.epochs()).map(|e| log.probs(i, e)[gold]).sum::<f64>() / epochs
    })
}

/// Uniform `[0, 1)` score per id, drawn from `rng::keyed(seed, "random", id)`.
pub fn random_scores(ids: &[String], seed: u64) -> Result<Vec<ScoreRecord>, ScoreError> {
    let mut seen = HashSet::new();
    ids.iter()
        .map(|id| {
            if !seen.insert(id.as_str()) {
                return Err(ScoreError::DuplicateId(id.clone()));
            }
            Ok(ScoreRecord {
                instance_id: id.clone(),
                scorer: Scorer::Random,
                score: rng::keyed(seed, "random", id).next_f64(),
            })
        })
        .collect()
}

pub fn write_scores_csv<W: Write>(scores: &[ScoreRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "instance_id,scorer,score")?;
    for s in scores {
        writeln!(out, "{},{},{}", csv_field(&s.instance_id), s.scorer, s.score)?;
    }
    Ok(())
}

pub fn read_scores_csv<R: BufRead>(reader: R) -> Result<Vec<ScoreRecord>, ScoreError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (n, row) in rdr.records().enumerate() {
        let parse = |message: String| ScoreError::Parse { line: n + 2, message };
        let row = row.map_err(|e| parse(e.to_string()))?;
        if row.len() != 3 {
            return Err(parse(format!("expected 3 fields, found {}", row.len())));
        }
        out.push(ScoreRecord {
            instance_id: row[0].to_string(),
            scorer: row[1].parse()?,
            score: row[2].parse().map_err(|e| parse(format!("bad score: {e}")))?,
        });
    }
    Ok(out)
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    /// 1-based.
    pub rank: usize,
    pub instance_id: String,
    pub score: f64,
}

/// Instances in descending score order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankedList {
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.instance_id.as_str())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "rank,instance_id,score")?;
        for e in &self.entries {
            writeln!(out, "{},{},{}", e.rank, csv_field(&e.instance_id), e.score)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self, ScoreError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut entries = Vec::new();
        for (n, row) in rdr.records().enumerate() {
            let parse = |message: String| ScoreError::Parse { line: n + 2, message };
            let row = row.map_err(|e| parse(e.to_string()))?;
            if row.len() != 3 {
                return Err(parse(format!("expected 3 fields, found {}", row.len())));
            }
            entries.push(RankedEntry {
                rank: row[0].parse().map_err(|e| parse(format!("bad rank: {e}")))?,
                instance_id: row[1].to_string(),
                score: row[2].parse().map_err(|e| parse(format!("bad score: {e}")))?,
            });
        }
        Ok(Self { entries })
    }
}

/// Sort by descending score, breaking ties by ascending instance id.
pub fn rank_by_score(scores: &[ScoreRecord]) -> Result<RankedList, ScoreError> {
    let mut seen = HashSet::new();
    for s in scores {
        if !seen.insert(s.instance_id.as_str()) {
            return Err(ScoreError::DuplicateId(s.instance_id.clone()));
        }
        if !s.score.is_finite() {
            return Err(ScoreError::NonFinite(s.instance_id.clone()));
        }
    }
    let mut sorted: Vec<&ScoreRecord> = scores.iter().collect();
    sorted.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.instance_id.cmp(&b.instance_id))
    });
    Ok(RankedList {
        entries: sorted
            .into_iter()
            .enumerate()
            .map(|(k, s)| RankedEntry {
                rank: k + 1,
                instance_id: s.instance_id.clone(),
                score: s.score,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Binary log whose per-epoch max probabilities are `maxes` (label 0 wins).
    fn log_from_maxes(maxes: &[&[f64]]) -> EpochProbabilityLog {
        let epochs = maxes[0].len();
        let ids = (0..maxes.len()).map(|i| format!("i{i}")).collect();
        let mut log = EpochProbabilityLog::zeroed(vec!["A".into(), "B".into()], ids, vec![0; maxes.len()], epochs);
        for (i, row) in maxes.iter().enumerate() {
            for (e, &m) in row.iter().enumerate() {
                log.set_probs(i, e + 1, &[m, 1.0 - m]);
            }
        }
        log
    }

    #[test]
    fn hand_values() {
        let log = log_from_maxes(&[&[0.9, 0.6, 0.75], &[1.0, 1.0, 1.0], &[0.5, 0.5, 0.5]]);
        let mean = dm_mean_pred(&log).unwrap();
        assert!((mean[0].score + 0.75).abs() < 1e-12);
        assert_eq!(mean[1].score, -1.0);
        assert_eq!(mean[2].score, -0.5);
        let std = dm_std_pred(&log).unwrap();
        assert!((std[0].score - 0.122474).abs() < 1e-6);
        assert_eq!(std[1].score, 0.0);
    }

    #[test]
    fn constant_series_has_exactly_zero_variability() {
        let mut log = EpochProbabilityLog::zeroed(vec!["A".into(), "B".into()], vec!["x".into()], vec![0], 3);
        for e in 1..=3 {
            log.set_probs(0, e, &[0.3, 0.7]);
        }
        assert_eq!(dm_std_pred(&log).unwrap()[0].score, 0.0);
    }

    #[test]
    fn single_epoch_has_zero_variability() {
        let log = log_from_maxes(&[&[0.8], &[0.55]]);
        assert!(dm_std_pred(&log).unwrap().iter().all(|s| s.score == 0.0));
    }

    #[test]
    fn gold_confidence_hand_values() {
        let mut log = EpochProbabilityLog::zeroed(vec!["A".into(), "B".into()], vec!["x".into(), "y".into(), "z".into()], vec![0, 1, 0], 3);
        for (e, p) in [0.2, 0.4, 0.6].into_iter().enumerate() {
            log.set_probs(0, e + 1, &[p, 1.0 - p]);
            log.set_probs(1, e + 1, &[0.0, 1.0]);
            log.set_probs(2, e + 1, &[0.0, 1.0]);
        }
        let s = dm_gold_confidence(&log).unwrap();
        assert!((s[0].score + 0.4).abs() < 1e-12);
        assert_eq!(s[1].score, -1.0);
        assert_eq!(s[2].score, 0.0);
    }

    #[test]
    fn empty_log_is_an_error() {
        let log = EpochProbabilityLog::zeroed(vec!["A".into(), "B".into()], vec![], vec![], 3);
        assert_eq!(dm_mean_pred(&log), Err(ScoreError::EmptyLog));
        assert_eq!(dm_std_pred(&log), Err(ScoreError::EmptyLog));
    }

    #[test]
    fn random_scores_are_keyed_by_id() {
        let ids: Vec<String> = (0..50).map(|i| format!("id{i}")).collect();
        let mut rev = ids.clone();
        rev.reverse();
        let a: HashMap<_, _> = random_scores(&ids, 42).unwrap().into_iter().map(|s| (s.instance_id, s.score)).collect();
        let b: HashMap<_, _> = random_scores(&rev, 42).unwrap().into_iter().map(|s| (s.instance_id, s.score)).collect();
        assert_eq!(a, b);
        assert!(random_scores(&[], 1).unwrap().is_empty());
        let dup = vec!["a".to_string(), "a".to_string()];
        assert_eq!(random_scores(&dup, 1), Err(ScoreError::DuplicateId("a".into())));
    }

    fn rec(id: &str, score: f64) -> ScoreRecord {
        ScoreRecord {
            instance_id: id.into(),
            scorer: Scorer::Random,
            score,
        }
    }

    #[test]
    fn ranking_order_and_ties() {
        let r = rank_by_score(&[rec("b", 0.1), rec("a", 0.9)]).unwrap();
        assert_eq!(r.ids().collect::<Vec<_>>(), ["a", "b"]);
        let r = rank_by_score(&[rec("b", 0.5), rec("a", 0.5)]).unwrap();
        assert_eq!(r.ids().collect::<Vec<_>>(), ["a", "b"]);
        assert_eq!(r.entries[1].rank, 2);
        assert_eq!(
            rank_by_score(&[rec("a", 0.5), rec("a", 0.4)]),
            Err(ScoreError::DuplicateId("a".into()))
        );
    }

    #[test]
    fn jsonl_round_trip() {
        let log = log_from_maxes(&[&[0.9, 0.6], &[0.7, 0.8]]);
        let mut buf = Vec::new();
        log.write_jsonl(&mut buf).unwrap();
        let (back, warnings) = EpochProbabilityLog::read_jsonl(&buf[..]).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(back, log);
    }

    #[test]
    fn ingestion_rejects_sparse_and_unnormalized_logs() {
        let sparse = r#"{"instance_id":"a","epoch":1,"probs":{"A":0.5,"B":0.5},"gold_label":"A"}
{"instance_id":"a","epoch":2,"probs":{"A":0.5,"B":0.5},"gold_label":"A"}
{"instance_id":"b","epoch":2,"probs":{"A":0.5,"B":0.5},"gold_label":"A"}
"#;
        assert!(matches!(
            EpochProbabilityLog::read_jsonl(sparse.as_bytes()),
            Err(LogError::NotDense { epoch: 1, .. })
        ));
        let bad_sum = r#"{"instance_id":"a","epoch":1,"probs":{"A":0.5,"B":0.6},"gold_label":"A"}"#;
        assert!(matches!(
            EpochProbabilityLog::read_jsonl(bad_sum.as_bytes()),
            Err(LogError::Invalid { .. })
        ));
        let extra = r#"{"instance_id":"a","epoch":1,"probs":{"A":0.5,"B":0.5},"gold_label":"A","loss":0.7}"#;
        let (_, warnings) = EpochProbabilityLog::read_jsonl(extra.as_bytes()).unwrap();
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn epoch_major_order_is_accepted() {
        let text = r#"{"instance_id":"a","epoch":1,"probs":{"A":0.9,"B":0.1},"gold_label":"A"}
{"instance_id":"b","epoch":1,"probs":{"A":0.2,"B":0.8},"gold_label":"B"}
{"instance_id":"a","epoch":2,"probs":{"A":0.8,"B":0.2},"gold_label":"A"}
{"instance_id":"b","epoch":2,"probs":{"A":0.3,"B":0.7},"gold_label":"B"}
"#;
        let (log, warnings) = EpochProbabilityLog::read_jsonl(text.as_bytes()).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(log.epochs(), 2);
        assert_eq!(log.probs(1, 2), &[0.3, 0.7]);
        assert_eq!(log.gold_index(1), 1);
    }
}
