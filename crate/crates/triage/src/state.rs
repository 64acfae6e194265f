use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;
use varmap_core::analysis::{token_attribution, Attribution, TokenContribution};
use varmap_core::corpus::{AnnotationRecord, DiscardReason, Split};
use varmap_core::{Dataset, Instance, LinearModel, RankedList};

use crate::decisions::{DecidedLabel, LabelDecision};

#[derive(Debug, Error)]
pub enum TriageError {
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("unknown scorer `{0}`")]
    UnknownScorer(String),
    #[error("no ranking loaded")]
    NoRankings,
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("ranking `{scorer}` references unknown instance `{id}`")]
    RankingMismatch { scorer: String, id: String },
    #[error("decision log: {0}")]
    Log(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How many tokens a candidate view highlights.
pub const TOP_TOKENS: usize = 5;

/// Something a reviewer can decide on: a modeling instance, or an instance
/// set aside because its annotators all disagreed.
#[derive(Debug, Clone)]
struct Item {
    id: String,
    raw_text: String,
    text: String,
    current_label: Option<String>,
    is_common: bool,
    annotations: Vec<AnnotationRecord>,
    set_aside: bool,
}

/// Outcome of the decisions on one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "label", rename_all = "snake_case")]
pub enum Resolution {
    Undecided,
    Resolved(DecidedLabel),
    /// Several labels share the highest vote count.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateView {
    pub id: String,
    pub text: String,
    pub rank: usize,
    /// `None` for set-aside instances queued after the ranking.
    pub score: Option<f64>,
    pub current_label: Option<String>,
    pub is_common: bool,
    pub decided: bool,
    pub top_tokens: Vec<TokenContribution>,
    pub attribution: Option<Attribution>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriageStats {
    pub reviewed_count: usize,
    pub total_count: usize,
    pub confirmed_common_in_reviewed: usize,
    /// `None` until something has been reviewed.
    pub live_precision: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankInfo {
    pub rank: usize,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceDetail {
    pub id: String,
    pub raw_text: String,
    pub text: String,
    pub current_label: Option<String>,
    pub is_common: bool,
    pub set_aside: bool,
    pub annotations: Vec<AnnotationRecord>,
    pub ranks: BTreeMap<String, RankInfo>,
    pub attribution: Option<Attribution>,
    pub decisions: Vec<LabelDecision>,
    pub resolution: Resolution,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExportReport {
    /// Irrelevant by majority; left out of the export.
    pub dropped: Vec<String>,
    /// Tied decisions; exported with their original label.
    pub unresolved: Vec<String>,
    /// Exported with a label or common flag taken from the decisions.
    pub relabeled: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Applied {
    pub superseded: bool,
}

/// The full review state. Mutated only through [`TriageState::apply`].
#[derive(Debug, Clone)]
pub struct TriageState {
    dataset: Dataset,
    items: Vec<Item>,
    index: HashMap<String, usize>,
    /// Per scorer: item indices in queue order with their scores.
    queues: BTreeMap<String, Vec<(usize, Option<f64>)>>,
    model: Option<LinearModel>,
    /// Per item, the active decision of each annotator.
    decisions: Vec<BTreeMap<String, LabelDecision>>,
}

impl TriageState {
    /// Builds a state with no decisions. Rankings must only reference
    /// dataset instances; set-aside disagreement instances are queued after
    /// the ranked ones in every queue.
    pub fn new(
        dataset: Dataset,
        rankings: BTreeMap<String, RankedList>,
        model: Option<LinearModel>,
    ) -> Result<Self, TriageError> {
        let mut items: Vec<Item> = dataset.instances.iter().map(item_from_instance).collect();
        let first_aside = items.len();
        items.extend(
            dataset
                .set_aside
                .iter()
                .filter(|s| s.reason == DiscardReason::Disagreement)
                .map(|s| Item {
                    id: s.id.clone(),
                    raw_text: s.raw_text.clone(),
                    text: s.raw_text.clone(),
                    current_label: None,
                    is_common: false,
                    annotations: s.annotations.clone(),
                    set_aside: true,
                }),
        );
        let mut index = HashMap::new();
        for (i, item) in items.iter().enumerate() {
            if index.insert(item.id.clone(), i).is_some() {
                return Err(TriageError::Invalid(format!("duplicate instance id `{}`", item.id)));
            }
        }
        let mut queues = BTreeMap::new();
        for (scorer, ranked) in rankings {
            let mut queue = Vec::with_capacity(ranked.len());
            for entry in &ranked.entries {
                match index.get(&entry.instance_id) {
                    Some(&i) if i < first_aside => queue.push((i, Some(entry.score))),
                    _ => {
                        return Err(TriageError::RankingMismatch {
                            scorer,
                            id: entry.instance_id.clone(),
                        })
                    }
                }
            }
            queue.extend((first_aside..items.len()).map(|i| (i, None)));
            queues.insert(scorer, queue);
        }
        let decisions = vec![BTreeMap::new(); items.len()];
        Ok(Self {
            dataset,
            items,
            index,
            queues,
            model,
            decisions,
        })
    }

    /// A fresh state with `log` applied in order.
    pub fn replay(mut self, log: &[LabelDecision]) -> Result<Self, TriageError> {
        for (n, d) in log.iter().enumerate() {
            self.apply(d.clone())
                .map_err(|e| TriageError::Log(format!("entry {}: {e}", n + 1)))?;
        }
        Ok(self)
    }

    /// Checks a decision without applying it.
    pub fn check(&self, decision: &LabelDecision) -> Result<(), TriageError> {
        if decision.annotator_id.trim().is_empty() {
            return Err(TriageError::Invalid("annotator_id must not be empty".into()));
        }
        if !self.index.contains_key(&decision.instance_id) {
            return Err(TriageError::UnknownInstance(decision.instance_id.clone()));
        }
        Ok(())
    }

    pub fn apply(&mut self, decision: LabelDecision) -> Result<Applied, TriageError> {
        self.check(&decision)?;
        let i = self.index[&decision.instance_id];
        let superseded = self.decisions[i]
            .insert(decision.annotator_id.clone(), decision)
            .is_some();
        Ok(Applied { superseded })
    }

    pub fn scorers(&self) -> impl Iterator<Item = &str> {
        self.queues.keys().map(String::as_str)
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    fn queue(&self, scorer: Option<&str>) -> Result<&[(usize, Option<f64>)], TriageError> {
        if self.queues.is_empty() {
            return Err(TriageError::NoRankings);
        }
        let name = match scorer {
            Some(s) => s,
            None if self.queues.contains_key("dm_mean_pred") => "dm_mean_pred",
            None => self.queues.keys().next().unwrap(),
        };
        self.queues
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| TriageError::UnknownScorer(name.to_string()))
    }

    /// The highest-ranked instances `annotator` has not decided yet (with no
    /// annotator: instances nobody has decided), in rank order.
    pub fn next_batch(
        &self,
        scorer: Option<&str>,
        limit: usize,
        annotator: Option<&str>,
    ) -> Result<Vec<CandidateView>, TriageError> {
        if limit == 0 {
            return Err(TriageError::Invalid("limit must be at least 1".into()));
        }
        let queue = self.queue(scorer)?;
        Ok(queue
            .iter()
            .enumerate()
            .filter(|(_, (i, _))| match annotator {
                Some(a) => !self.decisions[*i].contains_key(a),
                None => self.decisions[*i].is_empty(),
            })
            .take(limit)
            .map(|(pos, &(i, score))| self.candidate(i, pos + 1, score))
            .collect())
    }

    fn candidate(&self, i: usize, rank: usize, score: Option<f64>) -> CandidateView {
        let item = &self.items[i];
        let attribution = self.attribution(&item.text);
        CandidateView {
            id: item.id.clone(),
            text: item.text.clone(),
            rank,
            score,
            current_label: item.current_label.clone(),
            is_common: item.is_common,
            decided: !self.decisions[i].is_empty(),
            top_tokens: attribution
                .as_ref()
                .map(|a| a.strongest(TOP_TOKENS).into_iter().cloned().collect())
                .unwrap_or_default(),
            attribution,
        }
    }

    /// Attribution toward variety A, so positive weights lean A and
    /// negative weights lean B.
    fn attribution(&self, text: &str) -> Option<Attribution> {
        let model = self.model.as_ref()?;
        token_attribution(model, text, &self.dataset.labels.variety_a).ok()
    }

    pub fn resolution(&self, id: &str) -> Result<Resolution, TriageError> {
        let i = self
            .index
            .get(id)
            .ok_or_else(|| TriageError::UnknownInstance(id.to_string()))?;
        Ok(resolve(self.decisions[*i].values()))
    }

    pub fn stats(&self) -> TriageStats {
        let mut reviewed = 0;
        let mut confirmed = 0;
        for d in &self.decisions {
            if d.is_empty() {
                continue;
            }
            reviewed += 1;
            if resolve(d.values()) == Resolution::Resolved(DecidedLabel::Common) {
                confirmed += 1;
            }
        }
        TriageStats {
            reviewed_count: reviewed,
            total_count: self.items.len(),
            confirmed_common_in_reviewed: confirmed,
            live_precision: (reviewed > 0).then(|| confirmed as f64 / reviewed as f64),
        }
    }

    pub fn instance(&self, id: &str) -> Result<InstanceDetail, TriageError> {
        let i = *self
            .index
            .get(id)
            .ok_or_else(|| TriageError::UnknownInstance(id.to_string()))?;
        let item = &self.items[i];
        let ranks = self
            .queues
            .iter()
            .filter_map(|(scorer, queue)| {
                queue
                    .iter()
                    .position(|(j, _)| *j == i)
                    .map(|pos| (scorer.clone(), RankInfo { rank: pos + 1, score: queue[pos].1 }))
            })
            .collect();
        Ok(InstanceDetail {
            id: item.id.clone(),
            raw_text: item.raw_text.clone(),
            text: item.text.clone(),
            current_label: item.current_label.clone(),
            is_common: item.is_common,
            set_aside: item.set_aside,
            annotations: item.annotations.clone(),
            ranks,
            attribution: self.attribution(&item.text),
            decisions: self.decisions[i].values().cloned().collect(),
            resolution: resolve(self.decisions[i].values()),
        })
    }

    /// The dataset with resolved decisions applied. Set-aside instances are
    /// included once the decisions give them a label.
    pub fn export_merged(&self) -> (Dataset, ExportReport) {
        let labels = &self.dataset.labels;
        let mut report = ExportReport::default();
        let mut instances = Vec::with_capacity(self.items.len());
        for (i, item) in self.items.iter().enumerate() {
            let base = match self.dataset.instances.get(i) {
                Some(inst) => inst.clone(),
                None => Instance {
                    id: item.id.clone(),
                    raw_text: item.raw_text.clone(),
                    normalized_text: None,
                    train_label: None,
                    is_common: false,
                    annotations: item.annotations.clone(),
                    split: Split::Train,
                },
            };
            match resolve(self.decisions[i].values()) {
                Resolution::Undecided if item.set_aside => {}
                Resolution::Undecided => instances.push(base),
                Resolution::Unresolved => {
                    report.unresolved.push(item.id.clone());
                    if !item.set_aside {
                        instances.push(base);
                    }
                }
                Resolution::Resolved(DecidedLabel::Irrelevant) => report.dropped.push(item.id.clone()),
                Resolution::Resolved(label) => {
                    let mut inst = base;
                    match label {
                        DecidedLabel::VarietyA => {
                            inst.train_label = Some(labels.variety_a.clone());
                            inst.is_common = false;
                        }
                        DecidedLabel::VarietyB => {
                            inst.train_label = Some(labels.variety_b.clone());
                            inst.is_common = false;
                        }
                        _ => inst.is_common = true,
                    }
                    let original = self.dataset.instances.get(i);
                    if original.map(|o| (&o.train_label, o.is_common)) != Some((&inst.train_label, inst.is_common)) {
                        report.relabeled.push(item.id.clone());
                    }
                    instances.push(inst);
                }
            }
        }
        let merged = Dataset {
            labels: labels.clone(),
            instances,
            rejections: Vec::new(),
            set_aside: Vec::new(),
        };
        (merged, report)
    }
}

fn item_from_instance(inst: &Instance) -> Item {
    Item {
        id: inst.id.clone(),
        raw_text: inst.raw_text.clone(),
        text: inst.text().to_string(),
        current_label: inst.train_label.as_ref().map(|l| l.to_string()),
        is_common: inst.is_common,
        annotations: inst.annotations.clone(),
        set_aside: false,
    }
}

/// Plurality with a unique winner.
fn resolve<'a>(decisions: impl Iterator<Item = &'a LabelDecision>) -> Resolution {
    let mut counts: BTreeMap<DecidedLabel, usize> = BTreeMap::new();
    for d in decisions {
        *counts.entry(d.decided_label).or_default() += 1;
    }
    let Some(best) = counts.values().copied().max() else {
        return Resolution::Undecided;
    };
    let mut leaders = counts.iter().filter(|(_, c)| **c == best);
    match (leaders.next(), leaders.next()) {
        (Some((label, _)), None) => Resolution::Resolved(*label),
        _ => Resolution::Unresolved,
    }
}
