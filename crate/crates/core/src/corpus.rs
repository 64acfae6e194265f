//! Dataset loading, multi-annotator aggregation and single-label simulation.
//!
//! Three on-disk formats are understood, all UTF-8 with a header row:
//!
//! * `dsl_tl` (comma-separated): `id,text,original_label,true_label[,split]`.
//!   The original label is the training label; `true_label` is the
//!   re-annotation, where the common code marks a common example.
//! * `cuban_tsv` (tab-separated): `id,text` followed by five columns per
//!   annotator named `<annotator>_cuban_variety`, `<annotator>_not_cuban_variety`,
//!   `<annotator>_specific_variety`, `<annotator>_not_able_to_identify`,
//!   `<annotator>_irrelevant`. Rows are aggregated with [`aggregate_annotations`].
//! * `generic_csv` (comma-separated): `id,text,train_label,is_common[,split]`.
//!   `train_label` may be empty for common rows that still await
//!   [`assign_single_labels`].
//!
//! Row-level problems (unknown label codes, malformed annotation cells) are
//! collected as [`Rejection`]s and the row is skipped; structural problems
//! (missing columns, duplicate ids) fail the whole load. Pass
//! [`LoadOptions::strict`] to turn rejections into errors as well.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("duplicate instance id `{0}`")]
    DuplicateId(String),
    #[error("row `{id}`: {reason}")]
    Rejected { id: String, reason: String },
    #[error("unknown label code `{0}`")]
    UnknownLabel(String),
    #[error("unknown dataset format `{0}` (expected dsl_tl, cuban_tsv or generic_csv)")]
    UnknownFormat(String),
    #[error("malformed annotation from `{0}`: both cuban_variety and not_cuban_variety are set")]
    MalformedRecord(String),
    #[error("annotation from `{0}` carries no label signal")]
    NoSignal(String),
    #[error("cannot aggregate an empty annotation list")]
    NoRecords,
    #[error("instance `{id}` has {count} annotation record(s); at least 2 are required")]
    TooFewRecords { id: String, count: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarietyLabel(String);

impl VarietyLabel {
    pub fn new(code: impl Into<String>) -> Self {
        Self(code.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VarietyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VarietyLabel {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelRole {
    VarietyA,
    VarietyB,
    Common,
}

/// The two variety codes and the common code a dataset is allowed to use.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    pub variety_a: VarietyLabel,
    pub variety_b: VarietyLabel,
    pub common: VarietyLabel,
}

impl LabelSet {
    pub fn new(a: &str, b: &str, common: &str) -> Self {
        Self {
            variety_a: a.into(),
            variety_b: b.into(),
            common: common.into(),
        }
    }

    /// Argentinian vs Peninsular Spanish.
    pub fn dsl_tl() -> Self {
        Self::new("ES-AR", "ES-ES", "ES")
    }

    /// Cuban vs non-Cuban Spanish.
    pub fn cuban() -> Self {
        Self::new("ES-CU", "not-ES-CU", "ES")
    }

    pub fn role(&self, code: &str) -> Option<LabelRole> {
        if code == self.variety_a.as_str() {
            Some(LabelRole::VarietyA)
        } else if code == self.variety_b.as_str() {
            Some(LabelRole::VarietyB)
        } else if code == self.common.as_str() {
            Some(LabelRole::Common)
        } else {
            None
        }
    }

    pub fn label(&self, role: LabelRole) -> &VarietyLabel {
        match role {
            LabelRole::VarietyA => &self.variety_a,
            LabelRole::VarietyB => &self.variety_b,
            LabelRole::Common => &self.common,
        }
    }

    /// The two variety codes, in declaration order.
    pub fn varieties(&self) -> [VarietyLabel; 2] {
        [self.variety_a.clone(), self.variety_b.clone()]
    }

    fn parse_variety(&self, code: &str) -> Result<VarietyLabel, CorpusError> {
        match self.role(code) {
            Some(LabelRole::VarietyA | LabelRole::VarietyB) => Ok(VarietyLabel::new(code)),
            _ => Err(CorpusError::UnknownLabel(code.to_string())),
        }
    }
}

/// One annotator's judgement of one instance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub annotator_id: String,
    pub cuban_variety: bool,
    pub not_cuban_variety: bool,
    /// Free-text variety name (e.g. "ES-CL"); stored but not used for scoring.
    pub specific_variety: Option<String>,
    pub not_able_to_identify: bool,
    pub irrelevant: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Dev,
    Test,
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" | "train" => Ok(Split::Train),
            "dev" | "validation" | "valid" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub raw_text: String,
    pub normalized_text: Option<String>,
    /// One of the two variety codes. `None` only for common instances that
    /// have not been through [`assign_single_labels`] yet.
    pub train_label: Option<VarietyLabel>,
    pub is_common: bool,
    pub annotations: Vec<AnnotationRecord>,
    pub split: Split,
}

impl Instance {
    /// Normalized text when available, raw text otherwise.
    pub fn text(&self) -> &str {
        self.normalized_text.as_deref().unwrap_or(&self.raw_text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscardReason {
    Irrelevant,
    Disagreement,
}

impl fmt::Display for DiscardReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiscardReason::Irrelevant => "irrelevant",
            DiscardReason::Disagreement => "disagreement",
        })
    }
}

/// An annotated row that was kept out of the modeling data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetAside {
    pub id: String,
    pub raw_text: String,
    pub annotations: Vec<AnnotationRecord>,
    pub reason: DiscardReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub labels: LabelSet,
    pub instances: Vec<Instance>,
    /// Rows dropped at load time, reported as `id<TAB>reason`.
    pub rejections: Vec<Rejection>,
    /// Irrelevant and disagreement rows; disagreements feed the triage queue.
    pub set_aside: Vec<SetAside>,
}

impl Dataset {
    pub fn new(labels: LabelSet, instances: Vec<Instance>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for inst in &instances {
            if !seen.insert(inst.id.as_str()) {
                return Err(CorpusError::DuplicateId(inst.id.clone()));
            }
        }
        Ok(Self {
            labels,
            instances,
            rejections: Vec::new(),
            set_aside: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.id == id)
    }

    /// id → position lookup table.
    pub fn index(&self) -> HashMap<&str, usize> {
        self.instances
            .iter()
            .enumerate()
            .map(|(pos, inst)| (inst.id.as_str(), pos))
            .collect()
    }

    /// id → common flag, the ground truth for ranking evaluation.
    pub fn common_flags(&self) -> HashMap<String, bool> {
        self.instances
            .iter()
            .map(|i| (i.id.clone(), i.is_common))
            .collect()
    }

    pub fn common_count(&self) -> usize {
        self.instances.iter().filter(|i| i.is_common).count()
    }

    pub fn write_rejections<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.rejections {
            writeln!(out, "{}\t{}", r.id, r.reason)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    DslTl,
    CubanTsv,
    GenericCsv,
}

impl DatasetFormat {
    pub fn default_labels(self) -> LabelSet {
        match self {
            DatasetFormat::DslTl => LabelSet::dsl_tl(),
            DatasetFormat::CubanTsv | DatasetFormat::GenericCsv => LabelSet::cuban(),
        }
    }

    fn delimiter(self) -> u8 {
        match self {
            DatasetFormat::CubanTsv => b'\t',
            DatasetFormat::DslTl | DatasetFormat::GenericCsv => b',',
        }
    }
}

impl FromStr for DatasetFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dsl_tl" => Ok(DatasetFormat::DslTl),
            "cuban_tsv" => Ok(DatasetFormat::CubanTsv),
            "generic_csv" => Ok(DatasetFormat::GenericCsv),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetFormat::DslTl => "dsl_tl",
            DatasetFormat::CubanTsv => "cuban_tsv",
            DatasetFormat::GenericCsv => "generic_csv",
        })
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub labels: LabelSet,
    /// Fail on the first rejected row instead of reporting it.
    pub strict: bool,
}

impl LoadOptions {
    pub fn for_format(format: DatasetFormat) -> Self {
        Self {
            labels: format.default_labels(),
            strict: false,
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Dataset, CorpusError> {
    load_dataset_with(path, format, &LoadOptions::for_format(format))
}

pub fn load_dataset_with(
    path: impl AsRef<Path>,
    format: DatasetFormat,
    options: &LoadOptions,
) -> Result<Dataset, CorpusError> {
    let file = std::fs::File::open(path)?;
    read_dataset(file, format, options)
}

pub fn read_dataset<R: Read>(
    reader: R,
    format: DatasetFormat,
    options: &LoadOptions,
) -> Result<Dataset, CorpusError> {
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(format.delimiter())
        .flexible(true)
        .has_headers(true)
        .quoting(format != DatasetFormat::CubanTsv)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let mut dataset = Dataset {
        labels: options.labels.clone(),
        instances: Vec::new(),
        rejections: Vec::new(),
        set_aside: Vec::new(),
    };
    if headers.is_empty() {
        return Ok(dataset);
    }
    let columns = Columns::new(&headers);
    let layout = RowLayout::resolve(format, &columns)?;

    let mut seen: HashSet<String> = HashSet::new();
    for (line, row) in csv.records().enumerate() {
        let row = row?;
        if row.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let id = columns
            .get(&row, "id")
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().to_string())
            .unwrap_or_else(|| format!("<row {}>", line + 2));
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId(id));
        }
        match layout.parse_row(&row, &columns, &id, &options.labels) {
            Ok(Parsed::Keep(inst)) => dataset.instances.push(inst),
            Ok(Parsed::SetAside(aside)) => dataset.set_aside.push(aside),
            Err(reason) => {
                if options.strict {
                    return Err(CorpusError::Rejected { id, reason });
                }
                dataset.rejections.push(Rejection { id, reason });
            }
        }
    }
    Ok(dataset)
}

struct Columns {
    by_name: HashMap<String, usize>,
}

impl Columns {
    fn new(headers: &csv::StringRecord) -> Self {
        let by_name = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().trim_start_matches('\u{feff}').to_string(), i))
            .collect();
        Self { by_name }
    }

    fn has(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    fn require(&self, name: &str) -> Result<(), CorpusError> {
        if self.has(name) {
            Ok(())
        } else {
            Err(CorpusError::MissingColumn(name.to_string()))
        }
    }

    fn get<'r>(&self, row: &'r csv::StringRecord, name: &str) -> Option<&'r str> {
        self.by_name.get(name).and_then(|&i| row.get(i))
    }

    fn field<'r>(&self, row: &'r csv::StringRecord, name: &str) -> Result<&'r str, String> {
        self.get(row, name)
            .ok_or_else(|| format!("missing value for column `{name}`"))
    }
}

const ANNOTATION_FIELDS: [&str; 5] = [
    "cuban_variety",
    "not_cuban_variety",
    "specific_variety",
    "not_able_to_identify",
    "irrelevant",
];

enum RowLayout {
    DslTl,
    CubanTsv { annotators: Vec<String> },
    GenericCsv,
}

enum Parsed {
    Keep(Instance),
    SetAside(SetAside),
}

impl RowLayout {
    fn resolve(format: DatasetFormat, columns: &Columns) -> Result<Self, CorpusError> {
        columns.require("id")?;
        columns.require("text")?;
        match format {
            DatasetFormat::DslTl => {
                columns.require("original_label")?;
                columns.require("true_label")?;
                Ok(RowLayout::DslTl)
            }
            DatasetFormat::GenericCsv => {
                columns.require("train_label")?;
                columns.require("is_common")?;
                Ok(RowLayout::GenericCsv)
            }
            DatasetFormat::CubanTsv => {
                let mut annotators: Vec<String> = columns
                    .by_name
                    .keys()
                    .filter_map(|k| k.strip_suffix("_irrelevant").map(str::to_string))
                    .collect();
                annotators.sort();
                if annotators.is_empty() {
                    return Err(CorpusError::MissingColumn("<annotator>_irrelevant".into()));
                }
                for a in &annotators {
                    for field in ANNOTATION_FIELDS {
                        columns.require(&format!("{a}_{field}"))?;
                    }
                }
                Ok(RowLayout::CubanTsv { annotators })
            }
        }
    }

    fn parse_row(
        &self,
        row: &csv::StringRecord,
        columns: &Columns,
        id: &str,
        labels: &LabelSet,
    ) -> Result<Parsed, String> {
        let text = columns.field(row, "text")?.to_string();
        let split = match columns.get(row, "split") {
            Some(s) => s.parse::<Split>()?,
            None => Split::Train,
        };
        let mut inst = Instance {
            id: id.to_string(),
            raw_text: text,
            normalized_text: None,
            train_label: None,
            is_common: false,
            annotations: Vec::new(),
            split,
        };
        match self {
            RowLayout::DslTl => {
                let original = columns.field(row, "original_label")?.trim();
                let reannotated = columns.field(row, "true_label")?.trim();
                let train = labels
                    .parse_variety(original)
                    .map_err(|_| format!("unknown original label `{original}`"))?;
                if labels.role(reannotated).is_none() {
                    return Err(format!("unknown label `{reannotated}`"));
                }
                inst.train_label = Some(train);
                inst.is_common = reannotated == labels.common.as_str();
                Ok(Parsed::Keep(inst))
            }
            RowLayout::GenericCsv => {
                inst.is_common = parse_bool(columns.field(row, "is_common")?)
                    .ok_or_else(|| "is_common is not a boolean".to_string())?;
                let code = columns.field(row, "train_label")?.trim();
                if code.is_empty() {
                    if !inst.is_common {
                        return Err("empty train_label on a non-common row".into());
                    }
                } else {
                    inst.train_label = Some(
                        labels
                            .parse_variety(code)
                            .map_err(|_| format!("unknown label `{code}`"))?,
                    );
                }
                Ok(Parsed::Keep(inst))
            }
            RowLayout::CubanTsv { annotators } => {
                let mut records = Vec::with_capacity(annotators.len());
                for a in annotators {
                    let flag = |field: &str| -> Result<bool, String> {
                        let raw = columns.field(row, &format!("{a}_{field}"))?;
                        parse_bool(raw).ok_or_else(|| format!("{a}_{field}: `{raw}` is not a boolean"))
                    };
                    let specific = columns
                        .field(row, &format!("{a}_specific_variety"))?
                        .trim();
                    let specific_variety = match specific {
                        "" | "0" => None,
                        s if parse_bool(s) == Some(false) => None,
                        s => Some(s.to_string()),
                    };
                    records.push(AnnotationRecord {
                        annotator_id: a.clone(),
                        cuban_variety: flag("cuban_variety")?,
                        not_cuban_variety: flag("not_cuban_variety")?,
                        specific_variety,
                        not_able_to_identify: flag("not_able_to_identify")?,
                        irrelevant: flag("irrelevant")?,
                    });
                }
                match aggregate_annotations_with(&records, labels).map_err(|e| e.to_string())? {
                    Aggregation::Label(label) => {
                        inst.is_common = label == labels.common;
                        if !inst.is_common {
                            inst.train_label = Some(label);
                        }
                        inst.annotations = records;
                        Ok(Parsed::Keep(inst))
                    }
                    Aggregation::Discard(reason) => Ok(Parsed::SetAside(SetAside {
                        id: inst.id,
                        raw_text: inst.raw_text,
                        annotations: records,
                        reason,
                    })),
                }
            }
        }
    }
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "t" | "yes" | "y" | "x" => Some(true),
        "0" | "false" | "f" | "no" | "n" | "" => Some(false),
        _ => None,
    }
}

/// Write a dataset in `generic_csv` layout.
pub fn write_generic_csv<W: Write>(dataset: &Dataset, out: W) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "text", "train_label", "is_common", "split"])?;
    for inst in &dataset.instances {
        let label = inst.train_label.as_ref().map(VarietyLabel::as_str).unwrap_or("");
        let split = inst.split.to_string();
        w.write_record([
            inst.id.as_str(),
            inst.raw_text.as_str(),
            label,
            if inst.is_common { "true" } else { "false" },
            split.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Aggregation {
    Label(VarietyLabel),
    Discard(DiscardReason),
}

/// The label a single annotator's record stands for.
///
/// `cuban_variety` maps to variety A, `not_cuban_variety` (or a named
/// specific variety) to variety B, and a bare `not_able_to_identify` to the
/// common code.
pub fn annotator_label(record: &AnnotationRecord, labels: &LabelSet) -> Result<VarietyLabel, CorpusError> {
    if record.cuban_variety && record.not_cuban_variety {
        return Err(CorpusError::MalformedRecord(record.annotator_id.clone()));
    }
    if record.cuban_variety {
        Ok(labels.variety_a.clone())
    } else if record.not_cuban_variety || record.specific_variety.is_some() {
        Ok(labels.variety_b.clone())
    } else if record.not_able_to_identify {
        Ok(labels.common.clone())
    } else {
        Err(CorpusError::NoSignal(record.annotator_id.clone()))
    }
}

pub fn aggregate_annotations(records: &[AnnotationRecord]) -> Result<Aggregation, CorpusError> {
    aggregate_annotations_with(records, &LabelSet::cuban())
}

/// Two-or-more-agree aggregation; any irrelevant mark discards the instance.
pub fn aggregate_annotations_with(
    records: &[AnnotationRecord],
    labels: &LabelSet,
) -> Result<Aggregation, CorpusError> {
    if records.is_empty() {
        return Err(CorpusError::NoRecords);
    }
    if records.iter().any(|r| r.irrelevant) {
        return Ok(Aggregation::Discard(DiscardReason::Irrelevant));
    }
    let counts = vote_counts(records, labels)?;
    let best = counts.values().copied().max().unwrap_or(0);
    let leaders: Vec<_> = counts.iter().filter(|(_, &c)| c == best).collect();
    if best >= 2 && leaders.len() == 1 {
        Ok(Aggregation::Label(leaders[0].0.clone()))
    } else {
        Ok(Aggregation::Discard(DiscardReason::Disagreement))
    }
}

fn vote_counts(
    records: &[AnnotationRecord],
    labels: &LabelSet,
) -> Result<BTreeMap<VarietyLabel, usize>, CorpusError> {
    let mut counts = BTreeMap::new();
    for r in records {
        *counts.entry(annotator_label(r, labels)?).or_insert(0) += 1;
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgreementKind {
    /// Every annotator gave the same label.
    Full,
    /// Some label was shared, but not by everyone (2-vs-1 for three annotators).
    Partial,
    /// All labels distinct.
    Disagreement,
}

pub fn agreement_kind(records: &[AnnotationRecord], labels: &LabelSet) -> Result<AgreementKind, CorpusError> {
    let counts = vote_counts(records, labels)?;
    let best = counts.values().copied().max().unwrap_or(0);
    Ok(if best == records.len() {
        AgreementKind::Full
    } else if best >= 2 {
        AgreementKind::Partial
    } else {
        AgreementKind::Disagreement
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementSummary {
    pub full_count: usize,
    pub partial_count: usize,
    pub disagreement_count: usize,
    pub full_fraction: f64,
    pub partial_fraction: f64,
    pub disagreement_fraction: f64,
}

impl AgreementSummary {
    pub fn total(&self) -> usize {
        self.full_count + self.partial_count + self.disagreement_count
    }
}

/// Agreement counts over the modeling instances plus the disagreement rows
/// held aside for triage. Irrelevant rows are not counted.
pub fn agreement_summary(dataset: &Dataset) -> Result<AgreementSummary, CorpusError> {
    let mut counts = [0usize; 3];
    let groups = dataset
        .instances
        .iter()
        .map(|i| (i.id.as_str(), i.annotations.as_slice()))
        .chain(
            dataset
                .set_aside
                .iter()
                .filter(|s| s.reason == DiscardReason::Disagreement)
                .map(|s| (s.id.as_str(), s.annotations.as_slice())),
        );
    for (id, records) in groups {
        if records.len() < 2 {
            return Err(CorpusError::TooFewRecords {
                id: id.to_string(),
                count: records.len(),
            });
        }
        let slot = match agreement_kind(records, &dataset.labels)? {
            AgreementKind::Full => 0,
            AgreementKind::Partial => 1,
            AgreementKind::Disagreement => 2,
        };
        counts[slot] += 1;
    }
    let total = counts.iter().sum::<usize>();
    let frac = |c: usize| if total == 0 { 0.0 } else { c as f64 / total as f64 };
    Ok(AgreementSummary {
        full_count: counts[0],
        partial_count: counts[1],
        disagreement_count: counts[2],
        full_fraction: frac(counts[0]),
        partial_fraction: frac(counts[1]),
        disagreement_fraction: frac(counts[2]),
    })
}

/// Give every common instance one of the two variety codes, each with
/// probability 1/2.
///
/// The draw for an instance is the top bit of the first output of
/// `rng::keyed(seed, "assign", id)`: 0 selects variety A, 1 variety B. It
/// depends only on the seed and the id.
pub fn assign_single_labels(dataset: &Dataset, seed: u64) -> Dataset {
    let mut out = dataset.clone();
    let [a, b] = dataset.labels.varieties();
    for inst in out.instances.iter_mut().filter(|i| i.is_common) {
        let bit = rng::keyed(seed, "assign", &inst.id).next_u64() >> 63;
        inst.train_label = Some(if bit == 0 { a.clone() } else { b.clone() });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vote(label: &str) -> AnnotationRecord {
        let mut r = AnnotationRecord {
            annotator_id: "x".into(),
            ..Default::default()
        };
        match label {
            "ES-CU" => r.cuban_variety = true,
            "not-ES-CU" => r.not_cuban_variety = true,
            "ES" => r.not_able_to_identify = true,
            _ => unreachable!(),
        }
        r
    }

    fn votes(labels: &[&str]) -> Vec<AnnotationRecord> {
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| AnnotationRecord {
                annotator_id: format!("a{}", i + 1),
                ..vote(l)
            })
            .collect()
    }

    #[test]
    fn two_of_three_wins() {
        assert_eq!(
            aggregate_annotations(&votes(&["ES-CU", "ES-CU", "not-ES-CU"])).unwrap(),
            Aggregation::Label("ES-CU".into())
        );
        assert_eq!(
            aggregate_annotations(&votes(&["ES-CU", "ES-CU", "ES-CU"])).unwrap(),
            Aggregation::Label("ES-CU".into())
        );
        assert_eq!(
            aggregate_annotations(&votes(&["ES-CU", "not-ES-CU", "ES"])).unwrap(),
            Aggregation::Discard(DiscardReason::Disagreement)
        );
    }

    #[test]
    fn irrelevant_dominates_even_malformed_lists() {
        let mut rs = votes(&["ES-CU", "ES-CU"]);
        rs.push(AnnotationRecord {
            annotator_id: "z".into(),
            irrelevant: true,
            cuban_variety: true,
            not_cuban_variety: true,
            ..Default::default()
        });
        assert_eq!(
            aggregate_annotations(&rs).unwrap(),
            Aggregation::Discard(DiscardReason::Irrelevant)
        );
    }

    #[test]
    fn malformed_and_empty_records_fail() {
        let bad = AnnotationRecord {
            annotator_id: "a1".into(),
            cuban_variety: true,
            not_cuban_variety: true,
            ..Default::default()
        };
        assert!(matches!(
            aggregate_annotations(&[bad]),
            Err(CorpusError::MalformedRecord(_))
        ));
        let silent = AnnotationRecord {
            annotator_id: "a1".into(),
            ..Default::default()
        };
        assert!(matches!(aggregate_annotations(&[silent]), Err(CorpusError::NoSignal(_))));
        assert!(matches!(aggregate_annotations(&[]), Err(CorpusError::NoRecords)));
    }

    #[test]
    fn specific_variety_counts_as_not_cuban() {
        let r = AnnotationRecord {
            annotator_id: "a1".into(),
            specific_variety: Some("ES-CL".into()),
            ..Default::default()
        };
        assert_eq!(annotator_label(&r, &LabelSet::cuban()).unwrap(), "not-ES-CU".into());
    }

    #[test]
    fn dsl_tl_rows_keep_original_label() {
        let data = "id,text,original_label,true_label\n1,hola che,ES-AR,ES\n2,vale tío,ES-ES,ES-ES\n";
        let ds = read_dataset(data.as_bytes(), DatasetFormat::DslTl, &LoadOptions::for_format(DatasetFormat::DslTl)).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.instances[0].train_label, Some("ES-AR".into()));
        assert!(ds.instances[0].is_common);
        assert!(!ds.instances[1].is_common);
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        let ds = read_dataset(&b""[..], DatasetFormat::DslTl, &LoadOptions::for_format(DatasetFormat::DslTl)).unwrap();
        assert!(ds.is_empty());
        assert!(ds.rejections.is_empty());
    }

    #[test]
    fn missing_column_and_duplicate_id_are_errors() {
        let opts = LoadOptions::for_format(DatasetFormat::DslTl);
        let missing = "id,text,original_label\n1,a,ES-AR\n";
        assert!(matches!(
            read_dataset(missing.as_bytes(), DatasetFormat::DslTl, &opts),
            Err(CorpusError::MissingColumn(c)) if c == "true_label"
        ));
        let dup = "id,text,original_label,true_label\n1,a,ES-AR,ES\n1,b,ES-ES,ES\n";
        assert!(matches!(
            read_dataset(dup.as_bytes(), DatasetFormat::DslTl, &opts),
            Err(CorpusError::DuplicateId(id)) if id == "1"
        ));
    }

    #[test]
    fn strict_mode_escalates_unknown_labels() {
        let data = "id,text,original_label,true_label\n1,a,ES-MX,ES\n";
        let mut opts = LoadOptions::for_format(DatasetFormat::DslTl);
        let lenient = read_dataset(data.as_bytes(), DatasetFormat::DslTl, &opts).unwrap();
        assert_eq!(lenient.rejections.len(), 1);
        opts.strict = true;
        assert!(matches!(
            read_dataset(data.as_bytes(), DatasetFormat::DslTl, &opts),
            Err(CorpusError::Rejected { .. })
        ));
    }

    #[test]
    fn generic_csv_allows_unlabeled_commons_only() {
        let data = "id,text,train_label,is_common\n1,a,,true\n2,b,,false\n3,c,not-ES-CU,0\n";
        let ds = read_dataset(data.as_bytes(), DatasetFormat::GenericCsv, &LoadOptions::for_format(DatasetFormat::GenericCsv)).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.rejections[0].id, "2");
        assert_eq!(ds.instances[0].train_label, None);
    }

    #[test]
    fn assignment_leaves_non_commons_alone() {
        let data = "id,text,train_label,is_common\n1,a,,true\n2,b,ES-CU,false\n";
        let ds = read_dataset(data.as_bytes(), DatasetFormat::GenericCsv, &LoadOptions::for_format(DatasetFormat::GenericCsv)).unwrap();
        let out = assign_single_labels(&ds, 42);
        assert!(out.instances[0].train_label.is_some());
        assert!(out.instances[0].is_common);
        assert_eq!(out.instances[1], ds.instances[1]);
        assert_eq!(out, assign_single_labels(&ds, 42));
    }

    #[test]
    fn agreement_requires_two_records() {
        let mut ds = Dataset::new(LabelSet::cuban(), vec![]).unwrap();
        ds.instances.push(Instance {
            id: "1".into(),
            raw_text: "x".into(),
            normalized_text: None,
            train_label: Some("ES-CU".into()),
            is_common: false,
            annotations: votes(&["ES-CU"]),
            split: Split::Train,
        });
        assert!(matches!(agreement_summary(&ds), Err(CorpusError::TooFewRecords { .. })));
    }
}
