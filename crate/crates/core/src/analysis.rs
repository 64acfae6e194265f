//! Error analysis over the top of a ranking.
//!
//! "Errors" here are highly ranked instances that are *not* common examples:
//! the scorer found them hard, but the ground truth says they belong to one
//! variety. The helpers below count their words, track how often a keyword
//! shows up among them, profile their annotator agreement, and attribute a
//! linear model's logit to the tokens of a text.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{agreement_kind, AgreementKind, Dataset, Instance, VarietyLabel};
use crate::dynamics::RankedList;
use crate::features::tokenize;
use crate::trainer::LinearModel;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("N = {n} is outside 1..={len}")]
    OutOfRange { n: usize, len: usize },
    #[error("ranked instance `{0}` is not in the dataset")]
    UnknownId(String),
    #[error("label `{0}` is not one of the model's labels")]
    UnknownLabel(String),
}

/// Pipeline placeholders that carry no lexical signal (mention token without
/// its `@`, url token, emoji wrapper).
pub const SPECIAL_TOKENS: [&str; 3] = ["usuario", "url", "emoji"];

/// The embedded Spanish stopword list (313 words).
pub fn spanish_stopwords() -> &'static HashSet<String> {
    static WORDS: OnceLock<HashSet<String>> = OnceLock::new();
    WORDS.get_or_init(|| {
        include_str!("../data/stopwords_es.txt")
            .lines()
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .map(str::to_string)
            .collect()
    })
}

/// Top-N ranked instances flagged non-common.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSlice {
    pub n: usize,
    pub error_ids: Vec<String>,
}

pub fn error_slice(ranked: &RankedList, dataset: &Dataset, n: usize) -> Result<ErrorSlice, AnalysisError> {
    let errors = top_errors(ranked, dataset, n)?;
    Ok(ErrorSlice {
        n,
        error_ids: errors.into_iter().map(|i| i.id.clone()).collect(),
    })
}

fn top_errors<'d>(ranked: &RankedList, dataset: &'d Dataset, n: usize) -> Result<Vec<&'d Instance>, AnalysisError> {
    if n < 1 || n > ranked.len() {
        return Err(AnalysisError::OutOfRange { n, len: ranked.len() });
    }
    let index = dataset.index();
    let mut out = Vec::new();
    for id in ranked.ids().take(n) {
        let pos = index.get(id).ok_or_else(|| AnalysisError::UnknownId(id.to_string()))?;
        let inst = &dataset.instances[*pos];
        if !inst.is_common {
            out.push(inst);
        }
    }
    Ok(out)
}

/// Word frequencies among the top-N errors, most frequent first (ties by
/// word). Stopwords and [`SPECIAL_TOKENS`] are dropped.
pub fn top_error_words(
    ranked: &RankedList,
    dataset: &Dataset,
    n: usize,
    stopwords: &HashSet<String>,
) -> Result<Vec<(String, usize)>, AnalysisError> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for inst in top_errors(ranked, dataset, n)? {
        for token in tokenize(inst.text()) {
            if stopwords.contains(&token) || SPECIAL_TOKENS.contains(&token.as_str()) {
                continue;
            }
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    let mut words: Vec<(String, usize)> = counts.into_iter().collect();
    words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(words)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeywordFraction {
    pub n: usize,
    pub errors: usize,
    pub with_keyword: usize,
    /// `None` when the top-N holds no errors.
    pub fraction: Option<f64>,
}

fn contains_token(inst: &Instance, keyword: &str) -> bool {
    tokenize(inst.text()).iter().any(|t| t == keyword)
}

/// Share of the top-N errors whose tokens include `keyword` (case-insensitive).
pub fn keyword_error_fraction(
    ranked: &RankedList,
    dataset: &Dataset,
    keyword: &str,
    grid: &[usize],
) -> Result<Vec<KeywordFraction>, AnalysisError> {
    let keyword = keyword.to_lowercase();
    grid.iter()
        .map(|&n| {
            let errors = top_errors(ranked, dataset, n)?;
            let with_keyword = errors.iter().filter(|i| contains_token(i, &keyword)).count();
            Ok(KeywordFraction {
                n,
                errors: errors.len(),
                with_keyword,
                fraction: (!errors.is_empty()).then(|| with_keyword as f64 / errors.len() as f64),
            })
        })
        .collect()
}

/// Share of all non-common instances containing `keyword`, the baseline for
/// [`keyword_error_fraction`].
pub fn corpus_keyword_fraction(dataset: &Dataset, keyword: &str) -> Option<f64> {
    let keyword = keyword.to_lowercase();
    let non_common: Vec<&Instance> = dataset.instances.iter().filter(|i| !i.is_common).collect();
    if non_common.is_empty() {
        return None;
    }
    let hits = non_common.iter().filter(|i| contains_token(i, &keyword)).count();
    Some(hits as f64 / non_common.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub n: usize,
    /// Errors with at least two annotation records.
    pub considered: usize,
    /// Errors skipped for lacking annotations.
    pub excluded: usize,
    /// Share of considered errors with partial (two-annotator) agreement.
    pub fraction_two_annotator: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementProfile {
    pub rows: Vec<AgreementRow>,
    /// Full-agreement share among all annotated non-common instances.
    pub full_agreement_non_common: Option<f64>,
}

pub fn agreement_error_profile(
    ranked: &RankedList,
    dataset: &Dataset,
    grid: &[usize],
) -> Result<AgreementProfile, AnalysisError> {
    let kind = |inst: &Instance| -> Option<AgreementKind> {
        if inst.annotations.len() < 2 {
            return None;
        }
        agreement_kind(&inst.annotations, &dataset.labels).ok()
    };
    let rows = grid
        .iter()
        .map(|&n| {
            let errors = top_errors(ranked, dataset, n)?;
            let kinds: Vec<AgreementKind> = errors.iter().filter_map(|i| kind(i)).collect();
            let partial = kinds.iter().filter(|k| **k == AgreementKind::Partial).count();
            Ok(AgreementRow {
                n,
                considered: kinds.len(),
                excluded: errors.len() - kinds.len(),
                fraction_two_annotator: (!kinds.is_empty()).then(|| partial as f64 / kinds.len() as f64),
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    let overall: Vec<AgreementKind> = dataset
        .instances
        .iter()
        .filter(|i| !i.is_common)
        .filter_map(kind)
        .collect();
    let full = overall.iter().filter(|k| **k == AgreementKind::Full).count();
    Ok(AgreementProfile {
        rows,
        full_agreement_non_common: (!overall.is_empty()).then(|| full as f64 / overall.len() as f64),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenContribution {
    pub token: String,
    /// Character span in the input text.
    pub start: usize,
    pub end: usize,
    pub contribution: f64,
}

/// Decomposition of a label's centered logit
/// `z_target - mean_k z_k = centered_bias + Σ contributions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub target: VarietyLabel,
    pub tokens: Vec<TokenContribution>,
    pub centered_bias: f64,
    pub centered_logit: f64,
}

impl Attribution {
    /// Tokens by decreasing absolute contribution.
    pub fn strongest(&self, k: usize) -> Vec<&TokenContribution> {
        let mut sorted: Vec<&TokenContribution> = self.tokens.iter().collect();
        sorted.sort_by(|a, b| b.contribution.abs().total_cmp(&a.contribution.abs()).then(a.start.cmp(&b.start)));
        sorted.truncate(k);
        sorted
    }
}

/// Per-token explanation of a model's preference for a label.
pub trait TokenAttributor {
    fn attribute(&self, text: &str, target: &VarietyLabel) -> Result<Attribution, AnalysisError>;
}

impl TokenAttributor for LinearModel {
    fn attribute(&self, text: &str, target: &VarietyLabel) -> Result<Attribution, AnalysisError> {
        token_attribution(self, text, target)
    }
}

/// Exact additive attribution for the linear model.
///
/// Tokens are whitespace-delimited pieces of `text`. Each n-gram occurrence
/// is credited to the token holding its center character (the left one of
/// the two middle characters for even lengths); if that character is
/// whitespace, to the nearest token on the left, or the first token when
/// there is none. An occurrence of bucket `f` contributes
/// `(w[target, f] - mean_k w[k, f]) / ||counts||`.
pub fn token_attribution(
    model: &LinearModel,
    text: &str,
    target: &VarietyLabel,
) -> Result<Attribution, AnalysisError> {
    let t = model
        .label_index(target)
        .ok_or_else(|| AnalysisError::UnknownLabel(target.to_string()))?;
    let k = model.labels().len() as f64;
    let chars: Vec<char> = text.chars().collect();

    let mut tokens: Vec<TokenContribution> = Vec::new();
    let mut owner: Vec<Option<usize>> = vec![None; chars.len()];
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            owner[i] = Some(tokens.len());
            i += 1;
        }
        tokens.push(TokenContribution {
            token: chars[start..i].iter().collect(),
            start,
            end: i,
            contribution: 0.0,
        });
    }
    // Whitespace belongs to the token on its left, leading whitespace to the first token.
    let mut last = None;
    for slot in owner.iter_mut() {
        match slot {
            Some(tok) => last = Some(*tok),
            None => *slot = last.or(if tokens.is_empty() { None } else { Some(0) }),
        }
    }

    let spec = model.features();
    let occurrences = spec.occurrences(text);
    let value = spec.occurrence_weight(&occurrences);
    let centered = |f: usize| -> f64 {
        let mean = (0..model.labels().len()).map(|j| model.weight(j, f)).sum::<f64>() / k;
        model.weight(t, f) - mean
    };
    for occ in &occurrences {
        let center = occ.start + (occ.end - occ.start - 1) / 2;
        if let Some(tok) = owner[center] {
            tokens[tok].contribution += centered(occ.bucket) * value;
        }
    }

    let bias = model.bias();
    let centered_bias = bias[t] - bias.iter().sum::<f64>() / k;
    let logits = model.logits(&spec.vectorize(text));
    let centered_logit = logits[t] - logits.iter().sum::<f64>() / k;
    Ok(Attribution {
        target: target.clone(),
        tokens,
        centered_bias,
        centered_logit,
    })
}
