//! Hashed word and character n-gram features.
//!
//! Text is lower-cased one character at a time (so character positions line
//! up with the input), word tokens are maximal alphanumeric runs, and
//! character n-grams slide over the whole string. Every n-gram is hashed to
//! one of `hash_dim` buckets. The resulting count vector is L2-normalized.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::rng::{fnv1a64, mix64};

/// Inclusive n-gram length range. `max == 0` disables the family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramRange {
    pub min: usize,
    pub max: usize,
}

impl NgramRange {
    pub const fn new(min: usize, max: usize) -> Self {
        Self { min, max }
    }

    pub const fn disabled() -> Self {
        Self { min: 1, max: 0 }
    }

    fn lengths(self) -> impl Iterator<Item = usize> {
        self.min.max(1)..=self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub word_ngrams: NgramRange,
    pub char_ngrams: NgramRange,
    /// Number of hash buckets; a power of two.
    pub hash_dim: usize,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self {
            word_ngrams: NgramRange::new(1, 2),
            char_ngrams: NgramRange::new(3, 5),
            hash_dim: 1 << 20,
        }
    }
}

/// One n-gram occurrence: its bucket and the character span `[start, end)`
/// it covers in the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Occurrence {
    pub bucket: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Lower-case each character to a single character.
pub(crate) fn fold_chars(text: &str) -> Vec<char> {
    text.chars()
        .map(|c| c.to_lowercase().next().unwrap_or(c))
        .collect()
}

/// Character spans of the alphanumeric word tokens.
pub(crate) fn word_spans(chars: &[char]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in chars.iter().enumerate() {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, chars.len()));
    }
    spans
}

/// Lower-cased alphanumeric tokens of `text`.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars = fold_chars(text);
    word_spans(&chars)
        .into_iter()
        .map(|(s, e)| chars[s..e].iter().collect())
        .collect()
}

impl FeatureSpec {
    fn bucket(&self, family: u8, n: usize, gram: &str) -> usize {
        let mut bytes = Vec::with_capacity(gram.len() + 2);
        bytes.push(family);
        bytes.push(n as u8);
        bytes.extend_from_slice(gram.as_bytes());
        (mix64(fnv1a64(&bytes)) as usize) & (self.hash_dim - 1)
    }

    pub fn occurrences(&self, text: &str) -> Vec<Occurrence> {
        let chars = fold_chars(text);
        let mut out = Vec::new();

        let words = word_spans(&chars);
        for n in self.word_ngrams.lengths() {
            for window in words.windows(n) {
                let gram = window
                    .iter()
                    .map(|&(s, e)| chars[s..e].iter().collect::<String>())
                    .collect::<Vec<_>>()
                    .join(" ");
                out.push(Occurrence {
                    bucket: self.bucket(b'w', n, &gram),
                    start: window[0].0,
                    end: window[n - 1].1,
                });
            }
        }

        for n in self.char_ngrams.lengths() {
            if n > chars.len() {
                continue;
            }
            for start in 0..=chars.len() - n {
                let slice = &chars[start..start + n];
                if slice.iter().all(|c| c.is_whitespace()) {
                    continue;
                }
                let gram: String = slice.iter().collect();
                out.push(Occurrence {
                    bucket: self.bucket(b'c', n, &gram),
                    start,
                    end: start + n,
                });
            }
        }
        out
    }

    pub fn vectorize(&self, text: &str) -> SparseVector {
        self.vectorize_occurrences(&self.occurrences(text))
    }

    pub(crate) fn vectorize_occurrences(&self, occurrences: &[Occurrence]) -> SparseVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for occ in occurrences {
            *counts.entry(occ.bucket).or_insert(0.0) += 1.0;
        }
        let norm = counts.values().map(|c| c * c).sum::<f64>().sqrt();
        let mut v = SparseVector::default();
        for (idx, count) in counts {
            v.indices.push(idx);
            v.values.push(count / norm);
        }
        v
    }

    /// Value each single occurrence contributes, `1 / ||counts||`.
    pub(crate) fn occurrence_weight(&self, occurrences: &[Occurrence]) -> f64 {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for occ in occurrences {
            *counts.entry(occ.bucket).or_insert(0.0) += 1.0;
        }
        let norm = counts.values().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            0.0
        } else {
            1.0 / norm
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> FeatureSpec {
        FeatureSpec {
            hash_dim: 1 << 12,
            ..Default::default()
        }
    }

    #[test]
    fn tokens_are_lowercase_alphanumeric_runs() {
        assert_eq!(tokenize("¡Hola, Cuba 2021!"), vec!["hola", "cuba", "2021"]);
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn occurrence_counts() {
        let spec = FeatureSpec {
            word_ngrams: NgramRange::new(1, 2),
            char_ngrams: NgramRange::new(3, 3),
            hash_dim: 1 << 12,
        };
        // words: 2 unigrams + 1 bigram; chars: "a b", " bc" -> "ab c" has 4 chars -> 2 trigrams
        let occ = spec.occurrences("ab c");
        assert_eq!(occ.len(), 3 + 2);
        let bigram = occ[2];
        assert_eq!((bigram.start, bigram.end), (0, 4));
    }

    #[test]
    fn vectors_are_unit_norm_and_case_insensitive() {
        let spec = small();
        let v = spec.vectorize("Hola Mundo");
        let norm: f64 = v.values.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert_eq!(v, spec.vectorize("hola mundo"));
        assert!(spec.vectorize("").is_empty());
        assert!(v.indices.iter().all(|&i| i < spec.hash_dim));
    }
}
