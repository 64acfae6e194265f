//! Synthetic corpora with planted common examples, and a random tweet
//! generator for fuzzing the normalizer.
//!
//! A planted corpus has two varieties with disjoint marker vocabularies.
//! Non-common instances carry markers of their own variety only; common
//! instances carry markers of both, so no single label fits them. Common
//! instances come out unlabeled, ready for
//! [`assign_single_labels`](crate::corpus::assign_single_labels).

use crate::corpus::{Dataset, Instance, LabelSet, Split};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub instances: usize,
    /// Exactly `round(instances * common_fraction)` instances are common.
    pub common_fraction: f64,
    /// Marker words per variety.
    pub markers_per_variety: usize,
    /// Variety-neutral filler words.
    pub filler_vocabulary: usize,
    /// Filler words per text, inclusive range.
    pub filler_words: (usize, usize),
    /// Markers per non-common text, inclusive range. Common texts get one
    /// marker from each variety.
    pub markers_per_text: (usize, usize),
    pub labels: LabelSet,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            instances: 1000,
            common_fraction: 0.4,
            markers_per_variety: 40,
            filler_vocabulary: 600,
            filler_words: (6, 14),
            markers_per_text: (1, 2),
            labels: LabelSet::cuban(),
            seed: 7,
        }
    }
}

const CONSONANTS: &[u8] = b"bcdfglmnprstv";
const VOWELS: &[u8] = b"aeiou";

fn pseudo_word(rng: &mut SplitMix64, prefix: &str, syllables: usize) -> String {
    let mut w = String::from(prefix);
    for _ in 0..syllables {
        w.push(CONSONANTS[rng.next_below(CONSONANTS.len() as u64) as usize] as char);
        w.push(VOWELS[rng.next_below(VOWELS.len() as u64) as usize] as char);
    }
    w
}

fn vocabulary(rng: &mut SplitMix64, size: usize, prefix: &str) -> Vec<String> {
    let mut words = Vec::with_capacity(size);
    while words.len() < size {
        let syllables = 2 + rng.next_below(2) as usize;
        let w = pseudo_word(rng, prefix, syllables);
        if !words.contains(&w) {
            words.push(w);
        }
    }
    words
}

fn pick<'a>(rng: &mut SplitMix64, items: &'a [String]) -> &'a str {
    &items[rng.next_below(items.len() as u64) as usize]
}

fn in_range(rng: &mut SplitMix64, (lo, hi): (usize, usize)) -> usize {
    lo + rng.next_below((hi - lo + 1) as u64) as usize
}

pub fn planted_commons(config: &PlantedConfig) -> Dataset {
    let mut rng = SplitMix64::new(config.seed);
    let fillers = vocabulary(&mut rng, config.filler_vocabulary, "");
    let markers = [
        vocabulary(&mut rng, config.markers_per_variety, "zq"),
        vocabulary(&mut rng, config.markers_per_variety, "xk"),
    ];
    let varieties = config.labels.varieties();

    let n_common = (config.instances as f64 * config.common_fraction).round() as usize;
    let mut is_common: Vec<bool> = (0..config.instances).map(|i| i < n_common).collect();
    rng.shuffle(&mut is_common);

    let instances = is_common
        .into_iter()
        .enumerate()
        .map(|(i, common)| {
            let variety = rng.next_below(2) as usize;
            let mut words: Vec<String> = (0..in_range(&mut rng, config.filler_words))
                .map(|_| pick(&mut rng, &fillers).to_string())
                .collect();
            if common {
                words.push(pick(&mut rng, &markers[0]).to_string());
                words.push(pick(&mut rng, &markers[1]).to_string());
            } else {
                for _ in 0..in_range(&mut rng, config.markers_per_text) {
                    words.push(pick(&mut rng, &markers[variety]).to_string());
                }
            }
            rng.shuffle(&mut words);
            Instance {
                id: format!("s{i:05}"),
                raw_text: words.join(" "),
                normalized_text: None,
                train_label: (!common).then(|| varieties[variety].clone()),
                is_common: common,
                annotations: Vec::new(),
                split: Split::Train,
            }
        })
        .collect();
    Dataset::new(config.labels.clone(), instances).expect("generated ids are unique")
}

const TWEET_WORDS: &[&str] = &[
    "hola", "Cuba", "qué", "bolá", "asere", "guagua", "ñooo", "libertad", "Habana", "ACERE",
    "holaaaa", "siiii", "nooooo", "CUBA", "amigo", "año", "pa'", "ta", "coño", "acere123",
    "x", "a", "é", "ÑANDÚ", "ok", "2021", "11J", "q", "tb", "xq",
];
const TWEET_PIECES: &[&str] = &[
    "jajajaja", "JAJAJA", "jejeje", "jaja", "jjjj", "ajajaj", "hahaha", "jajá", "jaaaaj",
    "@user", "@Juan_Perez", "@a", "@", "@@x", "correo@mail.com", "@usuario",
    "#SOSCuba", "#CubaIslaBella", "#Cuba2021", "#patria_y_vida", "#", "##", "#ABC", "#ñandúLibre", "#123",
    "https://t.co/xYz", "http://a.b/c?d=e", "www.cubadebate.cu", "HTTPS://X.COM", "ht#tp://x", "url",
    "😂", "😂😂😂", "🇨🇺", "🇨🇺🇺🇸", "👍🏽", "❤️", "👨‍👩‍👧", "🔥🔥", "🦜", "🇦", "✨",
    "!!!", "¿?", "...", ".", ",", "-", "'", "\"", "(", ")", "¡",
    "\n", "\r\n", "\t", "  ", "\u{2028}", "\u{a0}",
];

/// A random tweet-like string mixing words, mentions, hashtags, URLs,
/// emojis, laughs, repeated letters, odd whitespace and punctuation.
pub fn random_tweet(rng: &mut SplitMix64) -> String {
    let pieces = rng.next_below(16) as usize;
    let mut out = String::new();
    for _ in 0..pieces {
        let piece = if rng.next_below(3) == 0 {
            TWEET_WORDS[rng.next_below(TWEET_WORDS.len() as u64) as usize].to_string()
        } else {
            TWEET_PIECES[rng.next_below(TWEET_PIECES.len() as u64) as usize].to_string()
        };
        let piece = if rng.next_below(10) == 0 {
            // Stretch a letter.
            let mut s = piece;
            if let Some(c) = s.chars().last().filter(|c| c.is_alphabetic()) {
                for _ in 0..rng.next_below(5) {
                    s.push(c);
                }
            }
            s
        } else {
            piece
        };
        out.push_str(&piece);
        match rng.next_below(6) {
            0 => {}
            1 => out.push_str("  "),
            _ => out.push(' '),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn common_count_is_exact() {
        let ds = planted_commons(&PlantedConfig {
            instances: 200,
            common_fraction: 0.38,
            ..Default::default()
        });
        assert_eq!(ds.len(), 200);
        assert_eq!(ds.common_count(), 76);
        assert!(ds.instances.iter().all(|i| i.is_common == i.train_label.is_none()));
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = PlantedConfig {
            instances: 50,
            ..Default::default()
        };
        assert_eq!(planted_commons(&cfg), planted_commons(&cfg));
        let mut a = SplitMix64::new(3);
        let mut b = SplitMix64::new(3);
        assert_eq!(random_tweet(&mut a), random_tweet(&mut b));
    }
}
