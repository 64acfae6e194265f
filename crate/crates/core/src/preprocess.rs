//! Normalization of user-generated text.
//!
//! [`normalize_text`] runs a fixed chain of rewrites: line breaks, URLs,
//! mentions, hashtags, emojis, laughs, letter repetitions, whitespace. The
//! chain is re-run until the text stops changing, so the result is always a
//! fixed point (a rewrite late in one pass, such as dropping a stray `#`,
//! can expose something an earlier rewrite handles). In practice a second
//! pass is a no-op for almost every input.

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Dataset;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("max_consecutive_mentions must be at least 1")]
    MentionLimit,
    #[error("max_letter_repeat must be at least 1")]
    RepeatLimit,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmojiLanguage {
    #[default]
    Es,
    En,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationConfig {
    pub mention_token: String,
    pub url_token: String,
    pub max_consecutive_mentions: usize,
    pub max_letter_repeat: usize,
    pub laugh_token: String,
    pub emoji_language: EmojiLanguage,
    /// Also treat `h`-based laughs ("hahaha") as laughs.
    pub laugh_with_h: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            mention_token: "@usuario".into(),
            url_token: "url".into(),
            max_consecutive_mentions: 2,
            max_letter_repeat: 2,
            laugh_token: "jaja".into(),
            emoji_language: EmojiLanguage::Es,
            laugh_with_h: false,
        }
    }
}

impl NormalizationConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_consecutive_mentions < 1 {
            return Err(ConfigError::MentionLimit);
        }
        if self.max_letter_repeat < 1 {
            return Err(ConfigError::RepeatLimit);
        }
        Ok(())
    }
}

const MAX_PASSES: usize = 8;

pub fn normalize_text(text: &str, config: &NormalizationConfig) -> String {
    let mut current = single_pass(text, config);
    for _ in 1..MAX_PASSES {
        let next = single_pass(&current, config);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// Fill `normalized_text` for every instance.
pub fn normalize_dataset(dataset: &mut Dataset, config: &NormalizationConfig) {
    for inst in &mut dataset.instances {
        inst.normalized_text = Some(normalize_text(&inst.raw_text, config));
    }
}

fn single_pass(text: &str, config: &NormalizationConfig) -> String {
    let s = replace_line_breaks(text);
    let s = url_re().replace_all(&s, config.url_token.as_str()).into_owned();
    let s = replace_mentions(&s, &config.mention_token);
    let s = collapse_mention_runs(&s, &config.mention_token, config.max_consecutive_mentions);
    let s = replace_hashtags(&s);
    let s = replace_emojis(&s, config.emoji_language);
    let s = replace_laughs(&s, config);
    let s = cap_letter_repeats(&s, config.max_letter_repeat);
    let s = s.split_whitespace().collect::<Vec<_>>().join(" ");
    collapse_mention_runs(&s, &config.mention_token, config.max_consecutive_mentions)
}

fn replace_line_breaks(text: &str) -> String {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\r\n|[\r\n\u{2028}\u{2029}]").unwrap())
        .replace_all(text, ". ")
        .into_owned()
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:https?://|www\.)\S+").unwrap())
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// `@handle` → token, where the `@` starts the string or follows a non-word
/// character (so e-mail addresses are left alone).
fn replace_mentions(text: &str, token: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let starts_mention = c == '@'
            && (i == 0 || !is_word_char(chars[i - 1]))
            && chars.get(i + 1).is_some_and(|&n| is_word_char(n));
        if starts_mention {
            i += 1;
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
            out.push_str(token);
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

/// Keep at most `limit` mention tokens in any whitespace-separated run.
fn collapse_mention_runs(text: &str, token: &str, limit: usize) -> String {
    let mut kept: Vec<&str> = Vec::new();
    let mut run = 0;
    for piece in text.split_whitespace() {
        if piece == token {
            run += 1;
            if run > limit {
                continue;
            }
        } else {
            run = 0;
        }
        kept.push(piece);
    }
    kept.join(" ")
}

fn replace_hashtags(text: &str) -> String {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"#([\p{L}\p{N}_]+)").unwrap());
    let segmented = re.replace_all(text, |caps: &regex::Captures<'_>| {
        // Pad so a tag glued to a word does not fuse with it.
        format!(" {} ", segment_hashtag(&caps[1]))
    });
    segmented.replace('#', " ")
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Upper,
    Lower,
    Digit,
    Other,
}

fn class_of(c: char) -> CharClass {
    if c.is_numeric() {
        CharClass::Digit
    } else if c.is_uppercase() {
        CharClass::Upper
    } else if c.is_lowercase() {
        CharClass::Lower
    } else {
        CharClass::Other
    }
}

/// Split a hashtag body written in CamelCase into words.
///
/// Boundaries fall at lower→upper transitions, between letters and digits,
/// at underscores, and before the last capital of an upper-case run that is
/// followed by a lower-case letter (`SOSCuba` → `SOS`, `Cuba`). The first
/// word keeps its casing; the rest are lower-cased.
pub fn segment_hashtag(tag: &str) -> String {
    let tag = tag.strip_prefix('#').unwrap_or(tag);
    if tag.is_empty() || !tag.chars().all(is_word_char) {
        return tag.to_string();
    }
    let chars: Vec<char> = tag.chars().collect();
    let mut words: Vec<String> = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c == '_' {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            continue;
        }
        if let Some(&prev) = i.checked_sub(1).and_then(|p| chars.get(p)) {
            let (pc, cc) = (class_of(prev), class_of(c));
            let next_lower = chars.get(i + 1).is_some_and(|&n| class_of(n) == CharClass::Lower);
            let boundary = prev != '_'
                && match (pc, cc) {
                    (CharClass::Lower, CharClass::Upper) => true,
                    (CharClass::Digit, CharClass::Digit) => false,
                    (CharClass::Digit, _) | (_, CharClass::Digit) => true,
                    (CharClass::Upper, CharClass::Upper) => next_lower,
                    _ => false,
                };
            if boundary && !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
        }
        current.push(c);
    }
    if !current.is_empty() {
        words.push(current);
    }
    let mut out = String::with_capacity(tag.len() + words.len());
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            out.push(' ');
            out.push_str(&w.to_lowercase());
        } else {
            out.push_str(w);
        }
    }
    out
}

struct EmojiTable {
    names: HashMap<char, (&'static str, &'static str)>,
    flags: HashMap<String, (&'static str, &'static str)>,
}

fn emoji_table() -> &'static EmojiTable {
    static TABLE: OnceLock<EmojiTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let rows = |src: &'static str| {
            src.lines()
                .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
                .map(|l| {
                    let mut cols = l.split('\t');
                    let key = cols.next().unwrap();
                    let es = cols.next().unwrap();
                    let en = cols.next().unwrap_or(es);
                    (key, (es, en))
                })
        };
        let names = rows(include_str!("../data/emoji.tsv"))
            .map(|(hex, names)| {
                let cp = u32::from_str_radix(hex, 16).expect("emoji table codepoint");
                (char::from_u32(cp).expect("emoji table scalar"), names)
            })
            .collect();
        let flags = rows(include_str!("../data/flags.tsv"))
            .map(|(iso, names)| (iso.to_string(), names))
            .collect();
        EmojiTable { names, flags }
    })
}

/// Invisible joiners, presentation selectors, skin tones and tag characters.
fn is_emoji_modifier(c: char) -> bool {
    matches!(c as u32,
        0xFE0E | 0xFE0F | 0x200D | 0x20E3 | 0x1F3FB..=0x1F3FF | 0xE0020..=0xE007F)
}

fn is_regional_indicator(c: char) -> bool {
    (0x1F1E6..=0x1F1FF).contains(&(c as u32))
}

pub fn is_emoji(c: char) -> bool {
    let cp = c as u32;
    matches!(cp,
        0x1F000..=0x1FAFF
        | 0x2600..=0x27BF
        | 0x203C | 0x2049
        | 0x231A | 0x231B | 0x2328 | 0x23CF | 0x23E9..=0x23F3 | 0x23F8..=0x23FA
        | 0x2B05..=0x2B07 | 0x2B1B | 0x2B1C | 0x2B50 | 0x2B55
        | 0x2934 | 0x2935 | 0x3030 | 0x303D | 0x3297 | 0x3299)
        && !is_emoji_modifier(c)
}

#[derive(PartialEq, Eq, Clone)]
enum EmojiKey {
    Single(char),
    Flag(char, char),
}

fn describe(key: &EmojiKey, lang: EmojiLanguage) -> String {
    let table = emoji_table();
    let pick = |(es, en): (&'static str, &'static str)| match lang {
        EmojiLanguage::Es => es,
        EmojiLanguage::En => en,
    };
    match key {
        EmojiKey::Single(c) => match table.names.get(c) {
            Some(&names) => pick(names).to_string(),
            None => pick(("símbolo", "symbol")).to_string(),
        },
        EmojiKey::Flag(a, b) => {
            let iso: String = [*a, *b]
                .iter()
                .map(|&c| char::from_u32(c as u32 - 0x1F1E6 + u32::from(b'A')).unwrap_or('X'))
                .collect();
            let country = table
                .flags
                .get(&iso)
                .map(|&names| pick(names).to_string())
                .unwrap_or_else(|| iso.to_lowercase());
            format!("{} {country}", pick(("bandera", "flag")))
        }
    }
}

/// Each emoji becomes `emoji <description> emoji`; runs of the same emoji
/// (possibly separated by whitespace) count once.
fn replace_emojis(text: &str, lang: EmojiLanguage) -> String {
    let chars: Vec<char> = text.chars().filter(|&c| !is_emoji_modifier(c)).collect();
    let mut out = String::with_capacity(text.len());
    let mut last: Option<EmojiKey> = None;
    let mut pending_space = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let key = if is_regional_indicator(c) {
            match chars.get(i + 1) {
                Some(&n) if is_regional_indicator(n) => {
                    i += 1;
                    Some(EmojiKey::Flag(c, n))
                }
                _ => Some(EmojiKey::Single(c)),
            }
        } else if is_emoji(c) {
            Some(EmojiKey::Single(c))
        } else {
            None
        };
        i += 1;
        match key {
            Some(key) => {
                if last.as_ref() == Some(&key) {
                    pending_space.clear();
                    continue;
                }
                out.push_str(&pending_space);
                pending_space.clear();
                out.push_str(" emoji ");
                out.push_str(&describe(&key, lang));
                out.push_str(" emoji ");
                last = Some(key);
            }
            None if c.is_whitespace() && last.is_some() => pending_space.push(c),
            None => {
                out.push_str(&pending_space);
                pending_space.clear();
                out.push(c);
                last = None;
            }
        }
    }
    out.push_str(&pending_space);
    out
}

fn replace_laughs(text: &str, config: &NormalizationConfig) -> String {
    static PLAIN: OnceLock<Regex> = OnceLock::new();
    static WITH_H: OnceLock<Regex> = OnceLock::new();
    let re = if config.laugh_with_h {
        WITH_H.get_or_init(|| Regex::new(r"(?i)\b[jhaei]{4,}\b").unwrap())
    } else {
        PLAIN.get_or_init(|| Regex::new(r"(?i)\b[jaei]{4,}\b").unwrap())
    };
    re.replace_all(text, |caps: &regex::Captures<'_>| {
        let word = &caps[0];
        let laugh_letters = word
            .chars()
            .filter(|c| matches!(c, 'j' | 'J') || (config.laugh_with_h && matches!(c, 'h' | 'H')))
            .count();
        if laugh_letters >= 2 {
            config.laugh_token.clone()
        } else {
            word.to_string()
        }
    })
    .into_owned()
}

fn cap_letter_repeats(text: &str, limit: usize) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev: Option<char> = None;
    let mut run = 0;
    for c in text.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if c.is_alphabetic() && run > limit {
            continue;
        }
        out.push(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(s: &str) -> String {
        normalize_text(s, &NormalizationConfig::default())
    }

    #[test]
    fn hashtag_goldens() {
        assert_eq!(segment_hashtag("CubaIslaBella"), "Cuba isla bella");
        assert_eq!(segment_hashtag("cuba"), "cuba");
        assert_eq!(segment_hashtag("SOSCuba"), "SOS cuba");
        assert_eq!(segment_hashtag("#SOSMatanzas"), "SOS matanzas");
        assert_eq!(segment_hashtag("Cuba2021Libre"), "Cuba 2021 libre");
        assert_eq!(segment_hashtag("patria_y_vida"), "patria y vida");
        assert_eq!(segment_hashtag("no-tag"), "no-tag");
        assert_eq!(norm("#CubaIslaBella"), "Cuba isla bella");
    }

    #[test]
    fn laughs_become_jaja() {
        assert_eq!(norm("jajajaja"), "jaja");
        assert_eq!(norm("JAJAJA que risa"), "jaja que risa");
        assert_eq!(norm("jejeje"), "jaja");
        assert_eq!(norm("jajajajaja!"), "jaja!");
        // Not laughs: too short, or only one j.
        assert_eq!(norm("jaj"), "jaj");
        assert_eq!(norm("jaaa"), "jaa");
        assert_eq!(norm("hahaha"), "hahaha");
        let h = NormalizationConfig {
            laugh_with_h: true,
            ..Default::default()
        };
        assert_eq!(normalize_text("hahaha", &h), "jaja");
    }

    #[test]
    fn mentions_collapse_to_two() {
        assert_eq!(norm("@a @b @c hola"), "@usuario @usuario hola");
        assert_eq!(norm("@a hola @b"), "@usuario hola @usuario");
        assert_eq!(norm("correo: yo@mail.com"), "correo: yo@mail.com");
    }

    #[test]
    fn letters_capped_punctuation_kept() {
        assert_eq!(norm("holaaaa"), "holaa");
        assert_eq!(norm("nooooo!!!!"), "noo!!!!");
        assert_eq!(norm("1111"), "1111");
    }

    #[test]
    fn urls_line_breaks_and_spaces() {
        assert_eq!(norm("mira https://t.co/abc ya"), "mira url ya");
        assert_eq!(norm("ver www.cubadebate.cu"), "ver url");
        assert_eq!(norm("hola\nmundo"), "hola. mundo");
        assert_eq!(norm("  a   b  "), "a b");
        assert_eq!(norm(""), "");
    }

    #[test]
    fn emojis_described_and_deduplicated() {
        assert_eq!(norm("hola 😂😂😂"), "hola emoji cara llorando de risa emoji");
        assert_eq!(norm("🇨🇺"), "emoji bandera cuba emoji");
        assert_eq!(
            norm("😂 🔥"),
            "emoji cara llorando de risa emoji emoji fuego emoji"
        );
        let en = NormalizationConfig {
            emoji_language: EmojiLanguage::En,
            ..Default::default()
        };
        assert_eq!(normalize_text("👍🏽", &en), "emoji thumbs up emoji");
    }

    #[test]
    fn stray_hash_does_not_reveal_a_url_later() {
        let once = norm("ht#tp://x.com");
        assert_eq!(norm(&once), once);
    }

    #[test]
    fn config_limits_validated() {
        let bad = NormalizationConfig {
            max_letter_repeat: 0,
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(ConfigError::RepeatLimit));
    }
}
