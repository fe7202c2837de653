//! Per-comment text statistics. Every tokenization rule lives here.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

/// Codepoint ranges treated as emoji.
pub const EMOJI_RANGES: [(u32, u32); 6] = [
    (0x1F300, 0x1F5FF),
    (0x1F600, 0x1F64F),
    (0x1F680, 0x1F6FF),
    (0x1F900, 0x1F9FF),
    (0x1FA70, 0x1FAFF),
    (0x2600, 0x27BF),
];

const ZWJ: char = '\u{200D}';
const SENTENCE_BREAKS: [char; 4] = ['.', '!', '?', '\n'];
pub const PUNCTUATION: [char; 11] = ['.', ',', ';', ':', '!', '?', '\'', '"', '-', '(', ')'];

pub fn is_emoji(c: char) -> bool {
    let u = c as u32;
    EMOJI_RANGES.iter().any(|&(lo, hi)| (lo..=hi).contains(&u))
}

fn is_variation_selector(c: char) -> bool {
    matches!(c, '\u{FE00}'..='\u{FE0F}')
}

fn is_skin_tone(c: char) -> bool {
    matches!(c, '\u{1F3FB}'..='\u{1F3FF}')
}

/// Splits text into emoji clusters and the leftover non-emoji text.
///
/// A cluster is an emoji scalar plus any trailing skin-tone modifiers,
/// extended by ZWJ + emoji pairs. Variation selectors are dropped
/// everywhere, so the same glyph with and without VS-16 compares equal.
pub fn split_emoji(text: &str) -> (Vec<String>, String) {
    let chars: Vec<char> = text.chars().filter(|&c| !is_variation_selector(c)).collect();
    let mut clusters = Vec::new();
    let mut rest = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if !is_emoji(c) {
            if c != ZWJ {
                rest.push(c);
            }
            i += 1;
            continue;
        }
        let mut cluster = String::new();
        cluster.push(c);
        i += 1;
        loop {
            while i < chars.len() && is_skin_tone(chars[i]) {
                cluster.push(chars[i]);
                i += 1;
            }
            if i + 1 < chars.len() && chars[i] == ZWJ && is_emoji(chars[i + 1]) {
                cluster.push(ZWJ);
                cluster.push(chars[i + 1]);
                i += 2;
            } else {
                break;
            }
        }
        clusters.push(cluster);
    }
    (clusters, rest)
}

/// Maximal runs of Unicode letters or digits, after emoji removal.
pub fn words(text: &str) -> Vec<String> {
    let (_, rest) = split_emoji(text);
    rest.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// Segments between runs of sentence terminators that hold anything other
/// than whitespace.
pub fn sentence_count(text: &str) -> usize {
    text.split(SENTENCE_BREAKS)
        .filter(|s| !s.trim().is_empty())
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LexicalStats {
    pub sentences_per_comment: f64,
    pub words_per_comment: f64,
    pub words_per_sentence: f64,
    /// Unicode scalars of the raw text, emoji included.
    pub length_chars: usize,
    pub has_word_repetition: bool,
}

pub fn lexical(comment: &str) -> LexicalStats {
    let ws = words(comment);
    let sentences = sentence_count(comment);
    let mut seen = HashSet::new();
    let has_word_repetition = ws.iter().any(|w| !seen.insert(w.to_lowercase()));
    LexicalStats {
        sentences_per_comment: sentences as f64,
        words_per_comment: ws.len() as f64,
        words_per_sentence: if sentences == 0 {
            0.0
        } else {
            ws.len() as f64 / sentences as f64
        },
        length_chars: comment.chars().count(),
        has_word_repetition,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntacticStats {
    pub starts_uppercase: bool,
    pub has_punctuation: bool,
    /// Share of words written entirely in uppercase letters.
    pub uppercase_word_ratio: f64,
}

fn is_upper_word(w: &str) -> bool {
    w.chars().any(char::is_alphabetic) && w.chars().filter(|c| c.is_alphabetic()).all(char::is_uppercase)
}

pub fn syntactic(comment: &str) -> SyntacticStats {
    let ws = words(comment);
    let upper = ws.iter().filter(|w| is_upper_word(w)).count();
    SyntacticStats {
        starts_uppercase: comment.chars().next().is_some_and(char::is_uppercase),
        has_punctuation: comment.chars().any(|c| PUNCTUATION.contains(&c)),
        uppercase_word_ratio: if ws.is_empty() {
            0.0
        } else {
            upper as f64 / ws.len() as f64
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmojiStats {
    /// Every occurrence counts.
    pub emoji_count: usize,
    /// In order of first appearance.
    pub distinct_emojis: Vec<String>,
    pub has_emoji: bool,
}

pub fn emoji(comment: &str) -> EmojiStats {
    let (clusters, _) = split_emoji(comment);
    let mut distinct: Vec<String> = Vec::new();
    for c in &clusters {
        if !distinct.contains(c) {
            distinct.push(c.clone());
        }
    }
    EmojiStats {
        emoji_count: clusters.len(),
        has_emoji: !clusters.is_empty(),
        distinct_emojis: distinct,
    }
}
