use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::text::{emoji, lexical, syntactic, words};
use crate::datamodel::Label;
use crate::error::{Error, Result};
use crate::eval::{welch_ttest, MeanStd};

pub const TOP_EMOJI: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmojiShare {
    pub emoji: String,
    /// Comments containing the emoji over all per-comment emoji occurrences.
    pub share: f64,
    pub comments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStylometry {
    pub group: Label,
    pub n_comments: usize,
    pub sentences_per_comment: MeanStd,
    pub words_per_comment: MeanStd,
    pub words_per_sentence: MeanStd,
    pub length_chars: MeanStd,
    pub word_repetition_rate: f64,
    pub starts_uppercase_rate: f64,
    pub punctuation_rate: f64,
    /// Per-comment ratio, then averaged over comments.
    pub uppercase_word_ratio: MeanStd,
    /// Share of comments with at least one emoji.
    pub comments_with_emoji: f64,
    /// Mean emoji count over comments that have emoji.
    pub emoji_per_comment_with_emoji: f64,
    pub top_emoji: Vec<EmojiShare>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValue {
    pub metric: String,
    pub t: Option<f64>,
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StylometryReport {
    pub test: String,
    pub uppercase_ratio_mode: String,
    pub groups: Vec<GroupStylometry>,
    pub p_values: Vec<PValue>,
}

#[derive(Default)]
struct Columns {
    sentences: Vec<f64>,
    words: Vec<f64>,
    wps: Vec<f64>,
    length: Vec<f64>,
    upper_ratio: Vec<f64>,
    repetition: usize,
    starts_upper: usize,
    punctuation: usize,
    with_emoji: usize,
    emoji_total: usize,
    emoji_comments: BTreeMap<String, usize>,
}

fn rate(n: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        n as f64 / total as f64
    }
}

fn columns(texts: &[&str]) -> Columns {
    let mut c = Columns::default();
    for t in texts {
        let lx = lexical(t);
        let sx = syntactic(t);
        let ex = emoji(t);
        c.sentences.push(lx.sentences_per_comment);
        c.words.push(lx.words_per_comment);
        c.wps.push(lx.words_per_sentence);
        c.length.push(lx.length_chars as f64);
        c.upper_ratio.push(sx.uppercase_word_ratio);
        c.repetition += usize::from(lx.has_word_repetition);
        c.starts_upper += usize::from(sx.starts_uppercase);
        c.punctuation += usize::from(sx.has_punctuation);
        if ex.has_emoji {
            c.with_emoji += 1;
            c.emoji_total += ex.emoji_count;
        }
        for e in ex.distinct_emojis {
            *c.emoji_comments.entry(e).or_default() += 1;
        }
    }
    c
}

fn summarize(group: Label, c: &Columns) -> GroupStylometry {
    let n = c.words.len();
    let occurrences: usize = c.emoji_comments.values().sum();
    let mut ranked: Vec<(&String, &usize)> = c.emoji_comments.iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    GroupStylometry {
        group,
        n_comments: n,
        sentences_per_comment: MeanStd::of(&c.sentences),
        words_per_comment: MeanStd::of(&c.words),
        words_per_sentence: MeanStd::of(&c.wps),
        length_chars: MeanStd::of(&c.length),
        word_repetition_rate: rate(c.repetition, n),
        starts_uppercase_rate: rate(c.starts_upper, n),
        punctuation_rate: rate(c.punctuation, n),
        uppercase_word_ratio: MeanStd::of(&c.upper_ratio),
        comments_with_emoji: rate(c.with_emoji, n),
        emoji_per_comment_with_emoji: rate(c.emoji_total, c.with_emoji),
        top_emoji: ranked
            .into_iter()
            .take(TOP_EMOJI)
            .map(|(e, &k)| EmojiShare {
                emoji: e.clone(),
                share: rate(k, occurrences),
                comments: k,
            })
            .collect(),
    }
}

fn p_value(metric: &str, a: &[f64], b: &[f64]) -> PValue {
    match welch_ttest(a, b) {
        Ok(r) => PValue { metric: metric.into(), t: Some(r.t), p: Some(r.p), note: None },
        Err(e) => PValue { metric: metric.into(), t: None, p: None, note: Some(e.to_string()) },
    }
}

/// Compares CT and Real comment texts.
pub fn stylometry_report(ct: &[&str], real: &[&str]) -> Result<StylometryReport> {
    if ct.is_empty() || real.is_empty() {
        return Err(Error::InvalidInput("stylometry needs comments from both groups".into()));
    }
    let a = columns(ct);
    let b = columns(real);
    let p_values = vec![
        p_value("words_per_comment", &a.words, &b.words),
        p_value("length_chars", &a.length, &b.length),
        p_value("words_per_sentence", &a.wps, &b.wps),
        p_value("sentences_per_comment", &a.sentences, &b.sentences),
    ];
    Ok(StylometryReport {
        test: "welch".into(),
        uppercase_ratio_mode: "per_comment_mean".into(),
        groups: vec![summarize(Label::Ct, &a), summarize(Label::Real, &b)],
        p_values,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordCount {
    pub word: String,
    pub count: usize,
}

/// Case-folded word counts, dropping words shorter than `min_len` scalars.
/// Ranked by count, then alphabetically.
pub fn word_frequencies<S: AsRef<str>>(comments: &[S], min_len: usize, top_n: usize) -> Vec<WordCount> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for c in comments {
        for w in words(c.as_ref()) {
            let w = w.to_lowercase();
            if w.chars().count() >= min_len {
                *counts.entry(w).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<WordCount> = counts.into_iter().map(|(word, count)| WordCount { word, count }).collect();
    ranked.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
    ranked.truncate(top_n);
    ranked
}
