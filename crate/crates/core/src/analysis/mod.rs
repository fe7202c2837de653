//! Forensic analyses over profiles and comments: follower tiers, the
//! following histogram, biography watchlist hits, comment activity and
//! comment stylometry.

mod stylometry;
pub mod text;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

pub use stylometry::{
    stylometry_report, word_frequencies, EmojiShare, GroupStylometry, PValue, StylometryReport,
    WordCount, TOP_EMOJI,
};
pub use text::{emoji, lexical, syntactic, EmojiStats, LexicalStats, SyntacticStats};

use crate::datamodel::{CommentRecord, Label, ProfileRecord};
use crate::error::{Error, Result};
use crate::eval::MeanStd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    Normal,
    Nano,
    Micro,
    MidTier,
    Macro,
    Mega,
}

impl Tier {
    pub const ALL: [Tier; 6] = [Tier::Normal, Tier::Nano, Tier::Micro, Tier::MidTier, Tier::Macro, Tier::Mega];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Normal => "Normal",
            Tier::Nano => "Nano",
            Tier::Micro => "Micro",
            Tier::MidTier => "MidTier",
            Tier::Macro => "Macro",
            Tier::Mega => "Mega",
        }
    }
}

/// Lower bounds are inclusive; exactly one million is Mega.
pub fn tier_of(followers: u64) -> Tier {
    match followers {
        0..1_000 => Tier::Normal,
        1_000..10_000 => Tier::Nano,
        10_000..50_000 => Tier::Micro,
        50_000..500_000 => Tier::MidTier,
        500_000..1_000_000 => Tier::Macro,
        _ => Tier::Mega,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Tier,
    Label,
    /// Tier within each label.
    LabelTier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStat {
    pub group: String,
    pub count: usize,
    pub followers: MeanStd,
    pub following: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStatsReport {
    pub group_by: GroupBy,
    pub std: String,
    pub groups: Vec<GroupStat>,
    /// Groups with no members, left out of `groups`.
    pub omitted: Vec<String>,
}

fn label_name(l: Option<Label>) -> &'static str {
    l.map_or("unknown", Label::as_str)
}

pub fn group_stats(profiles: &[ProfileRecord], group_by: GroupBy) -> GroupStatsReport {
    let labels = ["CT", "Real", "unknown"];
    let keys: Vec<String> = match group_by {
        GroupBy::Tier => Tier::ALL.iter().map(|t| t.as_str().to_string()).collect(),
        GroupBy::Label => labels.iter().map(|s| s.to_string()).collect(),
        GroupBy::LabelTier => labels
            .iter()
            .flat_map(|l| Tier::ALL.iter().map(move |t| format!("{l}/{}", t.as_str())))
            .collect(),
    };
    let key_of = |p: &ProfileRecord| match group_by {
        GroupBy::Tier => tier_of(p.followers).as_str().to_string(),
        GroupBy::Label => label_name(p.label).to_string(),
        GroupBy::LabelTier => format!("{}/{}", label_name(p.label), tier_of(p.followers).as_str()),
    };
    let mut members: HashMap<String, (Vec<f64>, Vec<f64>)> = HashMap::new();
    for p in profiles {
        let e = members.entry(key_of(p)).or_default();
        e.0.push(p.followers as f64);
        e.1.push(p.following as f64);
    }
    let mut groups = Vec::new();
    let mut omitted = Vec::new();
    for k in keys {
        match members.get(&k) {
            Some((fo, fi)) => groups.push(GroupStat {
                group: k,
                count: fo.len(),
                followers: MeanStd::of(fo),
                following: MeanStd::of(fi),
            }),
            None => omitted.push(k),
        }
    }
    GroupStatsReport {
        group_by,
        std: "population".into(),
        groups,
        omitted,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: u64,
    /// Exclusive; `None` for the overflow bin.
    pub upper: Option<u64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: u64,
    pub cap: u64,
    pub bins: Vec<HistogramBin>,
    pub total: usize,
}

/// Right-open bins of `bin_width` up to `cap`, then one overflow bin.
pub fn following_histogram(profiles: &[ProfileRecord], bin_width: u64, cap: u64) -> Result<Histogram> {
    if bin_width == 0 {
        return Err(Error::InvalidInput("bin width must be positive".into()));
    }
    let n_bins = cap.div_ceil(bin_width);
    let top = n_bins * bin_width;
    let mut bins: Vec<HistogramBin> = (0..n_bins)
        .map(|i| HistogramBin {
            lower: i * bin_width,
            upper: Some((i + 1) * bin_width),
            count: 0,
        })
        .collect();
    bins.push(HistogramBin { lower: top, upper: None, count: 0 });
    for p in profiles {
        let i = if p.following >= top { n_bins } else { p.following / bin_width };
        bins[i as usize].count += 1;
    }
    Ok(Histogram { bin_width, cap, bins, total: profiles.len() })
}

/// Published subset of the biography watchlist.
pub const DEFAULT_WATCHLIST: [&str; 11] = [
    "stories", "chat", "follow", "gain", "click", "link", "\u{1F51E}", "\u{1F48B}", "\u{1F351}", "\u{1F346}",
    "\u{1F4A6}",
];

fn is_emoji_entry(entry: &str) -> bool {
    entry.chars().any(text::is_emoji)
}

pub fn default_watchlist() -> Vec<String> {
    DEFAULT_WATCHLIST.iter().map(|s| s.to_string()).collect()
}

/// One entry per non-blank line.
pub fn parse_watchlist(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryHits {
    pub entry: String,
    pub profiles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiographyScan {
    pub n_profiles: usize,
    pub matched: Vec<String>,
    pub fraction: f64,
    pub per_entry: Vec<EntryHits>,
}

/// Words match case-insensitively as substrings; emoji entries match their
/// exact scalars.
pub fn biography_scan(profiles: &[ProfileRecord], watchlist: &[String]) -> Result<BiographyScan> {
    if watchlist.is_empty() {
        return Err(Error::InvalidInput("empty watchlist".into()));
    }
    let entries: Vec<(String, bool)> = watchlist
        .iter()
        .map(|e| {
            let emoji = is_emoji_entry(e);
            (if emoji { e.clone() } else { e.to_lowercase() }, emoji)
        })
        .collect();
    let mut per_entry = vec![0usize; entries.len()];
    let mut matched = Vec::new();
    for p in profiles {
        let lower = p.biography.to_lowercase();
        let mut any = false;
        for (i, (e, emoji)) in entries.iter().enumerate() {
            let hay = if *emoji { &p.biography } else { &lower };
            if !e.is_empty() && hay.contains(e.as_str()) {
                per_entry[i] += 1;
                any = true;
            }
        }
        if any {
            matched.push(p.user_id.clone());
        }
    }
    Ok(BiographyScan {
        n_profiles: profiles.len(),
        fraction: if profiles.is_empty() { 0.0 } else { matched.len() as f64 / profiles.len() as f64 },
        matched,
        per_entry: watchlist
            .iter()
            .zip(per_entry)
            .map(|(e, n)| EntryHits { entry: e.clone(), profiles: n })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommentActivity {
    pub group: String,
    pub authors: usize,
    pub comments: usize,
    pub per_author: MeanStd,
}

/// Comments per distinct author, grouped by author label. `labels` takes
/// precedence over labels carried on the comments; authors with neither
/// land in "unknown".
pub fn comments_per_user(comments: &[CommentRecord], labels: Option<&HashMap<String, Label>>) -> Vec<CommentActivity> {
    let mut per_author: BTreeMap<&str, (usize, Option<Label>)> = BTreeMap::new();
    for c in comments {
        let e = per_author.entry(&c.author_id).or_insert((0, None));
        e.0 += 1;
        if e.1.is_none() {
            e.1 = labels
                .and_then(|m| m.get(&c.author_id).copied())
                .or(c.author_label);
        }
    }
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (n, label) in per_author.values() {
        groups.entry(label_name(*label)).or_default().push(*n as f64);
    }
    ["CT", "Real", "unknown"]
        .iter()
        .filter_map(|g| {
            groups.get(g).map(|counts| CommentActivity {
                group: g.to_string(),
                authors: counts.len(),
                comments: counts.iter().sum::<f64>() as usize,
                per_author: MeanStd::of(counts),
            })
        })
        .collect()
}
