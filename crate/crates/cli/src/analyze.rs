use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use clap::Args;
use ctaudit::analysis::{
    biography_scan, comments_per_user, default_watchlist, following_histogram, group_stats, parse_watchlist,
    stylometry_report, word_frequencies, GroupBy,
};
use ctaudit::datamodel::{read_comments, read_profiles};
use ctaudit::urlintel::{
    url_report, DomainMap, HttpProvider, LookupError, ReputationProvider, ReputationVerdict, StubProvider,
    DEFAULT_IN_FLIGHT,
};
use ctaudit::{CommentRecord, Label, ProfileRecord};
use serde::Serialize;

use crate::manifest::{ensure_dir, Run};
use crate::{CliResult, Failure};

#[derive(Args, Serialize)]
pub struct AnalyzeArgs {
    /// Profile JSONL.
    #[arg(long)]
    pub profiles: PathBuf,
    /// Comment JSONL.
    #[arg(long)]
    pub comments: Option<PathBuf>,
    /// Predictions CSV from `predict`; its labels override profile labels.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Biography watchlist, one entry per line.
    #[arg(long)]
    pub watchlist: Option<PathBuf>,
    /// Domain map JSON (defaults to the shipped map).
    #[arg(long)]
    pub domain_map: Option<PathBuf>,
    /// Offline reputation map, domain -> verdict JSON.
    #[arg(long, conflicts_with = "reputation_http")]
    pub reputation_stub: Option<PathBuf>,
    /// HTTP reputation service config JSON; the API key comes from the
    /// environment variable it names.
    #[arg(long)]
    pub reputation_http: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub bin_width: u64,
    #[arg(long, default_value_t = 8000)]
    pub histogram_cap: u64,
    /// Shortest word kept in the frequency lists, in characters.
    #[arg(long, default_value_t = 3)]
    pub min_word_len: usize,
    #[arg(long, default_value_t = 50)]
    pub top_words: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Stands in when no reputation source is configured.
struct NoProvider;

impl ReputationProvider for NoProvider {
    fn lookup(&self, _url: &str) -> Result<ReputationVerdict, LookupError> {
        Err(LookupError::Unavailable("no reputation source configured".into()))
    }
}

fn csv_bytes<F>(header: &[&str], fill: F) -> CliResult<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).and_then(|_| fill(&mut w)).map_err(|e| Failure::Data(e.to_string()))?;
    w.into_inner().map_err(|e| Failure::Data(e.to_string()))
}

fn read_predictions(path: &Path) -> CliResult<HashMap<String, Label>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let mut out = HashMap::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        let (Some(id), Some(label)) = (rec.get(0), rec.get(2)) else {
            return Err(Failure::Data(format!("{}: expected user_id,p_ct,label", path.display())));
        };
        let label = match label.trim() {
            "1" | "CT" => Label::Ct,
            "0" | "Real" => Label::Real,
            other => return Err(Failure::Data(format!("{}: bad label `{other}`", path.display()))),
        };
        out.insert(id.to_string(), label);
    }
    Ok(out)
}

/// Profiles split into ("all", everyone) then one group per label present.
fn label_groups(profiles: &[ProfileRecord]) -> Vec<(&'static str, Vec<ProfileRecord>)> {
    let mut groups = vec![("all", profiles.to_vec())];
    for l in [Label::Ct, Label::Real] {
        let members: Vec<ProfileRecord> = profiles.iter().filter(|p| p.label == Some(l)).cloned().collect();
        if !members.is_empty() {
            groups.push((l.as_str(), members));
        }
    }
    groups
}

fn f(x: f64) -> String {
    format!("{x:.6}")
}

pub fn run(a: &AnalyzeArgs) -> CliResult<()> {
    let mut run = Run::new("analyze");
    run.input(&a.profiles)?;
    let mut profiles = read_profiles(&a.profiles)?;
    let predicted = match &a.predictions {
        Some(p) => {
            run.input(p)?;
            Some(read_predictions(p)?)
        }
        None => None,
    };
    if let Some(pred) = &predicted {
        for p in &mut profiles {
            if let Some(&l) = pred.get(&p.user_id) {
                p.label = Some(l);
            }
        }
    }
    let comments: Option<Vec<CommentRecord>> = match &a.comments {
        Some(p) => {
            run.input(p)?;
            Some(read_comments(p)?)
        }
        None => None,
    };
    let watchlist = match &a.watchlist {
        Some(p) => {
            run.input(p)?;
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?;
            parse_watchlist(&text)
        }
        None => default_watchlist(),
    };
    let map = match &a.domain_map {
        Some(p) => {
            run.input(p)?;
            DomainMap::read(p)?
        }
        None => DomainMap::default(),
    };
    let provider: Box<dyn ReputationProvider> = match (&a.reputation_stub, &a.reputation_http) {
        (Some(p), _) => {
            run.input(p)?;
            Box::new(StubProvider::read(p)?)
        }
        (None, Some(p)) => {
            run.input(p)?;
            Box::new(HttpProvider::new(HttpProvider::read_config(p)?)?)
        }
        (None, None) => Box::new(NoProvider),
    };
    let dir = &a.out_dir;
    ensure_dir(dir)?;
    let groups = label_groups(&profiles);

    // tiers
    let tiers = [group_stats(&profiles, GroupBy::Tier), group_stats(&profiles, GroupBy::LabelTier)];
    run.write_json(dir.join("tiers.json"), &tiers)?;
    let bytes = csv_bytes(
        &["group_by", "group", "count", "followers_mean", "followers_std", "following_mean", "following_std"],
        |w| {
            for (by, r) in ["tier", "label_tier"].iter().zip(&tiers) {
                for g in &r.groups {
                    w.write_record([
                        by.to_string(),
                        g.group.clone(),
                        g.count.to_string(),
                        f(g.followers.mean),
                        f(g.followers.std),
                        f(g.following.mean),
                        f(g.following.std),
                    ])?;
                }
            }
            Ok(())
        },
    )?;
    run.write(dir.join("tiers.csv"), &bytes)?;

    // following histogram
    let hists = groups
        .iter()
        .map(|(g, ps)| Ok((g.to_string(), following_histogram(ps, a.bin_width, a.histogram_cap)?)))
        .collect::<CliResult<Vec<_>>>()?;
    run.write_json(dir.join("following_histogram.json"), &hists.iter().map(|(g, h)| (g, h)).collect::<BTreeMap<_, _>>())?;
    let bytes = csv_bytes(&["group", "lower", "upper", "count"], |w| {
        for (g, h) in &hists {
            for b in &h.bins {
                let upper = b.upper.map(|u| u.to_string()).unwrap_or_default();
                w.write_record([g.clone(), b.lower.to_string(), upper, b.count.to_string()])?;
            }
        }
        Ok(())
    })?;
    run.write(dir.join("following_histogram.csv"), &bytes)?;

    // biography watchlist
    let scans = groups
        .iter()
        .map(|(g, ps)| Ok((g.to_string(), biography_scan(ps, &watchlist)?)))
        .collect::<CliResult<Vec<_>>>()?;
    run.write_json(dir.join("biography.json"), &scans.iter().map(|(g, s)| (g, s)).collect::<BTreeMap<_, _>>())?;
    let bytes = csv_bytes(&["group", "entry", "profiles", "n_profiles"], |w| {
        for (g, s) in &scans {
            w.write_record([g.as_str(), "*any*", &s.matched.len().to_string(), &s.n_profiles.to_string()])?;
            for e in &s.per_entry {
                w.write_record([g.clone(), e.entry.clone(), e.profiles.to_string(), s.n_profiles.to_string()])?;
            }
        }
        Ok(())
    })?;
    run.write(dir.join("biography.csv"), &bytes)?;

    // urls
    let urls = url_report(&profiles, &map, provider.as_ref(), DEFAULT_IN_FLIGHT)?;
    run.write_json(dir.join("urls.json"), &urls)?;
    run.write(dir.join("urls.csv"), &urls.entries_csv()?)?;

    let mut skipped = Vec::new();
    match &comments {
        None => skipped.extend(["stylometry", "comments_per_user", "word_frequencies"]),
        Some(comments) => {
            let mut labels: HashMap<String, Label> =
                profiles.iter().filter_map(|p| Some((p.user_id.clone(), p.label?))).collect();
            if let Some(pred) = &predicted {
                labels.extend(pred.iter().map(|(k, v)| (k.clone(), *v)));
            }
            let label_of = |c: &CommentRecord| labels.get(&c.author_id).copied().or(c.author_label);
            let texts = |l: Label| -> Vec<&str> {
                comments.iter().filter(|c| label_of(c) == Some(l)).map(|c| c.text.as_str()).collect()
            };
            let (ct, real) = (texts(Label::Ct), texts(Label::Real));

            if ct.is_empty() || real.is_empty() {
                skipped.push("stylometry");
            } else {
                let r = stylometry_report(&ct, &real)?;
                run.write_json(dir.join("stylometry.json"), &r)?;
                let bytes = csv_bytes(&["metric", "CT", "Real", "t", "p"], |w| {
                    let (c, rl) = (&r.groups[0], &r.groups[1]);
                    let ms = |m: &ctaudit::eval::MeanStd| format!("{:.6}±{:.6}", m.mean, m.std);
                    let rows = [
                        ("n_comments", c.n_comments.to_string(), rl.n_comments.to_string()),
                        ("sentences_per_comment", ms(&c.sentences_per_comment), ms(&rl.sentences_per_comment)),
                        ("words_per_comment", ms(&c.words_per_comment), ms(&rl.words_per_comment)),
                        ("words_per_sentence", ms(&c.words_per_sentence), ms(&rl.words_per_sentence)),
                        ("length_chars", ms(&c.length_chars), ms(&rl.length_chars)),
                        ("word_repetition_rate", f(c.word_repetition_rate), f(rl.word_repetition_rate)),
                        ("starts_uppercase_rate", f(c.starts_uppercase_rate), f(rl.starts_uppercase_rate)),
                        ("punctuation_rate", f(c.punctuation_rate), f(rl.punctuation_rate)),
                        ("uppercase_word_ratio", ms(&c.uppercase_word_ratio), ms(&rl.uppercase_word_ratio)),
                        ("comments_with_emoji", f(c.comments_with_emoji), f(rl.comments_with_emoji)),
                        (
                            "emoji_per_comment_with_emoji",
                            f(c.emoji_per_comment_with_emoji),
                            f(rl.emoji_per_comment_with_emoji),
                        ),
                    ];
                    for (name, x, y) in rows {
                        let pv = r.p_values.iter().find(|p| p.metric == name);
                        let t = pv.and_then(|p| p.t).map(f).unwrap_or_default();
                        let p = pv.and_then(|p| p.p).map(|p| format!("{p:.6e}")).unwrap_or_default();
                        w.write_record([name.to_string(), x, y, t, p])?;
                    }
                    Ok(())
                })?;
                run.write(dir.join("stylometry.csv"), &bytes)?;
            }

            let activity = comments_per_user(comments, Some(&labels));
            run.write_json(dir.join("comments_per_user.json"), &activity)?;
            let bytes = csv_bytes(&["group", "authors", "comments", "per_author_mean", "per_author_std"], |w| {
                for g in &activity {
                    w.write_record([
                        g.group.clone(),
                        g.authors.to_string(),
                        g.comments.to_string(),
                        f(g.per_author.mean),
                        f(g.per_author.std),
                    ])?;
                }
                Ok(())
            })?;
            run.write(dir.join("comments_per_user.csv"), &bytes)?;

            let freqs: Vec<(&str, Vec<ctaudit::analysis::WordCount>)> = [(Label::Ct, &ct), (Label::Real, &real)]
                .into_iter()
                .map(|(l, t)| (l.as_str(), word_frequencies(t, a.min_word_len, a.top_words)))
                .collect();
            run.write_json(dir.join("word_frequencies.json"), &freqs.iter().cloned().collect::<BTreeMap<_, _>>())?;
            let bytes = csv_bytes(&["group", "rank", "word", "count"], |w| {
                for (g, list) in &freqs {
                    for (i, wc) in list.iter().enumerate() {
                        w.write_record([g.to_string(), (i + 1).to_string(), wc.word.clone(), wc.count.to_string()])?;
                    }
                }
                Ok(())
            })?;
            run.write(dir.join("word_frequencies.csv"), &bytes)?;
        }
    }
    for s in &skipped {
        if comments.is_none() {
            eprintln!("notice: {s} skipped, no --comments given");
        } else {
            eprintln!("notice: {s} skipped, comments from both CT and Real authors are needed");
        }
    }
    run.finish(dir.join("manifest.json"), &serde_json::json!({ "args": a, "skipped": skipped }))?;
    println!(
        "analyzed {} profiles{}; reports in {}",
        profiles.len(),
        comments.as_ref().map(|c| format!(" and {} comments", c.len())).unwrap_or_default(),
        dir.display()
    );
    Ok(())
}
