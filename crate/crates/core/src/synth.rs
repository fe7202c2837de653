//! Synthetic labeled profiles whose count and rate marginals follow the
//! published per-provider measurements.
//!
//! Counts are drawn from a normal truncated at zero and then rounded. The
//! normal's location is solved for so that the *expected rounded value*
//! equals the target mean; using the target mean directly would inflate
//! the mean of every heavy-tailed row, since truncation only removes mass
//! below zero.

use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::datamodel::{atomic_write, Dataset, Label, ProfileRecord};
use crate::error::{Error, Result};
use crate::features::build_matrix;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProviderMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_usd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delivery_time: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop_protection: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub followers_received: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub followers_1_month: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderParams {
    pub name: String,
    pub label: Label,
    pub followers_mean: f64,
    pub followers_std: f64,
    pub following_mean: f64,
    pub following_std: f64,
    pub posts_mean: f64,
    pub posts_std: f64,
    pub private_rate: f64,
    pub url_rate: f64,
    pub count: usize,
    /// Service descriptors; never used for sampling.
    #[serde(default)]
    pub meta: ProviderMeta,
}

impl ProviderParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("provider {}: {m}", self.name)));
        for (what, mean, std) in [
            ("followers", self.followers_mean, self.followers_std),
            ("following", self.following_mean, self.following_std),
            ("posts", self.posts_mean, self.posts_std),
        ] {
            if !(mean.is_finite() && mean >= 0.0) {
                return bad(format!("{what} mean must be finite and >= 0"));
            }
            if !(std.is_finite() && std >= 0.0) {
                return bad(format!("{what} std must be finite and >= 0"));
            }
        }
        for (what, r) in [("private_rate", self.private_rate), ("url_rate", self.url_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("{what} must lie in [0,1]"));
            }
        }
        if self.count == 0 {
            return bad("count must be >= 1".into());
        }
        Ok(())
    }
}

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub min: usize,
    pub max: usize,
}

impl Span {
    pub const fn new(min: usize, max: usize) -> Span {
        Span { min, max }
    }

    fn sample(self, rng: &mut impl Rng) -> usize {
        rng.random_range(self.min..=self.max)
    }
}

/// Fields the measurement table does not cover, per label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelAux {
    pub username_length: Span,
    pub digit_count: Span,
    pub fullname_length: Span,
    pub bio_length: Span,
    pub verified_rate: f64,
    pub clips_rate: f64,
    pub business_rate: f64,
    pub category_rate: f64,
    pub multiple_categories_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxParams {
    pub videos_fraction_of_posts: f64,
    pub ct: LabelAux,
    pub real: LabelAux,
}

impl AuxParams {
    pub fn for_label(&self, label: Label) -> &LabelAux {
        match label {
            Label::Ct => &self.ct,
            Label::Real => &self.real,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.videos_fraction_of_posts) {
            return Err(Error::InvalidConfig("videos_fraction_of_posts must lie in [0,1]".into()));
        }
        for a in [&self.ct, &self.real] {
            for s in [a.username_length, a.digit_count, a.fullname_length, a.bio_length] {
                if s.min > s.max {
                    return Err(Error::InvalidConfig(format!("empty range {}..={}", s.min, s.max)));
                }
            }
            if a.username_length.max == 0 {
                return Err(Error::InvalidConfig("usernames need at least one character".into()));
            }
            for r in [a.verified_rate, a.clips_rate, a.business_rate, a.category_rate, a.multiple_categories_rate] {
                if !(0.0..=1.0).contains(&r) {
                    return Err(Error::InvalidConfig(format!("rate {r} outside [0,1]")));
                }
            }
        }
        Ok(())
    }
}

impl Default for AuxParams {
    // Overlapping ranges so these fields carry only a weak signal.
    fn default() -> Self {
        AuxParams {
            videos_fraction_of_posts: 0.15,
            ct: LabelAux {
                username_length: Span::new(6, 22),
                digit_count: Span::new(0, 5),
                fullname_length: Span::new(0, 20),
                bio_length: Span::new(0, 90),
                verified_rate: 0.0,
                clips_rate: 0.25,
                business_rate: 0.06,
                category_rate: 0.08,
                multiple_categories_rate: 0.01,
            },
            real: LabelAux {
                username_length: Span::new(5, 20),
                digit_count: Span::new(0, 3),
                fullname_length: Span::new(3, 24),
                bio_length: Span::new(0, 140),
                verified_rate: 0.01,
                clips_rate: 0.4,
                business_rate: 0.1,
                category_rate: 0.12,
                multiple_categories_rate: 0.02,
            },
        }
    }
}

/// A full generator configuration, as read from or written to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub providers: Vec<ProviderParams>,
    #[serde(default)]
    pub aux: AuxParams,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            providers: default_params(),
            aux: AuxParams::default(),
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.providers.is_empty() {
            return Err(Error::InvalidConfig("no providers".into()));
        }
        for p in &self.providers {
            p.validate()?;
        }
        self.aux.validate()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<SynthParams> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let params: SynthParams = serde_json::from_str(&text)?;
        params.validate()?;
        Ok(params)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        atomic_write(path, &bytes)
    }
}

#[allow(clippy::too_many_arguments)]
fn provider(
    name: &str,
    price: Option<f64>,
    delivery: Option<&str>,
    drop: Option<bool>,
    received: Option<u64>,
    month: Option<u64>,
    followers: (f64, f64),
    following: (f64, f64),
    private_pct: f64,
    posts: (f64, f64),
    url_pct: f64,
) -> ProviderParams {
    let label = if received.is_some() { Label::Ct } else { Label::Real };
    ProviderParams {
        name: name.into(),
        label,
        followers_mean: followers.0,
        followers_std: followers.1,
        following_mean: following.0,
        following_std: following.1,
        posts_mean: posts.0,
        posts_std: posts.1,
        private_rate: private_pct / 100.0,
        url_rate: url_pct / 100.0,
        count: received.map_or(1307, |r| r as usize),
        meta: ProviderMeta {
            price_usd: price,
            delivery_time: delivery.map(str::to_string),
            drop_protection: drop,
            followers_received: received,
            followers_1_month: month,
        },
    }
}

/// Ten crowdturfing providers, one low-quality seller and the real
/// reference group. Each CT provider contributes as many profiles as it
/// delivered followers.
pub fn default_params() -> Vec<ProviderParams> {
    let p = |name, price, delivery, drop, received, month, fo, fi, private, posts, url| {
        provider(name, Some(price), Some(delivery), Some(drop), Some(received), Some(month), fo, fi, private, posts, url)
    };
    vec![
        p("CT-1", 5.69, "Instant", true, 115, 74, (409.59, 1110.46), (812.38, 1331.52), 0.13, (14.83, 57.98), 0.08),
        p("CT-2", 2.39, "5-10m", false, 211, 340, (44.61, 106.85), (4679.75, 1452.19), 0.0, (16.0, 8.06), 0.0),
        p("CT-3", 2.95, "Instant", true, 111, 85, (132.17, 327.28), (3027.08, 1883.18), 0.05, (20.19, 55.99), 0.09),
        p("CT-4", 2.0, "Instant", false, 100, 42, (239.45, 262.64), (2735.6, 1286.65), 0.45, (111.95, 332.2), 0.01),
        p("CT-5", 3.95, "Gradual", true, 79, 61, (201.43, 214.0), (3510.77, 2316.12), 0.0, (16.06, 12.13), 0.054),
        p("CT-6", 2.89, "24-72h", true, 136, 129, (36.79, 39.64), (2398.88, 2191.18), 0.0, (14.06, 5.69), 0.0),
        p("CT-7", 2.70, "1h", true, 108, 109, (39.23, 73.32), (3966.36, 761.16), 0.0, (19.74, 20.13), 0.0),
        p("CT-8", 5.78, "Gradual", false, 110, 95, (57.52, 138.97), (1818.84, 1353.95), 0.04, (29.75, 41.09), 0.01),
        p("CT-9", 3.95, "12h", false, 109, 99, (129.54, 759.85), (2012.93, 1198.17), 0.06, (26.99, 74.94), 0.0),
        p("CT-10", 5.94, "Gradual", false, 97, 94, (83.38, 174.57), (2118.31, 1323.78), 0.03, (40.28, 51.5), 0.0),
        p("Low quality", 0.80, "24-72h", false, 117, 96, (87.26, 276.26), (3200.67, 3041.89), 0.04, (1.88, 6.15), 0.02),
        provider("Real", None, None, None, None, None, (359.33, 237.87), (571.24, 517.53), 57.92, (279.09, 369.67), 14.44),
    ]
}

/// P(Z > z) for a standard normal Z.
fn upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Inverse of [`upper_tail`].
fn upper_tail_inv(p: f64) -> f64 {
    std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// E[round(X)] for X ~ N(loc, scale) conditioned on X >= 0.
pub fn expected_rounded(loc: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        return loc.max(0.0).round();
    }
    let norm = upper_tail(-loc / scale);
    // E[round X] = sum_{k>=1} P(X >= k - 1/2)
    let mut sum = 0.0;
    let mut k = 1.0;
    loop {
        let z = (k - 0.5 - loc) / scale;
        let term = upper_tail(z) / norm;
        sum += term;
        if z > 0.0 && term < 1e-17 * sum.max(1.0) {
            break;
        }
        k += 1.0;
    }
    sum
}

/// Location of the untruncated normal whose truncated-then-rounded
/// expectation equals `mean`.
pub fn calibrated_location(mean: f64, std: f64) -> f64 {
    if std == 0.0 || mean / std > 9.0 {
        return mean;
    }
    let (mut lo, mut hi) = (-35.0 * std, mean + 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if expected_rounded(mid, std) < mean {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 * std {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Inverse-CDF draws from N(loc, scale) truncated to [0, inf), rounded.
struct CountSampler {
    loc: f64,
    scale: f64,
    mass: f64,
}

impl CountSampler {
    fn new(mean: f64, std: f64) -> CountSampler {
        let loc = calibrated_location(mean, std);
        let mass = if std == 0.0 { 1.0 } else { upper_tail(-loc / std) };
        CountSampler { loc, scale: std, mass }
    }

    fn sample(&self, rng: &mut impl Rng) -> u64 {
        if self.scale == 0.0 {
            return self.loc.max(0.0).round() as u64;
        }
        let u: f64 = 1.0 - rng.random::<f64>();
        let z = upper_tail_inv(u * self.mass);
        (self.loc + self.scale * z).max(0.0).round() as u64
    }
}

const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
const BIO_WORDS: &[&str] = &[
    "life", "travel", "music", "love", "photo", "coffee", "dreams", "fitness", "family", "art",
    "food", "nature", "style", "happy", "daily", "student", "dog", "beach", "summer", "books",
];
const URL_POOL: &[&str] = &[
    "https://www.youtube.com/c/channel",
    "https://linktr.ee/profile",
    "https://wa.me/15550100",
    "https://t.me/joinchat/group",
    "https://www.facebook.com/page",
    "https://open.spotify.com/artist/x",
    "https://www.paypal.me/someone",
    "https://sites.google.com/view/me",
    "https://my-portfolio.example.org",
    "https://shop.example.net/store",
];

fn random_word(rng: &mut impl Rng, len: usize) -> String {
    (0..len).map(|_| *LETTERS.choose(rng).unwrap() as char).collect()
}

fn username(rng: &mut impl Rng, aux: &LabelAux) -> String {
    let len = aux.username_length.sample(rng).max(1);
    let digits = aux.digit_count.sample(rng).min(len - 1);
    let mut s = random_word(rng, len - digits);
    if rng.random_bool(0.3) && s.len() > 2 {
        s.insert(s.len() / 2, '_');
        s.pop();
    }
    for _ in 0..digits {
        s.push(char::from(b'0' + rng.random_range(0..10u8)));
    }
    s
}

fn fullname(rng: &mut impl Rng, aux: &LabelAux) -> String {
    let len = aux.fullname_length.sample(rng);
    if len == 0 {
        return String::new();
    }
    let mut s = String::with_capacity(len);
    while s.chars().count() < len {
        if !s.is_empty() {
            s.push(' ');
        }
        let wlen = rng.random_range(2..=8);
        let w = random_word(rng, wlen);
        let mut c = w.chars();
        s.extend(c.next().map(|f| f.to_ascii_uppercase()));
        s.extend(c);
    }
    s.chars().take(len).collect::<String>().trim_end().to_string()
}

fn biography(rng: &mut impl Rng, aux: &LabelAux) -> String {
    let len = aux.bio_length.sample(rng);
    let mut s = String::new();
    while s.chars().count() < len {
        if !s.is_empty() {
            s.push(' ');
        }
        let w = BIO_WORDS.choose(rng).unwrap();
        match rng.random_range(0..10) {
            0 => s.push('#'),
            1 => s.push('@'),
            _ => {}
        }
        s.push_str(w);
    }
    s.chars().take(len).collect::<String>().trim_end().to_string()
}

fn slug(name: &str) -> String {
    name.to_ascii_lowercase()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect()
}

/// Draws `params.count` profiles for one provider.
pub fn generate_profiles(params: &ProviderParams, aux: &AuxParams, seed: u64) -> Vec<ProfileRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let followers = CountSampler::new(params.followers_mean, params.followers_std);
    let following = CountSampler::new(params.following_mean, params.following_std);
    let posts = CountSampler::new(params.posts_mean, params.posts_std);
    let la = aux.for_label(params.label);
    let id_prefix = slug(&params.name);
    (0..params.count)
        .map(|i| {
            let n_posts = posts.sample(&mut rng);
            let category = rng.random_bool(la.category_rate);
            ProfileRecord {
                user_id: format!("{id_prefix}-{i:05}"),
                username: username(&mut rng, la),
                fullname: fullname(&mut rng, la),
                biography: biography(&mut rng, la),
                external_url: rng
                    .random_bool(params.url_rate)
                    .then(|| URL_POOL.choose(&mut rng).unwrap().to_string()),
                followers: followers.sample(&mut rng),
                following: following.sample(&mut rng),
                posts: n_posts,
                videos: (n_posts as f64 * aux.videos_fraction_of_posts).round() as u64,
                is_private: rng.random_bool(params.private_rate),
                is_verified: rng.random_bool(la.verified_rate),
                has_clips: rng.random_bool(la.clips_rate),
                is_business: rng.random_bool(la.business_rate),
                has_category_name: category,
                has_multiple_categories: category && rng.random_bool(la.multiple_categories_rate),
                label: Some(params.label),
                source: Some(params.name.clone()),
            }
        })
        .collect()
}

/// Seed for the `index`-th provider, independent of how many there are.
pub fn provider_seed(seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng.next_u64()
}

/// Generates every provider in parallel, concatenates and shuffles.
pub fn generate_all_profiles(params: &SynthParams, seed: u64) -> Result<Vec<ProfileRecord>> {
    params.validate()?;
    let mut names = std::collections::BTreeSet::new();
    for p in &params.providers {
        if !names.insert(slug(&p.name)) {
            return Err(Error::InvalidConfig(format!("duplicate provider name {}", p.name)));
        }
    }
    let mut all: Vec<ProfileRecord> = params
        .providers
        .par_iter()
        .enumerate()
        .map(|(i, p)| generate_profiles(p, &params.aux, provider_seed(seed, i)))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    all.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(all)
}

/// The default 2600-row labeled dataset.
pub fn generate_dataset(seed: u64) -> Dataset {
    let profiles = generate_all_profiles(&SynthParams::default(), seed).expect("default params are valid");
    Dataset::new(build_matrix(&profiles)).expect("generated profiles are labeled")
}
