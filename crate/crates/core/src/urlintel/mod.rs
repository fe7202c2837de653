//! External-URL categorization by domain and reputation lookups for the
//! URLs no category claims.

mod reputation;

use std::path::Path;

use serde::{Deserialize, Serialize};
use url::Url;

pub use reputation::{
    url_report, HttpProvider, HttpProviderConfig, LookupError, ReputationProvider, ReputationVerdict,
    StubProvider, UrlEntry, UrlReport, Verdict, VerdictCount, CategoryCount, ReputationSummary,
    DEFAULT_IN_FLIGHT,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UrlCategory {
    Videogame,
    Messaging,
    SocialNetwork,
    MusicPhotography,
    EmailGoogle,
    UrlRedirecting,
    ShoppingPayment,
    PersonalWebsite,
    AdultContent,
    Other,
}

impl UrlCategory {
    pub const ALL: [UrlCategory; 10] = [
        UrlCategory::Videogame,
        UrlCategory::Messaging,
        UrlCategory::SocialNetwork,
        UrlCategory::MusicPhotography,
        UrlCategory::EmailGoogle,
        UrlCategory::UrlRedirecting,
        UrlCategory::ShoppingPayment,
        UrlCategory::PersonalWebsite,
        UrlCategory::AdultContent,
        UrlCategory::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            UrlCategory::Videogame => "Videogame",
            UrlCategory::Messaging => "Messaging",
            UrlCategory::SocialNetwork => "SocialNetwork",
            UrlCategory::MusicPhotography => "MusicPhotography",
            UrlCategory::EmailGoogle => "EmailGoogle",
            UrlCategory::UrlRedirecting => "UrlRedirecting",
            UrlCategory::ShoppingPayment => "ShoppingPayment",
            UrlCategory::PersonalWebsite => "PersonalWebsite",
            UrlCategory::AdultContent => "AdultContent",
            UrlCategory::Other => "Other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryRule {
    pub category: UrlCategory,
    pub patterns: Vec<String>,
}

/// Ordered domain rules; the first rule with a matching pattern wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DomainMap {
    pub rules: Vec<CategoryRule>,
}

fn rule(category: UrlCategory, patterns: &[&str]) -> CategoryRule {
    CategoryRule {
        category,
        patterns: patterns.iter().map(|p| p.to_string()).collect(),
    }
}

impl Default for DomainMap {
    fn default() -> Self {
        use UrlCategory::*;
        DomainMap {
            rules: vec![
                rule(Videogame, &["youtube.com", "youtu.be", "twitch.tv", "discord.com", "discord.gg", "discordapp.com"]),
                rule(Messaging, &["whatsapp.com", "wa.me", "telegram.org", "telegram.me", "t.me"]),
                rule(
                    SocialNetwork,
                    &[
                        "facebook.com", "fb.me", "fb.com", "twitter.com", "x.com", "instagram.com", "tiktok.com",
                        "snapchat.com", "linkedin.com", "pinterest.com", "reddit.com", "tumblr.com",
                    ],
                ),
                rule(
                    MusicPhotography,
                    &["spotify.com", "soundcloud.com", "vsco.co", "flickr.com", "500px.com", "music.apple.com"],
                ),
                rule(EmailGoogle, &["gmail.com", "google.com", "maps.app.goo.gl", "outlook.com", "hotmail.com", "live.com"]),
                rule(
                    UrlRedirecting,
                    &["linktr.ee", "tinyurl.com", "linkr.bio", "bit.ly", "linkin.bio", "lnk.bio", "beacons.ai", "allmylinks.com"],
                ),
                rule(
                    ShoppingPayment,
                    &[
                        "paypal.com", "paypal.me", "vinted.com", "vinted.it", "vinted.fr", "vinted.de", "vinted.es",
                        "vinted.co.uk", "amazon.com", "amazon.it", "amazon.co.uk", "amazon.de", "amzn.to", "ebay.com",
                        "etsy.com", "depop.com", "myshopify.com",
                    ],
                ),
                rule(
                    PersonalWebsite,
                    &["blogspot.com", "wordpress.com", "wixsite.com", "weebly.com", "medium.com", "change.org"],
                ),
                rule(AdultContent, &["onlyfans.com", "fansly.com", "pornhub.com", "xvideos.com", "chaturbate.com"]),
            ],
        }
    }
}

impl DomainMap {
    pub fn read(path: impl AsRef<Path>) -> Result<DomainMap> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Lowercased host of `url`, without port. Bare `host/path` strings are
/// read as http URLs.
pub fn host_of(url: &str) -> Option<String> {
    let url = url.trim();
    let parsed = match Url::parse(url) {
        Ok(u) => u,
        Err(url::ParseError::RelativeUrlWithoutBase) if url.contains('.') => {
            Url::parse(&format!("http://{url}")).ok()?
        }
        Err(_) => return None,
    };
    match parsed.host()? {
        url::Host::Domain(d) => Some(d.trim_end_matches('.').to_ascii_lowercase()),
        _ => None,
    }
}

/// True when `host` is `pattern` or one of its subdomains.
pub fn domain_matches(host: &str, pattern: &str) -> bool {
    let pattern = pattern.trim().trim_start_matches('.').to_ascii_lowercase();
    host == pattern
        || host.len() > pattern.len()
            && host.ends_with(&pattern)
            && host.as_bytes()[host.len() - pattern.len() - 1] == b'.'
}

pub fn categorize(url: &str, map: &DomainMap) -> UrlCategory {
    let Some(host) = host_of(url) else {
        return UrlCategory::Other;
    };
    map.rules
        .iter()
        .find(|r| r.patterns.iter().any(|p| domain_matches(&host, p)))
        .map_or(UrlCategory::Other, |r| r.category)
}
