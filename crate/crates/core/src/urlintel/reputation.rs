use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{categorize, domain_matches, host_of, DomainMap, UrlCategory};
use crate::datamodel::ProfileRecord;
use crate::error::{Error, Result};

pub const DEFAULT_IN_FLIGHT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(alias = "safe")]
    Safe,
    #[serde(alias = "parked")]
    Parked,
    #[serde(alias = "spamming")]
    Spamming,
    #[serde(alias = "malware")]
    Malware,
    #[serde(alias = "phishing")]
    Phishing,
    #[serde(alias = "adult")]
    Adult,
    #[serde(alias = "suspicious")]
    Suspicious,
}

impl Verdict {
    pub const ALL: [Verdict; 7] = [
        Verdict::Safe,
        Verdict::Parked,
        Verdict::Spamming,
        Verdict::Malware,
        Verdict::Phishing,
        Verdict::Adult,
        Verdict::Suspicious,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Safe => "Safe",
            Verdict::Parked => "Parked",
            Verdict::Spamming => "Spamming",
            Verdict::Malware => "Malware",
            Verdict::Phishing => "Phishing",
            Verdict::Adult => "Adult",
            Verdict::Suspicious => "Suspicious",
        }
    }

    pub fn parse(s: &str) -> Option<Verdict> {
        Verdict::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s.trim()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReputationVerdict {
    pub verdict: Verdict,
    pub source: String,
    /// Unix seconds; 0 for offline sources.
    pub checked_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LookupError {
    #[error("reputation service unavailable: {0}")]
    Unavailable(String),
    #[error("malformed reputation response: {0}")]
    ProtocolError(String),
}

pub trait ReputationProvider: Sync {
    fn lookup(&self, url: &str) -> std::result::Result<ReputationVerdict, LookupError>;
}

/// Offline provider backed by a domain -> verdict map. Subdomains inherit
/// their parent's entry; unknown domains are Safe.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StubProvider {
    pub entries: BTreeMap<String, Verdict>,
}

impl StubProvider {
    pub fn read(path: impl AsRef<Path>) -> Result<StubProvider> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: BTreeMap<String, Verdict> = serde_json::from_str(&text)?;
        Ok(StubProvider {
            entries: raw.into_iter().map(|(k, v)| (k.to_ascii_lowercase(), v)).collect(),
        })
    }
}

impl ReputationProvider for StubProvider {
    fn lookup(&self, url: &str) -> std::result::Result<ReputationVerdict, LookupError> {
        let hit = host_of(url).and_then(|host| {
            // longest matching key wins
            self.entries
                .iter()
                .filter(|(d, _)| domain_matches(&host, d))
                .max_by_key(|(d, _)| d.len())
                .map(|(_, v)| *v)
        });
        Ok(match hit {
            Some(verdict) => ReputationVerdict { verdict, source: "stub".into(), checked_at: 0 },
            None => ReputationVerdict {
                verdict: Verdict::Safe,
                source: "stub-default".into(),
                checked_at: 0,
            },
        })
    }
}

fn default_header() -> String {
    "X-Api-Key".into()
}

fn default_timeout() -> u64 {
    10
}

fn default_retries() -> u32 {
    2
}

fn default_backoff() -> u64 {
    500
}

/// Settings for a JSON-over-HTTP reputation service.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpProviderConfig {
    /// Request URL; `{url}` is replaced by the percent-encoded target.
    pub endpoint: String,
    /// Environment variable holding the API key, if the service needs one.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_header")]
    pub api_key_header: String,
    /// Dot-separated path of the verdict string in the response body.
    pub verdict_field: String,
    /// Service-specific verdict strings mapped onto ours. Unmapped values
    /// are matched against verdict names.
    #[serde(default)]
    pub verdict_map: BTreeMap<String, Verdict>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    /// First retry delay; doubles on each further retry.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
}

pub struct HttpProvider {
    config: HttpProviderConfig,
    client: reqwest::blocking::Client,
    api_key: Option<String>,
}

impl HttpProvider {
    pub fn new(config: HttpProviderConfig) -> Result<HttpProvider> {
        if !config.endpoint.contains("{url}") {
            return Err(Error::InvalidConfig("endpoint must contain a {url} placeholder".into()));
        }
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                Error::InvalidConfig(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(HttpProvider { config, client, api_key })
    }

    pub fn read_config(path: impl AsRef<Path>) -> Result<HttpProviderConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn attempt(&self, url: &str) -> std::result::Result<String, (bool, String)> {
        let encoded: String = url::form_urlencoded::byte_serialize(url.as_bytes()).collect();
        let target = self.config.endpoint.replace("{url}", &encoded);
        let mut req = self.client.get(target);
        if let Some(key) = &self.api_key {
            req = req.header(self.config.api_key_header.as_str(), key.as_str());
        }
        let resp = req.send().map_err(|e| (true, e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err((true, format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err((false, format!("HTTP {status}")));
        }
        resp.text().map_err(|e| (true, e.to_string()))
    }

    fn parse(&self, body: &str) -> std::result::Result<Verdict, LookupError> {
        let doc: Value = serde_json::from_str(body).map_err(|e| LookupError::ProtocolError(e.to_string()))?;
        let mut v = &doc;
        for part in self.config.verdict_field.split('.') {
            v = v
                .get(part)
                .ok_or_else(|| LookupError::ProtocolError(format!("missing field {}", self.config.verdict_field)))?;
        }
        let raw = match v {
            Value::String(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
            Value::Number(n) => n.to_string(),
            other => return Err(LookupError::ProtocolError(format!("unexpected verdict value {other}"))),
        };
        self.config
            .verdict_map
            .get(&raw)
            .copied()
            .or_else(|| Verdict::parse(&raw))
            .ok_or_else(|| LookupError::ProtocolError(format!("unknown verdict {raw:?}")))
    }
}

impl ReputationProvider for HttpProvider {
    fn lookup(&self, url: &str) -> std::result::Result<ReputationVerdict, LookupError> {
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                std::thread::sleep(delay);
                delay *= 2;
            }
            match self.attempt(url) {
                Ok(body) => {
                    let verdict = self.parse(&body)?;
                    let checked_at = SystemTime::now()
                        .duration_since(UNIX_EPOCH)
                        .map_or(0, |d| d.as_secs());
                    return Ok(ReputationVerdict {
                        verdict,
                        source: self.config.endpoint.clone(),
                        checked_at,
                    });
                }
                Err((true, msg)) => last = msg,
                Err((false, msg)) => return Err(LookupError::ProtocolError(msg)),
            }
        }
        Err(LookupError::Unavailable(format!(
            "{} attempts failed, last error: {last}",
            self.config.retries + 1
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlEntry {
    pub user_id: String,
    pub url: String,
    pub category: UrlCategory,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reputation: Option<ReputationVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Free-text note, e.g. what a messaging group turned out to be.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub category: UrlCategory,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCount {
    pub verdict: Verdict,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReputationSummary {
    pub looked_up: usize,
    pub verdicts: Vec<VerdictCount>,
    /// Safe verdicts that came from a default rule rather than a check.
    pub default_safe: usize,
    pub unavailable: usize,
    pub protocol_errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrlReport {
    pub n_profiles: usize,
    pub n_with_url: usize,
    pub fraction_with_url: f64,
    pub categories: Vec<CategoryCount>,
    pub reputation: ReputationSummary,
    pub entries: Vec<UrlEntry>,
}

impl UrlReport {
    pub fn entries_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["user_id", "url", "category", "verdict", "source", "error"])?;
        for e in &self.entries {
            let (verdict, source) = e
                .reputation
                .as_ref()
                .map_or(("", ""), |r| (r.verdict.as_str(), r.source.as_str()));
            w.write_record([
                e.user_id.as_str(),
                e.url.as_str(),
                e.category.as_str(),
                verdict,
                source,
                e.error.as_deref().unwrap_or(""),
            ])?;
        }
        w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

/// Categorizes every profile URL and checks the reputation of the ones
/// that fall in `Other`, at most `in_flight` at a time. Output order
/// follows input order.
pub fn url_report(
    profiles: &[ProfileRecord],
    map: &DomainMap,
    provider: &dyn ReputationProvider,
    in_flight: usize,
) -> Result<UrlReport> {
    let mut entries: Vec<UrlEntry> = profiles
        .iter()
        .filter_map(|p| {
            let url = p.external_url.as_ref()?.trim();
            (!url.is_empty()).then(|| UrlEntry {
                user_id: p.user_id.clone(),
                url: url.to_string(),
                category: categorize(url, map),
                reputation: None,
                error: None,
                annotation: None,
            })
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(in_flight.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let lookups: Vec<(usize, std::result::Result<ReputationVerdict, LookupError>)> = pool.install(|| {
        entries
            .par_iter()
            .enumerate()
            .filter(|(_, e)| e.category == UrlCategory::Other)
            .map(|(i, e)| (i, provider.lookup(&e.url)))
            .collect()
    });

    let mut summary = ReputationSummary {
        looked_up: lookups.len(),
        verdicts: Vec::new(),
        default_safe: 0,
        unavailable: 0,
        protocol_errors: 0,
    };
    let mut verdicts: BTreeMap<Verdict, usize> = BTreeMap::new();
    for (i, r) in lookups {
        match r {
            Ok(v) => {
                *verdicts.entry(v.verdict).or_default() += 1;
                if v.verdict == Verdict::Safe && v.source.ends_with("default") {
                    summary.default_safe += 1;
                }
                entries[i].reputation = Some(v);
            }
            Err(e) => {
                match e {
                    LookupError::Unavailable(_) => summary.unavailable += 1,
                    LookupError::ProtocolError(_) => summary.protocol_errors += 1,
                }
                entries[i].error = Some(e.to_string());
            }
        }
    }
    summary.verdicts = verdicts
        .into_iter()
        .map(|(verdict, count)| VerdictCount { verdict, count })
        .collect();

    let mut categories: BTreeMap<UrlCategory, usize> = BTreeMap::new();
    for e in &entries {
        *categories.entry(e.category).or_default() += 1;
    }
    let n_with_url = entries.len();
    Ok(UrlReport {
        n_profiles: profiles.len(),
        n_with_url,
        fraction_with_url: if profiles.is_empty() { 0.0 } else { n_with_url as f64 / profiles.len() as f64 },
        categories: categories
            .into_iter()
            .map(|(category, count)| CategoryCount { category, count })
            .collect(),
        reputation: summary,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stub() -> StubProvider {
        StubProvider {
            entries: BTreeMap::from([
                ("bad.example".to_string(), Verdict::Phishing),
                ("ok.bad.example".to_string(), Verdict::Safe),
            ]),
        }
    }

    #[test]
    fn stub_passthrough_and_default() {
        let s = stub();
        assert_eq!(s.lookup("https://bad.example/login").unwrap().verdict, Verdict::Phishing);
        assert_eq!(s.lookup("https://www.bad.example").unwrap().verdict, Verdict::Phishing);
        assert_eq!(s.lookup("https://ok.bad.example").unwrap().verdict, Verdict::Safe);
        let d = s.lookup("https://unknown.example").unwrap();
        assert_eq!((d.verdict, d.source.as_str()), (Verdict::Safe, "stub-default"));
    }

    #[test]
    fn verdict_names() {
        assert_eq!(Verdict::parse("phishing"), Some(Verdict::Phishing));
        assert_eq!(serde_json::from_str::<Verdict>("\"parked\"").unwrap(), Verdict::Parked);
        assert_eq!(Verdict::parse("nope"), None);
    }

    struct Failing;

    impl ReputationProvider for Failing {
        fn lookup(&self, url: &str) -> std::result::Result<ReputationVerdict, LookupError> {
            Err(LookupError::Unavailable(url.to_string()))
        }
    }

    #[test]
    fn errors_are_counted_not_dropped() {
        let p = ProfileRecord {
            user_id: "u".into(),
            username: "u".into(),
            fullname: String::new(),
            biography: String::new(),
            external_url: Some("https://random.example".into()),
            followers: 0,
            following: 0,
            posts: 0,
            videos: 0,
            is_private: false,
            is_verified: false,
            has_clips: false,
            is_business: false,
            has_category_name: false,
            has_multiple_categories: false,
            label: None,
            source: None,
        };
        let r = url_report(&[p], &DomainMap::default(), &Failing, 4).unwrap();
        assert_eq!(r.reputation.unavailable, 1);
        assert!(r.entries[0].error.is_some());
        assert!(r.reputation.verdicts.is_empty());
    }

    #[test]
    fn empty_input() {
        let r = url_report(&[], &DomainMap::default(), &stub(), 4).unwrap();
        assert_eq!(r.fraction_with_url, 0.0);
        assert!(r.categories.is_empty() && r.reputation.verdicts.is_empty());
    }
}
