use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use ctaudit::urlintel::{
    categorize, url_report, DomainMap, HttpProvider, HttpProviderConfig, LookupError, ReputationProvider,
    StubProvider, UrlCategory, Verdict,
};
use ctaudit::ProfileRecord;

use UrlCategory::*;

const FIXTURE: [(&str, UrlCategory); 30] = [
    ("https://www.youtube.com/c/somechannel", Videogame),
    ("https://youtu.be/dQw4w9WgXcQ", Videogame),
    ("https://www.twitch.tv/streamer", Videogame),
    ("https://wa.me/393331234567", Messaging),
    ("https://t.me/joinchat/abc", Messaging),
    ("https://chat.whatsapp.com/xyz", Messaging),
    ("https://www.facebook.com/someone", SocialNetwork),
    ("https://twitter.com/someone", SocialNetwork),
    ("https://www.tiktok.com/@someone", SocialNetwork),
    ("https://open.spotify.com/artist/1", MusicPhotography),
    ("https://soundcloud.com/dj", MusicPhotography),
    ("https://vsco.co/someone", MusicPhotography),
    ("https://mail.google.com/mail/u/0", EmailGoogle),
    ("https://maps.app.goo.gl/abc", EmailGoogle),
    ("https://linktr.ee/someone", UrlRedirecting),
    ("https://bit.ly/3abcd", UrlRedirecting),
    ("linkin.bio/shop", UrlRedirecting),
    ("https://www.paypal.me/someone", ShoppingPayment),
    ("https://www.vinted.it/member/1", ShoppingPayment),
    ("https://amzn.to/xyz", ShoppingPayment),
    ("https://someone.blogspot.com", PersonalWebsite),
    ("https://someone.wordpress.com/about", PersonalWebsite),
    ("https://onlyfans.com/someone", AdultContent),
    ("https://fansly.com/someone", AdultContent),
    ("https://followers-fast.xyz/buy", Other),
    ("http://free-likes.example.net", Other),
    ("https://cheap-growth.shop/pack", Other),
    ("https://mysite.io", Other),
    ("https://promo.win-prizes.top/now", Other),
    ("http://10.0.0.1/admin", Other),
];

fn profiles() -> Vec<ProfileRecord> {
    FIXTURE
        .iter()
        .enumerate()
        .map(|(i, (url, _))| ProfileRecord {
            user_id: format!("u{i:02}"),
            username: format!("user{i}"),
            fullname: String::new(),
            biography: String::new(),
            external_url: Some(url.to_string()),
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
        })
        .collect()
}

#[test]
fn shipped_map_categorizes_the_fixture() {
    let map = DomainMap::default();
    let mismatches: Vec<_> = FIXTURE
        .iter()
        .filter(|(url, want)| categorize(url, &map) != *want)
        .map(|(url, want)| format!("{url}: got {:?}, want {want:?}", categorize(url, &map)))
        .collect();
    assert!(mismatches.is_empty(), "{mismatches:#?}");
    for c in UrlCategory::ALL {
        assert!(FIXTURE.iter().any(|(_, k)| *k == c), "fixture misses {c:?}");
    }
}

#[test]
fn planted_stub_reproduces_breakdown() {
    let stub = StubProvider {
        entries: BTreeMap::from([
            ("followers-fast.xyz".to_string(), Verdict::Spamming),
            ("free-likes.example.net".to_string(), Verdict::Phishing),
            ("win-prizes.top".to_string(), Verdict::Malware),
            ("cheap-growth.shop".to_string(), Verdict::Spamming),
            // never looked up: the category claims it first
            ("youtube.com".to_string(), Verdict::Malware),
        ]),
    };
    let mut ps = profiles();
    ps.push(ProfileRecord { user_id: "nourl".into(), external_url: None, ..ps[0].clone() });
    let r = url_report(&ps, &DomainMap::default(), &stub, 3).unwrap();
    assert_eq!(r.n_profiles, 31);
    assert_eq!(r.n_with_url, 30);
    assert_eq!(r.categories.iter().map(|c| c.count).sum::<usize>(), r.n_with_url);
    let others = r.categories.iter().find(|c| c.category == Other).unwrap().count;
    assert_eq!(others, 6);
    assert_eq!(r.reputation.looked_up, 6);
    let verdicts: BTreeMap<Verdict, usize> = r.reputation.verdicts.iter().map(|v| (v.verdict, v.count)).collect();
    assert_eq!(
        verdicts,
        BTreeMap::from([(Verdict::Safe, 2), (Verdict::Spamming, 2), (Verdict::Malware, 1), (Verdict::Phishing, 1)])
    );
    assert_eq!(r.reputation.default_safe, 2);
    assert_eq!(r.reputation.unavailable + r.reputation.protocol_errors, 0);
    let ids: Vec<&str> = r.entries.iter().map(|e| e.user_id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted, "entries keep input order");
}

/// Serves canned responses in order, one per connection, and counts them.
fn serve(responses: Vec<(u16, &'static str)>) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for (stream, (status, body)) in listener.incoming().zip(responses.into_iter().cycle().take(64)) {
            let mut stream = stream.unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            while reader.read_line(&mut line).unwrap() > 0 && line != "\r\n" {
                line.clear();
            }
            counter.fetch_add(1, Ordering::SeqCst);
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    (format!("http://{addr}/check?u={{url}}"), hits)
}

fn provider(endpoint: String) -> HttpProvider {
    HttpProvider::new(HttpProviderConfig {
        endpoint,
        api_key_env: None,
        api_key_header: "X-Api-Key".into(),
        verdict_field: "result.class".into(),
        verdict_map: BTreeMap::from([("bad".to_string(), Verdict::Malware)]),
        timeout_secs: 5,
        retries: 2,
        backoff_ms: 10,
    })
    .unwrap()
}

#[test]
fn http_provider_retries_then_maps_verdict() {
    let (endpoint, hits) = serve(vec![(503, "{}"), (200, r#"{"result":{"class":"bad"}}"#)]);
    let v = provider(endpoint).lookup("https://x.example/").unwrap();
    assert_eq!(v.verdict, Verdict::Malware);
    assert_eq!(hits.load(Ordering::SeqCst), 2);
}

#[test]
fn http_provider_gives_up_after_retries() {
    let (endpoint, hits) = serve(vec![(500, "{}")]);
    let err = provider(endpoint).lookup("https://x.example/").unwrap_err();
    assert!(matches!(err, LookupError::Unavailable(_)), "{err}");
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[test]
fn http_provider_rejects_client_errors_and_bad_bodies() {
    let (endpoint, hits) = serve(vec![(404, "{}")]);
    let err = provider(endpoint).lookup("https://x.example/").unwrap_err();
    assert!(matches!(err, LookupError::ProtocolError(_)), "{err}");
    assert_eq!(hits.load(Ordering::SeqCst), 1);

    let (endpoint, _) = serve(vec![(200, r#"{"result":{}}"#)]);
    let err = provider(endpoint).lookup("https://x.example/").unwrap_err();
    assert!(matches!(err, LookupError::ProtocolError(_)), "{err}");
}

#[test]
fn http_provider_needs_placeholder_and_key() {
    let mut cfg = HttpProviderConfig {
        endpoint: "http://127.0.0.1:9/check".into(),
        api_key_env: None,
        api_key_header: "X-Api-Key".into(),
        verdict_field: "v".into(),
        verdict_map: BTreeMap::new(),
        timeout_secs: 1,
        retries: 0,
        backoff_ms: 1,
    };
    assert!(HttpProvider::new(cfg.clone()).is_err());
    cfg.endpoint.push_str("?u={url}");
    cfg.api_key_env = Some("CTAUDIT_TEST_KEY_THAT_IS_NOT_SET".into());
    assert!(HttpProvider::new(cfg).is_err());
}
