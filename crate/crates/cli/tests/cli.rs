use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn ctaudit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctaudit"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = ctaudit(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    ctaudit(dir, args).status.code().unwrap()
}

fn digest(path: &Path) -> String {
    hex::encode(Sha256::digest(fs::read(path).unwrap()))
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn digests(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_file() {
            out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), digest(&p));
        }
    }
    out
}

fn synth(dir: &Path) {
    ok(dir, &["synth", "--out", "data"]);
}

#[test]
fn synth_writes_default_dataset() {
    let t = tempfile::tempdir().unwrap();
    let stdout = ok(t.path(), &["synth", "--out", "data"]);
    assert!(stdout.contains("CT 1293") && stdout.contains("Real 1307"), "{stdout}");
    let lines = fs::read_to_string(t.path().join("data/profiles.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 2600);
    let m = json(&t.path().join("data/manifest.json"));
    assert_eq!(m["command"], "synth");
    assert_eq!(m["config"]["seed"], 42);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);

    ok(t.path(), &["synth", "--out", "a", "--seed", "1"]);
    ok(t.path(), &["synth", "--out", "b", "--seed", "1"]);
    for f in ["profiles.jsonl", "matrix.csv"] {
        assert_eq!(digest(&t.path().join("a").join(f)), digest(&t.path().join("b").join(f)));
    }
}

#[test]
fn synth_custom_params() {
    let t = tempfile::tempdir().unwrap();
    let mut params = serde_json::to_value(ctaudit::synth::SynthParams::default()).unwrap();
    let providers = params["providers"].as_array_mut().unwrap();
    providers.retain(|p| p["label"] == "Real" || p["name"] == "CT-1");
    for p in providers.iter_mut().filter(|p| p["name"] == "CT-1") {
        p["count"] = 5.into();
    }
    fs::write(t.path().join("params.json"), params.to_string()).unwrap();
    ok(t.path(), &["synth", "--out", "d", "--params", "params.json"]);
    let lines = fs::read_to_string(t.path().join("d/profiles.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 5 + 1307);

    fs::write(t.path().join("bad.json"), r#"{"providers": [{"name": "x"}]}"#).unwrap();
    assert_ne!(code(t.path(), &["synth", "--out", "e", "--params", "bad.json"]), 0);
}

#[test]
fn train_full_fraction_and_reruns() {
    let t = tempfile::tempdir().unwrap();
    synth(t.path());
    ok(t.path(), &["train", "--data", "data/matrix.csv", "--labeled-fraction", "1.0", "--out", "m1"]);
    let report = json(&t.path().join("m1/selftrain_report.json"));
    assert_eq!(report["termination"], "exhausted_unlabeled");
    assert_eq!(report["cycles_run"], 1);
    let manifest = json(&t.path().join("m1/manifest.json"));
    assert_eq!(manifest["config"]["args"]["threshold"], 0.75);
    assert_eq!(manifest["config"]["selftrain"]["confidence_threshold"], 0.75);
    assert_eq!(manifest["config"]["args"]["max_cycles"], 10);

    let stdout = ok(t.path(), &["train", "--data", "data/profiles.jsonl", "--model-kind", "DT", "--out", "m2"]);
    assert!(stdout.contains("macro_f1="), "{stdout}");
    let first = digests(&t.path().join("m2"));
    ok(t.path(), &["train", "--data", "data/profiles.jsonl", "--model-kind", "DT", "--out", "m2"]);
    assert_eq!(digests(&t.path().join("m2")), first);
}

#[test]
fn exit_codes() {
    let t = tempfile::tempdir().unwrap();
    synth(t.path());
    let d = t.path();
    assert_eq!(code(d, &["train", "--bogus"]), 1);
    assert_eq!(code(d, &["--help"]), 0);
    assert_eq!(code(d, &["train", "--data", "data/matrix.csv", "--threshold", "1.5", "--out", "x"]), 1);
    assert_eq!(code(d, &["train", "--data", "data/matrix.csv", "--model-kind", "SVM", "--out", "x"]), 1);
    assert_eq!(code(d, &["train", "--data", "missing.csv", "--out", "x"]), 2);
    fs::write(d.join("broken.jsonl"), "{not json\n").unwrap();
    assert_eq!(code(d, &["train", "--data", "broken.jsonl", "--out", "x"]), 2);

    // one class only
    let one: String = fs::read_to_string(d.join("data/profiles.jsonl"))
        .unwrap()
        .lines()
        .filter(|l| l.contains("\"label\":\"CT\""))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(d.join("ct_only.jsonl"), one).unwrap();
    assert_eq!(code(d, &["train", "--data", "ct_only.jsonl", "--out", "x"]), 3);
    assert!(!d.join("x").join("model.json").exists());
}

#[test]
fn predict_memorized_training_set() {
    let t = tempfile::tempdir().unwrap();
    synth(t.path());
    let d = t.path();
    ok(
        d,
        &["train", "--data", "data/profiles.jsonl", "--model-kind", "DT", "--labeled-fraction", "1.0", "--test-fraction", "0", "--out", "m"],
    );
    let stdout = ok(d, &["predict", "--model", "m/model.json", "--profiles", "data/profiles.jsonl", "--out", "out/pred.csv"]);
    let truth: BTreeMap<String, u8> = fs::read_to_string(d.join("data/profiles.jsonl"))
        .unwrap()
        .lines()
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            (v["user_id"].as_str().unwrap().to_string(), u8::from(v["label"] == "CT"))
        })
        .collect();
    let mut r = csv::Reader::from_path(d.join("out/pred.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["user_id", "p_ct", "label"]);
    let mut n_ct = 0;
    let mut n = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        let label: u8 = rec[2].parse().unwrap();
        assert_eq!(truth[&rec[0]], label, "{}", &rec[0]);
        n_ct += usize::from(label == 1);
        n += 1;
    }
    assert_eq!(n, 2600);
    assert!(stdout.contains(&format!("{n_ct} CT")), "{stdout}");
    assert!(stdout.contains(&format!("({:.4} CT fraction)", n_ct as f64 / n as f64)), "{stdout}");
    assert!(d.join("out/pred.csv.manifest.json").exists());

    fs::write(d.join("empty.jsonl"), "").unwrap();
    let stdout = ok(d, &["predict", "--model", "m/model.json", "--profiles", "empty.jsonl", "--out", "empty.csv"]);
    assert_eq!(fs::read_to_string(d.join("empty.csv")).unwrap(), "user_id,p_ct,label\n");
    assert!(stdout.contains("0 CT (0.0000 CT fraction)"), "{stdout}");

    // a model expecting a feature the input cannot provide
    let text = fs::read_to_string(d.join("m/model.json")).unwrap();
    fs::write(d.join("alien.json"), text.replacen("\"n_followers\"", "\"n_friends\"", 1)).unwrap();
    assert_eq!(code(d, &["predict", "--model", "alien.json", "--profiles", "data/profiles.jsonl", "--out", "a.csv"]), 2);
    assert!(!d.join("a.csv").exists());
}

#[test]
fn eval_supervised_only_small_grid() {
    let t = tempfile::tempdir().unwrap();
    synth(t.path());
    let d = t.path();
    fs::write(d.join("grids.json"), r#"{"DT": {"max_depth": [null, 3], "min_samples_leaf": [1]}, "KNN": {"n_neighbors": [5]}}"#).unwrap();
    ok(d, &["eval", "--data", "data/matrix.csv", "--grids", "grids.json", "--fractions", "1.0", "--out", "ev"]);
    let grid = json(&d.join("ev/grid.json"));
    assert_eq!(grid["rows"].as_array().unwrap().len(), 3);
    assert!(grid["rows"].as_array().unwrap().iter().all(|r| r["supervised"] == true));
    let table = fs::read_to_string(d.join("ev/table.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 2);
    assert!(table.lines().skip(1).all(|l| l.contains(",supervised,") && l.contains('±')), "{table}");
    assert_eq!(table.matches(",*").count(), 1, "{table}");
    assert_eq!(code(d, &["eval", "--data", "data/matrix.csv", "--k", "1", "--out", "ev2"]), 1);
}

const COMMENTS: &str = r#"{"comment_id":"c1","author_id":"ct-1-00000","post_id":"p1","text":"Nice pic! 🔥🔥"}
{"comment_id":"c2","author_id":"ct-1-00000","post_id":"p2","text":"follow me"}
{"comment_id":"c3","author_id":"ct-1-00001","post_id":"p1","text":"WOW"}
{"comment_id":"c4","author_id":"real-00000","post_id":"p1","text":"We loved this place last summer. The food was great!"}
{"comment_id":"c5","author_id":"real-00001","post_id":"p2","text":"Happy birthday, see you soon 😊"}
{"comment_id":"c6","author_id":"stranger","post_id":"p2","text":"hello there","author_label":"Real"}
"#;

#[test]
fn analyze_partial_and_full_bundles() {
    let t = tempfile::tempdir().unwrap();
    synth(t.path());
    let d = t.path();
    let out = ctaudit(d, &["analyze", "--profiles", "data/profiles.jsonl", "--out-dir", "r1"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("stylometry skipped"));
    let files = digests(&d.join("r1"));
    for stem in ["tiers", "following_histogram", "biography", "urls"] {
        assert!(files.contains_key(&format!("{stem}.json")) && files.contains_key(&format!("{stem}.csv")), "{stem}");
    }
    assert!(!files.contains_key("stylometry.json"));

    fs::write(d.join("comments.jsonl"), COMMENTS).unwrap();
    ok(d, &["analyze", "--profiles", "data/profiles.jsonl", "--comments", "comments.jsonl", "--out-dir", "r2"]);
    let files = digests(&d.join("r2"));
    assert_eq!(files.len(), 7 * 2 + 1, "{files:?}");
    let per_user = json(&d.join("r2/comments_per_user.json"));
    let ct = per_user.as_array().unwrap().iter().find(|g| g["group"] == "CT").unwrap();
    assert_eq!((ct["authors"].as_u64(), ct["comments"].as_u64()), (Some(2), Some(3)));
    let manifest = json(&d.join("r2/manifest.json"));

    // manifest tracks input digests
    ok(d, &["analyze", "--profiles", "data/profiles.jsonl", "--comments", "comments.jsonl", "--out-dir", "r2"]);
    assert_eq!(json(&d.join("r2/manifest.json")), manifest);
    fs::write(d.join("comments.jsonl"), format!("{COMMENTS}{{\"comment_id\":\"c7\",\"author_id\":\"x\",\"post_id\":\"p\",\"text\":\"hi\"}}\n")).unwrap();
    ok(d, &["analyze", "--profiles", "data/profiles.jsonl", "--comments", "comments.jsonl", "--out-dir", "r2"]);
    assert_ne!(json(&d.join("r2/manifest.json"))["inputs"], manifest["inputs"]);
}

#[test]
fn analyze_with_reputation_stub() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    fs::write(
        d.join("p.jsonl"),
        concat!(
            r#"{"user_id":"a","username":"a","followers":5,"following":900,"posts":1,"videos":0,"external_url":"https://wa.me/1","label":"CT"}"#, "\n",
            r#"{"user_id":"b","username":"b","followers":5,"following":900,"posts":1,"videos":0,"external_url":"https://spam.example/x","label":"CT"}"#, "\n",
            r#"{"user_id":"c","username":"c","followers":500,"following":300,"posts":40,"videos":2,"label":"Real"}"#, "\n",
        ),
    )
    .unwrap();
    fs::write(d.join("stub.json"), r#"{"spam.example": "spamming"}"#).unwrap();
    ok(d, &["analyze", "--profiles", "p.jsonl", "--reputation-stub", "stub.json", "--out-dir", "r"]);
    let urls = json(&d.join("r/urls.json"));
    assert_eq!(urls["n_with_url"], 2);
    assert_eq!(urls["reputation"]["verdicts"][0]["verdict"], "Spamming");
    let csv = fs::read_to_string(d.join("r/urls.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}
