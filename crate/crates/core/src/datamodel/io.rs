use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::Value;

use super::{CommentRecord, FeatureMatrix, ProfileRecord};
use crate::error::{Error, Result};
use crate::features::FEATURE_NAMES;
use crate::learners::Model;

const COUNT_FIELDS: [&str; 4] = ["followers", "following", "posts", "videos"];

/// Writes `bytes` to a sibling temp file and renames it over `path`, so a
/// failed run never leaves a truncated output behind.
pub fn atomic_write(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp-{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_jsonl<T, F>(text: &str, mut check: F) -> Result<Vec<T>>
where
    T: DeserializeOwned,
    F: FnMut(usize, &Value) -> Result<()>,
{
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        if !value.is_object() {
            return Err(Error::MalformedLine {
                line: line_no,
                message: "expected a JSON object".into(),
            });
        }
        check(line_no, &value)?;
        let record = serde_json::from_value(value).map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// One compact JSON object per line.
pub fn to_jsonl<T: serde::Serialize>(records: &[T]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    Ok(buf)
}

fn write_jsonl<T: serde::Serialize>(path: &Path, records: &[T]) -> Result<()> {
    atomic_write(path, &to_jsonl(records)?)
}

/// Reads a profile JSONL export. Unknown keys are ignored.
pub fn read_profiles(path: impl AsRef<Path>) -> Result<Vec<ProfileRecord>> {
    let text = read_to_string(path.as_ref())?;
    parse_profiles(&text)
}

pub(crate) fn parse_profiles(text: &str) -> Result<Vec<ProfileRecord>> {
    let mut seen = HashSet::new();
    let mut line_of = Vec::new();
    let records: Vec<ProfileRecord> = parse_jsonl(text, |line, value| {
        for field in COUNT_FIELDS {
            if let Some(v) = value.get(field).and_then(Value::as_i64) {
                if v < 0 {
                    return Err(Error::NegativeCount {
                        line,
                        field,
                        value: v,
                    });
                }
            }
        }
        line_of.push(line);
        Ok(())
    })?;
    for (record, &line) in records.iter().zip(&line_of) {
        if record.username.is_empty() {
            return Err(Error::InvalidRecord {
                line,
                message: "username is empty".into(),
            });
        }
        if !seen.insert(record.user_id.as_str()) {
            return Err(Error::InvalidRecord {
                line,
                message: format!("duplicate user_id `{}`", record.user_id),
            });
        }
    }
    Ok(records)
}

pub fn write_profiles(path: impl AsRef<Path>, profiles: &[ProfileRecord]) -> Result<()> {
    write_jsonl(path.as_ref(), profiles)
}

pub fn read_comments(path: impl AsRef<Path>) -> Result<Vec<CommentRecord>> {
    let text = read_to_string(path.as_ref())?;
    let mut seen = HashSet::new();
    let mut line_of = Vec::new();
    let records: Vec<CommentRecord> = parse_jsonl(&text, |line, _| {
        line_of.push(line);
        Ok(())
    })?;
    for (record, &line) in records.iter().zip(&line_of) {
        if !seen.insert(record.comment_id.as_str()) {
            return Err(Error::InvalidRecord {
                line,
                message: format!("duplicate comment_id `{}`", record.comment_id),
            });
        }
    }
    Ok(records)
}

pub fn write_comments(path: impl AsRef<Path>, comments: &[CommentRecord]) -> Result<()> {
    write_jsonl(path.as_ref(), comments)
}

/// Serializes a matrix as CSV: `user_id,label,<features...>`, label `-1`
/// when absent. Floats use Rust's shortest round-trip formatting.
pub fn write_matrix(matrix: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let bytes = matrix_to_csv(matrix)?;
    atomic_write(path, &bytes)
}

pub fn matrix_to_csv(matrix: &FeatureMatrix) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header = vec!["user_id".to_string(), "label".to_string()];
    header.extend(matrix.feature_names().iter().cloned());
    w.write_record(&header)?;
    for (i, row) in matrix.rows().iter().enumerate() {
        let label = match matrix.labels() {
            Some(l) => l[i].to_string(),
            None => "-1".to_string(),
        };
        let mut rec = Vec::with_capacity(row.len() + 2);
        rec.push(matrix.row_ids()[i].clone());
        rec.push(label);
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv buffer: {e}")))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    matrix_from_csv(file)
}

pub(crate) fn matrix_from_csv<R: std::io::Read>(reader: R) -> Result<FeatureMatrix> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut expected = vec!["user_id".to_string(), "label".to_string()];
    expected.extend(FEATURE_NAMES.iter().map(|s| s.to_string()));
    if header != expected {
        return Err(Error::HeaderMismatch {
            expected: expected.join(","),
            found: header.join(","),
        });
    }
    let mut rows = Vec::new();
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        ids.push(rec[0].to_string());
        let label: i8 = rec[1].parse().map_err(|_| Error::InvalidRecord {
            line,
            message: format!("bad label `{}`", &rec[1]),
        })?;
        if !(-1..=1).contains(&label) {
            return Err(Error::InvalidRecord {
                line,
                message: format!("label {label} outside {{-1,0,1}}"),
            });
        }
        labels.push(label);
        let row = rec
            .iter()
            .skip(2)
            .map(|s| {
                s.parse::<f64>().map_err(|_| Error::InvalidRecord {
                    line,
                    message: format!("bad number `{s}`"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let labels = if labels.iter().all(|&l| l < 0) {
        None
    } else if labels.iter().all(|&l| l >= 0) {
        Some(labels.into_iter().map(|l| l as u8).collect())
    } else {
        return Err(Error::InvalidMatrix(
            "label column mixes -1 with 0/1".into(),
        ));
    };
    FeatureMatrix::new(
        FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        rows,
        labels,
        ids,
    )
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let bytes = model.to_json_bytes()?;
    atomic_write(path, &bytes)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let text = read_to_string(path.as_ref())?;
    Model::from_json_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::Label;

    fn profile(id: &str) -> ProfileRecord {
        ProfileRecord {
            user_id: id.into(),
            username: format!("user_{id}"),
            fullname: "Jane Doe".into(),
            biography: "hi \u{1F525}".into(),
            external_url: None,
            followers: 10,
            following: 20,
            posts: 3,
            videos: 1,
            is_private: false,
            is_verified: false,
            has_clips: true,
            is_business: false,
            has_category_name: false,
            has_multiple_categories: false,
            label: Some(Label::Ct),
            source: Some("CT-1".into()),
        }
    }

    #[test]
    fn single_line_and_empty_file() {
        let line = serde_json::to_string(&profile("a")).unwrap();
        assert_eq!(parse_profiles(&line).unwrap().len(), 1);
        assert!(parse_profiles("").unwrap().is_empty());
    }

    #[test]
    fn defaults_and_unknown_fields() {
        let text = r#"{"user_id":"u","username":"x","followers":1,"following":2,"posts":3,"videos":0,"profile_pic":"z"}"#;
        let p = &parse_profiles(text).unwrap()[0];
        assert!(!p.is_private && !p.has_clips);
        assert_eq!(p.external_url, None);
        assert_eq!(p.label, None);
        assert_eq!(p.fullname, "");
    }

    #[test]
    fn malformed_line_names_line_number() {
        let good = serde_json::to_string(&profile("a")).unwrap();
        let text = format!("{good}\n{{not json\n");
        match parse_profiles(&text) {
            Err(Error::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_count_names_field_and_row() {
        let text = "{\"user_id\":\"u\",\"username\":\"x\",\"followers\":1,\"following\":2,\"posts\":3,\"videos\":0}\n\
                    {\"user_id\":\"v\",\"username\":\"y\",\"followers\":1,\"following\":-4,\"posts\":3,\"videos\":0}";
        match parse_profiles(text) {
            Err(Error::NegativeCount { line, field, value }) => {
                assert_eq!((line, field, value), (2, "following", -4));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_and_empty_usernames_rejected() {
        let a = serde_json::to_string(&profile("a")).unwrap();
        assert!(matches!(
            parse_profiles(&format!("{a}\n{a}")),
            Err(Error::InvalidRecord { line: 2, .. })
        ));
        let mut p = profile("b");
        p.username.clear();
        let b = serde_json::to_string(&p).unwrap();
        assert!(matches!(parse_profiles(&b), Err(Error::InvalidRecord { .. })));
    }

    #[test]
    fn comment_emoji_passthrough_and_optional_label() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        fs::write(
            &path,
            "{\"comment_id\":\"c1\",\"author_id\":\"a\",\"post_id\":\"p\",\"text\":\"nice \\ud83d\\udd25\"}\n",
        )
        .unwrap();
        let c = &read_comments(&path).unwrap()[0];
        assert_eq!(c.text, "nice \u{1F525}");
        assert_eq!(c.text.chars().filter(|&ch| ch == '\u{1F525}').count(), 1);
        assert_eq!(c.author_label, None);
    }

    #[test]
    fn empty_matrix_writes_header_only() {
        let bytes = matrix_to_csv(&FeatureMatrix::empty_canonical()).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("user_id,label,n_followers,"));
        let back = matrix_from_csv(text.as_bytes()).unwrap();
        assert_eq!(back.n_rows(), 0);
    }

    #[test]
    fn header_mismatch_lists_both_sides() {
        let text = "user_id,label,a,b\n";
        match matrix_from_csv(text.as_bytes()) {
            Err(Error::HeaderMismatch { expected, found }) => {
                assert!(expected.contains("n_followers"));
                assert_eq!(found, "user_id,label,a,b");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
