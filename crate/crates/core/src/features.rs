//! Profile feature extraction, low-variance filtering, z-scoring and
//! stratified train/test splitting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datamodel::{Dataset, FeatureMatrix, ProfileRecord};
use crate::error::{Error, Result};

/// Canonical column order of every feature vector, matrix and model.
pub const FEATURE_NAMES: [&str; 17] = [
    "n_followers",
    "n_following",
    "n_videos",
    "n_posts",
    "n_chars_username",
    "n_digits_username",
    "n_chars_fullname",
    "n_nonalpha_fullname",
    "n_chars_biography",
    "n_hashtags_mentions_biography",
    "is_private",
    "is_verified",
    "has_clips",
    "is_business",
    "has_external_url",
    "has_category_name",
    "has_multiple_categories",
];

pub const N_FEATURES: usize = FEATURE_NAMES.len();

/// Default threshold for [`variance_filter`].
pub const DEFAULT_MIN_VARIANCE: f64 = 1e-8;

/// Standard deviations below this are replaced by it when scaling.
pub const STD_FLOOR: f64 = 1e-9;

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Maps a profile onto the 17 canonical features.
///
/// Character counts are in Unicode scalars. Hashtags/mentions are
/// whitespace-separated tokens beginning with `#` or `@`.
pub fn extract_features(p: &ProfileRecord) -> [f64; N_FEATURES] {
    let username_digits = p.username.chars().filter(char::is_ascii_digit).count();
    let fullname_nonalpha = p
        .fullname
        .chars()
        .filter(|c| !c.is_alphabetic() && !c.is_whitespace())
        .count();
    let tags = p
        .biography
        .split_whitespace()
        .filter(|t| t.starts_with('#') || t.starts_with('@'))
        .count();
    [
        p.followers as f64,
        p.following as f64,
        p.videos as f64,
        p.posts as f64,
        p.username.chars().count() as f64,
        username_digits as f64,
        p.fullname.chars().count() as f64,
        fullname_nonalpha as f64,
        p.biography.chars().count() as f64,
        tags as f64,
        flag(p.is_private),
        flag(p.is_verified),
        flag(p.has_clips),
        flag(p.is_business),
        flag(p.external_url.is_some()),
        flag(p.has_category_name),
        flag(p.has_multiple_categories),
    ]
}

/// Extracts features for a batch. Labels are attached only when every
/// profile carries one.
pub fn build_matrix(profiles: &[ProfileRecord]) -> FeatureMatrix {
    let rows = profiles.iter().map(|p| extract_features(p).to_vec()).collect();
    let labels = profiles
        .iter()
        .map(|p| p.label.map(|l| l.class()))
        .collect::<Option<Vec<u8>>>();
    let ids = profiles.iter().map(|p| p.user_id.clone()).collect();
    FeatureMatrix::new(
        FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        rows,
        labels,
        ids,
    )
    .expect("extraction yields well-formed rows")
}

/// Sample (n-1) variance; 0 for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Result of [`variance_filter`].
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceFilterOutput {
    pub matrix: FeatureMatrix,
    pub removed: Vec<String>,
    /// Always `"sample (n-1)"`.
    pub variance_mode: &'static str,
}

/// Drops columns that are exactly constant or whose sample variance is
/// below `min_variance`.
pub fn variance_filter(matrix: &FeatureMatrix, min_variance: f64) -> Result<VarianceFilterOutput> {
    if matrix.is_empty() {
        return Err(Error::InvalidInput("variance filter needs at least one row".into()));
    }
    let mut keep = Vec::new();
    let mut removed = Vec::new();
    for j in 0..matrix.n_features() {
        let col = matrix.column(j);
        let constant = col.iter().all(|&v| v == col[0]);
        let var = sample_variance(&col);
        if constant || var < min_variance {
            removed.push(matrix.feature_names()[j].clone());
        } else {
            keep.push(j);
        }
    }
    if keep.is_empty() {
        return Err(Error::DegenerateDataset(
            "every column fell below the variance threshold".into(),
        ));
    }
    Ok(VarianceFilterOutput {
        matrix: matrix.select_columns(&keep),
        removed,
        variance_mode: "sample (n-1)",
    })
}

/// Per-column z-score statistics (population std, floored at [`STD_FLOOR`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Scaler {
    pub fn fit(matrix: &FeatureMatrix) -> Result<Scaler> {
        Scaler::fit_rows(matrix.rows().iter().map(Vec::as_slice), matrix.n_features())
    }

    /// Fits over an arbitrary row stream of width `d`.
    pub fn fit_rows<'a, I>(rows: I, d: usize) -> Result<Scaler>
    where
        I: IntoIterator<Item = &'a [f64]> + Clone,
    {
        let mut n = 0usize;
        let mut sums = vec![0.0; d];
        let mut first: Option<Vec<f64>> = None;
        let mut constant = vec![true; d];
        for row in rows.clone() {
            n += 1;
            let f = first.get_or_insert_with(|| row.to_vec());
            for j in 0..d {
                sums[j] += row[j];
                if row[j] != f[j] {
                    constant[j] = false;
                }
            }
        }
        if n == 0 {
            return Err(Error::InvalidInput("cannot fit a scaler on zero rows".into()));
        }
        let first = first.unwrap();
        let means: Vec<f64> = (0..d)
            .map(|j| if constant[j] { first[j] } else { sums[j] / n as f64 })
            .collect();
        let mut sq = vec![0.0; d];
        for row in rows {
            for j in 0..d {
                sq[j] += (row[j] - means[j]).powi(2);
            }
        }
        let stds = sq
            .into_iter()
            .map(|s| {
                let std = (s / n as f64).sqrt();
                if std < STD_FLOOR {
                    STD_FLOOR
                } else {
                    std
                }
            })
            .collect();
        Ok(Scaler { means, stds })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        if matrix.n_features() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "scaler has {} columns, matrix has {}",
                self.dim(),
                matrix.n_features()
            )));
        }
        let rows = matrix.rows().iter().map(|r| self.transform_row(r)).collect();
        matrix.clone().with_rows(rows)
    }
}

pub fn fit_scaler(matrix: &FeatureMatrix) -> Result<Scaler> {
    Scaler::fit(matrix)
}

pub fn apply_scaler(scaler: &Scaler, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    scaler.transform(matrix)
}

/// Held-out share and seed for [`stratified_split`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.2,
            seed: 42,
        }
    }
}

/// Splits a dataset into train/test keeping class proportions. Each class
/// contributes `round(count * test_fraction)` rows (at least one, and at
/// most `count - 1`) to the test side. Both sides keep original row order.
pub fn stratified_split(dataset: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test_fraction must lie in (0,1), got {}",
            spec.test_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut test_mask = vec![false; dataset.len()];
    for (&class, &count) in dataset.class_counts() {
        if count < 2 {
            return Err(Error::DegenerateDataset(format!(
                "class {class} has {count} member(s); stratified split needs at least 2"
            )));
        }
        let n_test = ((count as f64 * spec.test_fraction).round() as usize).clamp(1, count - 1);
        let mut idx = dataset.class_indices(class);
        idx.shuffle(&mut rng);
        for &i in &idx[..n_test] {
            test_mask[i] = true;
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..dataset.len()).partition(|&i| test_mask[i]);
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::Label;

    fn blank() -> ProfileRecord {
        ProfileRecord {
            user_id: "u".into(),
            username: "abc123".into(),
            fullname: "John Smith".into(),
            biography: String::new(),
            external_url: None,
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
        }
    }

    #[test]
    fn hand_counted_vector() {
        let expected = [0., 0., 0., 0., 6., 3., 10., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0.];
        assert_eq!(extract_features(&blank()), expected);
    }

    #[test]
    fn hashtags_mentions_and_url_flag() {
        let mut p = blank();
        p.biography = "see #promo and @friend now".into();
        p.external_url = Some("https://x.example".into());
        let f = extract_features(&p);
        assert_eq!(f[9], 2.0);
        assert_eq!(f[14], 1.0);
    }

    #[test]
    fn unicode_counts_are_scalar_counts() {
        let mut p = blank();
        p.username = "zoë_99".into();
        p.fullname = "Zoë-Ann 🌸".into();
        let f = extract_features(&p);
        assert_eq!(f[4], 6.0);
        assert_eq!(f[5], 2.0);
        assert_eq!(f[6], 9.0);
        // '-' and the emoji; the space is excluded
        assert_eq!(f[7], 2.0);
    }

    fn matrix_from_cols(cols: &[Vec<f64>]) -> FeatureMatrix {
        let n = cols[0].len();
        let names = (0..cols.len()).map(|j| format!("f{j}")).collect();
        let rows = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        FeatureMatrix::new(names, rows, None, (0..n).map(|i| i.to_string()).collect()).unwrap()
    }

    #[test]
    fn variance_filter_drops_constant_columns() {
        let mut profiles: Vec<_> = (0..5)
            .map(|i| {
                let mut p = blank();
                p.user_id = i.to_string();
                p.followers = i;
                p
            })
            .collect();
        profiles[0].following = 3;
        let m = build_matrix(&profiles);
        let out = variance_filter(&m, DEFAULT_MIN_VARIANCE).unwrap();
        assert!(out.removed.contains(&"has_clips".to_string()));
        assert_eq!(out.matrix.feature_names(), ["n_followers", "n_following"]);
        assert_eq!(out.matrix.row_ids(), m.row_ids());
    }

    #[test]
    fn zero_threshold_only_drops_exact_constants() {
        let m = matrix_from_cols(&[vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 1.0 + 1e-12]]);
        let out = variance_filter(&m, 0.0).unwrap();
        assert_eq!(out.removed, vec!["f0".to_string()]);
    }

    #[test]
    fn all_removed_is_degenerate() {
        let m = matrix_from_cols(&[vec![2.0, 2.0]]);
        assert!(matches!(
            variance_filter(&m, DEFAULT_MIN_VARIANCE),
            Err(Error::DegenerateDataset(_))
        ));
    }

    #[test]
    fn zscore_closed_form() {
        let m = matrix_from_cols(&[vec![1.0, 2.0, 3.0], vec![0.1, 0.1, 0.1]]);
        let s = fit_scaler(&m).unwrap();
        let z = apply_scaler(&s, &m).unwrap();
        let expected = 1.5f64.sqrt(); // (3-2)/sqrt(2/3)
        assert!((z.row(0)[0] + expected).abs() < 1e-12);
        assert_eq!(z.row(1)[0], 0.0);
        assert!((z.row(2)[0] - expected).abs() < 1e-12);
        assert!(z.rows().iter().all(|r| r[1] == 0.0));
        assert_eq!(s.stds[1], STD_FLOOR);
    }

    #[test]
    fn scaler_uses_fit_statistics() {
        let train = matrix_from_cols(&[vec![0.0, 2.0]]);
        let test = matrix_from_cols(&[vec![10.0, 12.0]]);
        let s = fit_scaler(&train).unwrap();
        let z = apply_scaler(&s, &test).unwrap();
        assert_eq!(z.column(0), vec![9.0, 11.0]);
    }

    fn labeled(n_ct: usize, n_real: usize) -> Dataset {
        let profiles: Vec<_> = (0..n_ct + n_real)
            .map(|i| {
                let mut p = blank();
                p.user_id = format!("u{i}");
                p.followers = i as u64;
                p.label = Some(if i < n_ct { Label::Ct } else { Label::Real });
                p
            })
            .collect();
        Dataset::new(build_matrix(&profiles)).unwrap()
    }

    #[test]
    fn full_scale_split() {
        let d = labeled(1293, 1307);
        let (train, test) = stratified_split(&d, SplitSpec::default()).unwrap();
        assert_eq!(train.len(), 2080);
        assert_eq!(test.class_count(1), 259);
        assert_eq!(test.class_count(0), 261);
    }

    #[test]
    fn half_split_of_ten() {
        let d = labeled(5, 5);
        let spec = SplitSpec {
            test_fraction: 0.5,
            seed: 3,
        };
        let (train, test) = stratified_split(&d, spec).unwrap();
        assert_eq!(train.len() + test.len(), 10);
        for c in [0, 1] {
            assert!((2..=3).contains(&test.class_count(c)));
        }
    }

    #[test]
    fn split_is_seeded() {
        let d = labeled(40, 60);
        let a = stratified_split(&d, SplitSpec { test_fraction: 0.2, seed: 1 }).unwrap();
        let b = stratified_split(&d, SplitSpec { test_fraction: 0.2, seed: 1 }).unwrap();
        let c = stratified_split(&d, SplitSpec { test_fraction: 0.2, seed: 2 }).unwrap();
        assert_eq!(a.1.matrix().row_ids(), b.1.matrix().row_ids());
        assert_ne!(a.1.matrix().row_ids(), c.1.matrix().row_ids());
        assert_eq!(a.1.class_counts(), c.1.class_counts());
    }

    #[test]
    fn split_rejects_singleton_class() {
        let d = labeled(1, 5);
        assert!(stratified_split(&d, SplitSpec::default()).is_err());
    }
}
