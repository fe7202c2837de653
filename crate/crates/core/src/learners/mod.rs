//! Four from-scratch binary classifiers behind one fit/predict contract.
//!
//! LR and KNN see z-scored features (the scaler travels inside the model);
//! trees and forests consume raw values since their thresholds do not care
//! about scale.

pub mod forest;
pub mod knn;
pub mod logistic;
pub mod tree;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use forest::{ForestModel, ForestParams};
pub use knn::{KnnModel, KnnParams};
pub use logistic::{LogisticModel, LogisticParams, Penalty};
pub use tree::{Node, TreeModel, TreeParams};

use crate::datamodel::FeatureMatrix;
use crate::error::{Error, Result};
use crate::features::Scaler;

/// Which learner to train and with what hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "hyperparameters")]
pub enum ClassifierSpec {
    #[serde(rename = "KNN")]
    Knn(KnnParams),
    #[serde(rename = "LR")]
    Logistic(LogisticParams),
    #[serde(rename = "DT")]
    Tree(TreeParams),
    #[serde(rename = "RF")]
    Forest(ForestParams),
}

/// Learner family, without hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "KNN")]
    Knn,
    #[serde(rename = "LR")]
    Logistic,
    #[serde(rename = "RF")]
    Forest,
    #[serde(rename = "DT")]
    Tree,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Knn => "KNN",
            ModelKind::Logistic => "LR",
            ModelKind::Tree => "DT",
            ModelKind::Forest => "RF",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        match s.to_ascii_uppercase().as_str() {
            "KNN" => Some(ModelKind::Knn),
            "LR" => Some(ModelKind::Logistic),
            "DT" => Some(ModelKind::Tree),
            "RF" => Some(ModelKind::Forest),
            _ => None,
        }
    }

    pub fn default_spec(self) -> ClassifierSpec {
        match self {
            ModelKind::Knn => ClassifierSpec::Knn(KnnParams::default()),
            ModelKind::Logistic => ClassifierSpec::Logistic(LogisticParams::default()),
            ModelKind::Tree => ClassifierSpec::Tree(TreeParams::default()),
            ModelKind::Forest => ClassifierSpec::Forest(ForestParams::default()),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl ClassifierSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ClassifierSpec::Knn(_) => ModelKind::Knn,
            ClassifierSpec::Logistic(_) => ModelKind::Logistic,
            ClassifierSpec::Tree(_) => ModelKind::Tree,
            ClassifierSpec::Forest(_) => ModelKind::Forest,
        }
    }

    pub fn uses_scaler(&self) -> bool {
        matches!(self, ClassifierSpec::Knn(_) | ClassifierSpec::Logistic(_))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        match self {
            ClassifierSpec::Knn(p) if p.n_neighbors == 0 => bad("n_neighbors must be >= 1".into()),
            ClassifierSpec::Logistic(p) if !(p.c > 0.0 && p.c.is_finite()) => {
                bad(format!("C must be positive, got {}", p.c))
            }
            ClassifierSpec::Logistic(p) if p.learning_rate.is_nan() || p.learning_rate <= 0.0 => {
                bad("learning_rate must be positive".into())
            }
            ClassifierSpec::Tree(p) if p.min_samples_leaf == 0 => {
                bad("min_samples_leaf must be >= 1".into())
            }
            ClassifierSpec::Forest(p) if p.n_estimators == 0 => {
                bad("n_estimators must be >= 1".into())
            }
            ClassifierSpec::Forest(p) if p.min_samples_leaf == 0 => {
                bad("min_samples_leaf must be >= 1".into())
            }
            _ => Ok(()),
        }
    }

    /// Compact human-readable rendering, e.g. `LR(penalty=l2, C=1)`.
    pub fn describe(&self) -> String {
        let depth = |d: Option<usize>| d.map_or("none".to_string(), |v| v.to_string());
        match self {
            ClassifierSpec::Knn(p) => format!("KNN(n_neighbors={})", p.n_neighbors),
            ClassifierSpec::Logistic(p) => {
                format!("LR(penalty={}, C={})", p.penalty.as_str(), p.c)
            }
            ClassifierSpec::Tree(p) => format!(
                "DT(max_depth={}, min_samples_leaf={})",
                depth(p.max_depth),
                p.min_samples_leaf
            ),
            ClassifierSpec::Forest(p) => format!(
                "RF(max_depth={}, min_samples_leaf={}, n_estimators={})",
                depth(p.max_depth),
                p.min_samples_leaf,
                p.n_estimators
            ),
        }
    }
}

/// Kind-specific learned state.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Logistic(LogisticModel),
    Knn(KnnModel),
    Tree(TreeModel),
    Forest(ForestModel),
}

/// A trained classifier. Immutable; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: ClassifierSpec,
    feature_names: Vec<String>,
    scaler: Option<Scaler>,
    params: ModelParams,
}

/// Fits `spec` on a labeled matrix. LR/KNN fit their scaler on `x` itself.
pub fn fit(spec: &ClassifierSpec, x: &FeatureMatrix, seed: u64) -> Result<Model> {
    fit_with_scaler(spec, x, None, seed)
}

/// Like [`fit`], but LR/KNN use `scaler` when given instead of fitting one
/// on `x` (self-training fits it on labeled plus unlabeled rows).
pub fn fit_with_scaler(
    spec: &ClassifierSpec,
    x: &FeatureMatrix,
    scaler: Option<Scaler>,
    seed: u64,
) -> Result<Model> {
    spec.validate()?;
    let labels = x
        .labels()
        .ok_or_else(|| Error::InvalidInput("training matrix has no labels".into()))?;
    if labels.is_empty() {
        return Err(Error::InvalidInput("training matrix is empty".into()));
    }
    if let Some(bad) = x.rows().iter().flatten().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite training value {bad}")));
    }
    let single_class = labels.iter().all(|&l| l == labels[0]);
    if single_class && !matches!(spec, ClassifierSpec::Knn(_)) {
        return Err(Error::DegenerateLabels);
    }
    let scaler = if spec.uses_scaler() {
        let s = match scaler {
            Some(s) => s,
            None => Scaler::fit(x)?,
        };
        if s.dim() != x.n_features() {
            return Err(Error::ArityMismatch(format!(
                "scaler has {} columns, data has {}",
                s.dim(),
                x.n_features()
            )));
        }
        Some(s)
    } else {
        None
    };
    let scaled_rows = || -> Vec<Vec<f64>> {
        let s = scaler.as_ref().expect("scaled learners carry a scaler");
        x.rows().iter().map(|r| s.transform_row(r)).collect()
    };

    let params = match spec {
        ClassifierSpec::Logistic(p) => {
            let flat: Vec<f64> = scaled_rows().into_iter().flatten().collect();
            let objective =
                logistic::LogisticObjective::new(&flat, labels, x.n_features(), p.penalty, p.c);
            ModelParams::Logistic(logistic::train(&objective, p, false).0)
        }
        ClassifierSpec::Knn(p) => {
            if labels.len() < p.n_neighbors {
                return Err(Error::InvalidInput(format!(
                    "{} training rows for n_neighbors={}",
                    labels.len(),
                    p.n_neighbors
                )));
            }
            ModelParams::Knn(KnnModel {
                rows: scaled_rows(),
                labels: labels.to_vec(),
            })
        }
        ClassifierSpec::Tree(p) => {
            let data = tree::SortedColumns::new(x.rows(), labels);
            let growth = tree::Growth {
                max_depth: p.max_depth,
                min_samples_leaf: p.min_samples_leaf,
                max_features: None,
            };
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
            ModelParams::Tree(tree::grow(&data, &vec![1; labels.len()], growth, &mut rng))
        }
        ClassifierSpec::Forest(p) => ModelParams::Forest(forest::fit(x.rows(), labels, p, seed)),
    };
    Ok(Model {
        spec: *spec,
        feature_names: x.feature_names().to_vec(),
        scaler,
        params,
    })
}

impl Model {
    pub fn spec(&self) -> &ClassifierSpec {
        &self.spec
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn scaler(&self) -> Option<&Scaler> {
        self.scaler.as_ref()
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Builds a model from parts, checking that they agree in arity.
    pub fn from_parts(
        spec: ClassifierSpec,
        feature_names: Vec<String>,
        scaler: Option<Scaler>,
        params: ModelParams,
    ) -> Result<Model> {
        let model = Model {
            spec,
            feature_names,
            scaler,
            params,
        };
        model.check_arity()?;
        Ok(model)
    }

    fn check_arity(&self) -> Result<()> {
        let d = self.feature_names.len();
        let err = |m: String| Err(Error::ArityMismatch(m));
        if self.spec.kind() != self.params_kind() {
            return err("hyperparameters and parameters describe different kinds".into());
        }
        match (&self.scaler, self.spec.uses_scaler()) {
            (None, true) => return err("scaled learner without a scaler".into()),
            (Some(s), _) if s.means.len() != d || s.stds.len() != d => {
                return err(format!("scaler arity {} / {} vs {d} features", s.means.len(), s.stds.len()))
            }
            (Some(s), _) if s.stds.iter().any(|v| v.is_nan() || *v <= 0.0) => {
                return err("scaler std must be positive".into())
            }
            _ => {}
        }
        match &self.params {
            ModelParams::Logistic(m) if m.weights.len() != d => {
                err(format!("{} weights for {d} features", m.weights.len()))
            }
            ModelParams::Knn(m) if m.rows.len() != m.labels.len() => {
                err(format!("{} rows vs {} labels", m.rows.len(), m.labels.len()))
            }
            ModelParams::Knn(m) if m.rows.iter().any(|r| r.len() != d) => {
                err(format!("stored row width differs from {d} features"))
            }
            ModelParams::Tree(t) => t.validate(d).map_err(Error::ArityMismatch),
            ModelParams::Forest(f) => {
                let ClassifierSpec::Forest(p) = self.spec else { unreachable!() };
                if f.trees.len() != p.n_estimators || f.seeds.len() != f.trees.len() {
                    return err(format!(
                        "{} trees / {} seeds for n_estimators={}",
                        f.trees.len(),
                        f.seeds.len(),
                        p.n_estimators
                    ));
                }
                f.trees.iter().try_for_each(|t| t.validate(d).map_err(Error::ArityMismatch))
            }
            _ => Ok(()),
        }
    }

    fn params_kind(&self) -> ModelKind {
        match self.params {
            ModelParams::Logistic(_) => ModelKind::Logistic,
            ModelParams::Knn(_) => ModelKind::Knn,
            ModelParams::Tree(_) => ModelKind::Tree,
            ModelParams::Forest(_) => ModelKind::Forest,
        }
    }

    /// `(p(Real), p(CT))` for one feature vector in this model's column set.
    /// The pair sums to one.
    pub fn predict_proba(&self, x: &[f64]) -> Result<[f64; 2]> {
        if x.len() != self.feature_names.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} features, got {}",
                self.feature_names.len(),
                x.len()
            )));
        }
        if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite feature value {bad}")));
        }
        let scaled;
        let z = match &self.scaler {
            Some(s) => {
                scaled = s.transform_row(x);
                &scaled[..]
            }
            None => x,
        };
        let p1 = match &self.params {
            ModelParams::Logistic(m) => m.proba(z),
            ModelParams::Knn(m) => {
                let ClassifierSpec::Knn(p) = self.spec else { unreachable!() };
                m.proba(z, p.n_neighbors)
            }
            ModelParams::Tree(t) => t.proba(z),
            ModelParams::Forest(f) => f.proba(z),
        };
        Ok([1.0 - p1, p1])
    }

    /// Argmax label; an exact tie goes to class 0.
    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        Ok(label_of(self.predict_proba(x)?))
    }

    pub fn predict_proba_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<[f64; 2]>> {
        rows.iter().map(|r| self.predict_proba(r)).collect()
    }

    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<u8>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    /// Positions of this model's features within `names`, or an error
    /// naming the first missing one.
    pub fn column_map(&self, names: &[String]) -> Result<Vec<usize>> {
        self.feature_names
            .iter()
            .map(|f| {
                names.iter().position(|n| n == f).ok_or_else(|| {
                    Error::InvalidInput(format!("input lacks model feature `{f}`"))
                })
            })
            .collect()
    }

    pub fn to_json_value(&self) -> Result<Value> {
        let spec = serde_json::to_value(self.spec)?;
        let parameters = match &self.params {
            ModelParams::Logistic(m) => serde_json::to_value(m)?,
            ModelParams::Knn(m) => serde_json::to_value(m)?,
            ModelParams::Tree(m) => serde_json::to_value(m)?,
            ModelParams::Forest(m) => serde_json::to_value(m)?,
        };
        Ok(serde_json::json!({
            "kind": spec["kind"],
            "hyperparameters": spec["hyperparameters"],
            "feature_names": self.feature_names,
            "scaler": self.scaler,
            "parameters": parameters,
        }))
    }

    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        let mut bytes = serde_json::to_vec_pretty(&self.to_json_value()?)?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    pub fn from_json_str(text: &str) -> Result<Model> {
        let doc: Value = serde_json::from_str(text)?;
        let field = |k: &str| {
            doc.get(k)
                .cloned()
                .ok_or_else(|| Error::InvalidInput(format!("model document lacks `{k}`")))
        };
        let kind_str = field("kind")?;
        let kind_str = kind_str
            .as_str()
            .ok_or_else(|| Error::InvalidInput("model `kind` must be a string".into()))?;
        let kind = match kind_str {
            "KNN" => ModelKind::Knn,
            "LR" => ModelKind::Logistic,
            "DT" => ModelKind::Tree,
            "RF" => ModelKind::Forest,
            other => return Err(Error::UnknownModelKind(other.to_string())),
        };
        let spec: ClassifierSpec = serde_json::from_value(serde_json::json!({
            "kind": kind_str,
            "hyperparameters": field("hyperparameters")?,
        }))?;
        let feature_names: Vec<String> = serde_json::from_value(field("feature_names")?)?;
        let scaler: Option<Scaler> = serde_json::from_value(field("scaler")?)?;
        let raw = field("parameters")?;
        let params = match kind {
            ModelKind::Logistic => ModelParams::Logistic(serde_json::from_value(raw)?),
            ModelKind::Knn => ModelParams::Knn(serde_json::from_value(raw)?),
            ModelKind::Tree => ModelParams::Tree(serde_json::from_value(raw)?),
            ModelKind::Forest => ModelParams::Forest(serde_json::from_value(raw)?),
        };
        Model::from_parts(spec, feature_names, scaler, params)
    }
}

pub fn label_of(p: [f64; 2]) -> u8 {
    u8::from(p[1] > p[0])
}
