use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{cross_validate, CVReport, MetricSummary};
use crate::datamodel::Dataset;
use crate::error::{Error, Result};
use crate::learners::{
    ClassifierSpec, ForestParams, KnnParams, LogisticParams, ModelKind, Penalty, TreeParams,
};
use crate::selftrain::{SelfTrainConfig, DEFAULT_MAX_CYCLES, DEFAULT_THRESHOLD};

pub const DEFAULT_FRACTIONS: [f64; 5] = [0.01, 0.03, 0.05, 0.07, 0.09];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnGrid {
    pub n_neighbors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticGrid {
    pub penalty: Vec<Penalty>,
    #[serde(rename = "C")]
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeGrid {
    pub max_depth: Vec<Option<usize>>,
    pub min_samples_leaf: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestGrid {
    pub max_depth: Vec<Option<usize>>,
    pub min_samples_leaf: Vec<usize>,
    pub n_estimators: Vec<usize>,
}

/// Hyperparameter axes per learner. Absent learners are skipped.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Grids {
    #[serde(rename = "KNN", default, skip_serializing_if = "Option::is_none")]
    pub knn: Option<KnnGrid>,
    #[serde(rename = "LR", default, skip_serializing_if = "Option::is_none")]
    pub lr: Option<LogisticGrid>,
    #[serde(rename = "DT", default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<TreeGrid>,
    #[serde(rename = "RF", default, skip_serializing_if = "Option::is_none")]
    pub rf: Option<ForestGrid>,
}

impl Grids {
    pub fn defaults() -> Grids {
        let depths = vec![None, Some(3), Some(5), Some(10)];
        let leaves = vec![1, 3, 5, 10];
        Grids {
            knn: Some(KnnGrid { n_neighbors: vec![1, 3, 5, 10] }),
            lr: Some(LogisticGrid {
                penalty: vec![Penalty::None, Penalty::L1, Penalty::L2],
                c: vec![10.0, 1.0, 0.1],
            }),
            dt: Some(TreeGrid {
                max_depth: depths.clone(),
                min_samples_leaf: leaves.clone(),
            }),
            rf: Some(ForestGrid {
                max_depth: depths,
                min_samples_leaf: leaves,
                n_estimators: vec![10, 100],
            }),
        }
    }

    /// Cartesian expansion in canonical order: KNN, LR, DT, RF, each with
    /// its first axis varying slowest.
    pub fn expand(&self) -> Vec<ClassifierSpec> {
        let mut out = Vec::new();
        if let Some(g) = &self.knn {
            out.extend(g.n_neighbors.iter().map(|&n_neighbors| ClassifierSpec::Knn(KnnParams { n_neighbors })));
        }
        if let Some(g) = &self.lr {
            for &penalty in &g.penalty {
                for &c in &g.c {
                    out.push(ClassifierSpec::Logistic(LogisticParams {
                        penalty,
                        c,
                        ..Default::default()
                    }));
                }
            }
        }
        if let Some(g) = &self.dt {
            for &max_depth in &g.max_depth {
                for &min_samples_leaf in &g.min_samples_leaf {
                    out.push(ClassifierSpec::Tree(TreeParams { max_depth, min_samples_leaf }));
                }
            }
        }
        if let Some(g) = &self.rf {
            for &max_depth in &g.max_depth {
                for &min_samples_leaf in &g.min_samples_leaf {
                    for &n_estimators in &g.n_estimators {
                        out.push(ClassifierSpec::Forest(ForestParams {
                            max_depth,
                            min_samples_leaf,
                            n_estimators,
                            ..Default::default()
                        }));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub fractions: Vec<f64>,
    pub k: usize,
    pub seed: u64,
    pub confidence_threshold: f64,
    pub max_cycles: usize,
    pub early_stop: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        let mut fractions = DEFAULT_FRACTIONS.to_vec();
        fractions.push(1.0);
        GridConfig {
            fractions,
            k: 5,
            seed: 42,
            confidence_threshold: DEFAULT_THRESHOLD,
            max_cycles: DEFAULT_MAX_CYCLES,
            early_stop: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub rank: usize,
    pub kind: ModelKind,
    pub spec: ClassifierSpec,
    /// Position of `spec` in the expanded grid.
    pub spec_index: usize,
    pub labeled_fraction: f64,
    pub supervised: bool,
    pub validation: MetricSummary,
    pub train_labeled: MetricSummary,
    pub train_augmented: MetricSummary,
    pub validation_fold_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub config: GridConfig,
    pub averaging: String,
    /// Every cell, best first.
    pub rows: Vec<GridRow>,
    /// Best row per (learner, fraction), in learner then fraction order.
    pub best_per_cell: Vec<GridRow>,
    pub best: GridRow,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn rank_order(a: &GridRow, b: &GridRow) -> Ordering {
    b.validation
        .f1
        .mean
        .total_cmp(&a.validation.f1.mean)
        .then(b.validation.accuracy.mean.total_cmp(&a.validation.accuracy.mean))
        .then(a.spec_index.cmp(&b.spec_index))
        .then(a.labeled_fraction.total_cmp(&b.labeled_fraction))
}

fn row_of(spec_index: usize, report: CVReport) -> GridRow {
    GridRow {
        rank: 0,
        kind: report.spec.kind(),
        spec: report.spec,
        spec_index,
        labeled_fraction: report.labeled_fraction,
        supervised: report.labeled_fraction >= 1.0,
        validation: report.validation,
        train_labeled: report.train_labeled,
        train_augmented: report.train_augmented,
        validation_fold_sizes: report.folds.iter().map(|f| f.n_validation).collect(),
    }
}

pub fn grid_search(specs: &[ClassifierSpec], dataset: &Dataset, cfg: &GridConfig) -> Result<GridResult> {
    if specs.is_empty() {
        return Err(Error::InvalidConfig("empty hyperparameter grid".into()));
    }
    if cfg.fractions.is_empty() {
        return Err(Error::InvalidConfig("no labeled fractions given".into()));
    }
    let cells: Vec<(usize, f64)> = specs
        .iter()
        .enumerate()
        .flat_map(|(i, _)| cfg.fractions.iter().map(move |&f| (i, f)))
        .collect();
    let mut rows = cells
        .par_iter()
        .map(|&(i, fraction)| {
            let st = SelfTrainConfig {
                base: specs[i],
                confidence_threshold: cfg.confidence_threshold,
                max_cycles: cfg.max_cycles,
                labeled_fraction: fraction,
                seed: cfg.seed,
                early_stop: cfg.early_stop,
            };
            cross_validate(&st, dataset, cfg.k).map(|r| row_of(i, r))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(rank_order);
    for (r, row) in rows.iter_mut().enumerate() {
        row.rank = r + 1;
    }

    let mut best_per_cell: Vec<GridRow> = Vec::new();
    for row in &rows {
        let seen = best_per_cell
            .iter()
            .any(|b| b.kind == row.kind && b.labeled_fraction == row.labeled_fraction);
        if !seen {
            best_per_cell.push(row.clone());
        }
    }
    let kind_pos = |k: ModelKind| {
        specs.iter().position(|s| s.kind() == k).unwrap_or(usize::MAX)
    };
    best_per_cell.sort_by(|a, b| {
        kind_pos(a.kind)
            .cmp(&kind_pos(b.kind))
            .then(a.labeled_fraction.total_cmp(&b.labeled_fraction))
    });
    Ok(GridResult {
        config: cfg.clone(),
        averaging: "macro".into(),
        best: rows[0].clone(),
        notes: if specs.iter().any(|s| s.kind() == ModelKind::Logistic) {
            vec!["LR: one gradient-descent solver; the grid spans penalty and C only".into()]
        } else {
            Vec::new()
        },
        rows,
        best_per_cell,
    })
}

const CSV_HEADER: [&str; 17] = [
    "rank",
    "kind",
    "hyperparameters",
    "labeled_fraction",
    "val_f1_mean",
    "val_f1_std",
    "val_accuracy_mean",
    "val_accuracy_std",
    "val_precision_mean",
    "val_precision_std",
    "val_recall_mean",
    "val_recall_std",
    "train_labeled_accuracy_mean",
    "train_labeled_accuracy_std",
    "train_augmented_accuracy_mean",
    "train_augmented_accuracy_std",
    "validation_fold_sizes",
];

/// CSV rendering of grid rows (macro-averaged metrics, mean and std).
pub fn grid_rows_csv(rows: &[GridRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let fraction = if r.supervised { "supervised".to_string() } else { r.labeled_fraction.to_string() };
        let v = &r.validation;
        let mut rec = vec![
            r.rank.to_string(),
            r.kind.as_str().to_string(),
            r.spec.describe(),
            fraction,
        ];
        for m in [v.f1, v.accuracy, v.precision, v.recall, r.train_labeled.accuracy, r.train_augmented.accuracy] {
            rec.push(m.mean.to_string());
            rec.push(m.std.to_string());
        }
        rec.push(
            r.validation_fold_sizes
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(";"),
        );
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))
}
