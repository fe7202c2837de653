use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FEATURE_NAMES;

/// Dense row-major feature table with optional binary labels.
///
/// Extraction always produces the canonical 17 columns; filtering may drop
/// some, so the column set is carried explicitly in `feature_names`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    feature_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Option<Vec<u8>>,
    row_ids: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Option<Vec<u8>>,
        row_ids: Vec<String>,
    ) -> Result<Self> {
        if feature_names.is_empty() {
            return Err(Error::InvalidMatrix("no feature columns".into()));
        }
        if let Some((i, row)) = rows
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != feature_names.len())
        {
            return Err(Error::InvalidMatrix(format!(
                "row {i} has {} entries, expected {}",
                row.len(),
                feature_names.len()
            )));
        }
        if row_ids.len() != rows.len() {
            return Err(Error::InvalidMatrix(format!(
                "{} row ids for {} rows",
                row_ids.len(),
                rows.len()
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != rows.len() {
                return Err(Error::InvalidMatrix(format!(
                    "{} labels for {} rows",
                    labels.len(),
                    rows.len()
                )));
            }
            if let Some(bad) = labels.iter().find(|&&l| l > 1) {
                return Err(Error::InvalidMatrix(format!("label {bad} is not 0 or 1")));
            }
        }
        Ok(FeatureMatrix {
            feature_names,
            rows,
            labels,
            row_ids,
        })
    }

    /// Empty matrix with the canonical column set.
    pub fn empty_canonical() -> Self {
        FeatureMatrix {
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            labels: None,
            row_ids: Vec::new(),
        }
    }

    /// Builds a matrix from named columns given in any order. Columns whose
    /// names are canonical are placed in canonical order; any others follow
    /// in the order given.
    pub fn from_named_columns(
        mut columns: Vec<(String, Vec<f64>)>,
        labels: Option<Vec<u8>>,
        row_ids: Vec<String>,
    ) -> Result<Self> {
        let rank = |name: &str| {
            FEATURE_NAMES
                .iter()
                .position(|c| *c == name)
                .unwrap_or(FEATURE_NAMES.len())
        };
        columns.sort_by_key(|(name, _)| rank(name));
        let n = row_ids.len();
        if let Some((name, col)) = columns.iter().find(|(_, c)| c.len() != n) {
            return Err(Error::InvalidMatrix(format!(
                "column `{name}` has {} values, expected {n}",
                col.len()
            )));
        }
        let rows = (0..n)
            .map(|i| columns.iter().map(|(_, c)| c[i]).collect())
            .collect();
        let names = columns.into_iter().map(|(name, _)| name).collect();
        FeatureMatrix::new(names, rows, labels, row_ids)
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_canonical(&self) -> bool {
        self.feature_names.len() == FEATURE_NAMES.len()
            && self.feature_names.iter().zip(FEATURE_NAMES).all(|(a, b)| a == b)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Rows at `indices`, in the order given.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            row_ids: indices.iter().map(|&i| self.row_ids[i].clone()).collect(),
        }
    }

    /// Keeps only the columns at `keep` (ascending).
    pub fn select_columns(&self, keep: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            feature_names: keep.iter().map(|&j| self.feature_names[j].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| keep.iter().map(|&j| r[j]).collect())
                .collect(),
            labels: self.labels.clone(),
            row_ids: self.row_ids.clone(),
        }
    }

    pub fn with_labels(mut self, labels: Option<Vec<u8>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.rows.len() {
                return Err(Error::InvalidMatrix(format!(
                    "{} labels for {} rows",
                    l.len(),
                    self.rows.len()
                )));
            }
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn with_rows(mut self, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != self.rows.len() || rows.iter().any(|r| r.len() != self.n_features()) {
            return Err(Error::InvalidMatrix("replacement rows have the wrong shape".into()));
        }
        self.rows = rows;
        Ok(self)
    }
}

/// A fully labeled feature matrix together with its class tally.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    matrix: FeatureMatrix,
    class_counts: BTreeMap<u8, usize>,
}

impl Dataset {
    pub fn new(matrix: FeatureMatrix) -> Result<Self> {
        let labels = matrix
            .labels()
            .ok_or_else(|| Error::InvalidMatrix("dataset requires labels".into()))?;
        let mut class_counts = BTreeMap::new();
        for &l in labels {
            *class_counts.entry(l).or_insert(0) += 1;
        }
        Ok(Dataset {
            matrix,
            class_counts,
        })
    }

    pub fn matrix(&self) -> &FeatureMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> FeatureMatrix {
        self.matrix
    }

    pub fn labels(&self) -> &[u8] {
        self.matrix.labels().expect("dataset always carries labels")
    }

    pub fn class_counts(&self) -> &BTreeMap<u8, usize> {
        &self.class_counts
    }

    pub fn class_count(&self, class: u8) -> usize {
        self.class_counts.get(&class).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    /// Row indices of `class`, ascending.
    pub fn class_indices(&self, class: u8) -> Vec<usize> {
        self.labels()
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset::new(self.matrix.select_rows(indices)).expect("subset keeps labels")
    }
}
