use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{score, MetricSet};
use crate::datamodel::Dataset;
use crate::error::{Error, Result};
use crate::learners::{fit, ClassifierSpec, Model};
use crate::selftrain::{mask_labels, self_train, SelfTrainConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Splits row indices into `k` stratified folds. Each class is shuffled,
/// the classes are laid end to end, and positions are dealt round-robin,
/// so both per-class and total fold sizes differ by at most one.
pub fn stratified_kfold(dataset: &Dataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("k must be >= 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dealt = Vec::with_capacity(dataset.len());
    for class in [0u8, 1] {
        let mut idx = dataset.class_indices(class);
        if idx.len() < k {
            return Err(Error::DegenerateDataset(format!(
                "class {class} has {} rows, fewer than k = {k}",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        dealt.extend(idx);
    }
    let mut fold_of = vec![0usize; dataset.len()];
    for (pos, &i) in dealt.iter().enumerate() {
        fold_of[i] = pos % k;
    }
    Ok((0..k)
        .map(|f| {
            let (validation, train) = (0..dataset.len()).partition(|&i| fold_of[i] == f);
            Fold { train, validation }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population (n-denominator) standard deviation.
    pub fn of(values: &[f64]) -> MeanStd {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
}

impl MetricSummary {
    pub fn of<'a>(sets: impl Iterator<Item = &'a MetricSet>) -> MetricSummary {
        let sets: Vec<&MetricSet> = sets.collect();
        let pick = |f: fn(&MetricSet) -> f64| MeanStd::of(&sets.iter().map(|m| f(m)).collect::<Vec<_>>());
        MetricSummary {
            accuracy: pick(|m| m.accuracy),
            precision: pick(|m| m.macro_precision),
            recall: pick(|m| m.macro_recall),
            f1: pick(|m| m.macro_f1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_labeled: usize,
    pub n_pseudo_labeled: usize,
    pub cycles_run: usize,
    /// Final model scored on the rows whose true labels it saw.
    pub train_labeled: MetricSet,
    /// Final model scored on labeled plus pseudo-labeled rows, against the
    /// labels used for training.
    pub train_augmented: MetricSet,
    pub validation: MetricSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVReport {
    pub spec: ClassifierSpec,
    pub labeled_fraction: f64,
    pub k: usize,
    pub confidence_threshold: f64,
    pub averaging: String,
    pub folds: Vec<FoldResult>,
    pub train_labeled: MetricSummary,
    pub train_augmented: MetricSummary,
    pub validation: MetricSummary,
}

fn mask_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn score_model(model: &Model, ds: &Dataset) -> Result<MetricSet> {
    score(&model.predict_rows(ds.matrix().rows())?, ds.labels())
}

fn assemble(
    spec: ClassifierSpec,
    labeled_fraction: f64,
    confidence_threshold: f64,
    folds: Vec<FoldResult>,
) -> CVReport {
    CVReport {
        spec,
        labeled_fraction,
        k: folds.len(),
        confidence_threshold,
        averaging: "macro".into(),
        train_labeled: MetricSummary::of(folds.iter().map(|f| &f.train_labeled)),
        train_augmented: MetricSummary::of(folds.iter().map(|f| &f.train_augmented)),
        validation: MetricSummary::of(folds.iter().map(|f| &f.validation)),
        folds,
    }
}

fn ssl_fold(cfg: &SelfTrainConfig, dataset: &Dataset, i: usize, fold: &Fold) -> Result<FoldResult> {
    let train = dataset.subset(&fold.train);
    let validation = dataset.subset(&fold.validation);
    let masked = mask_labels(&train, cfg.labeled_fraction, mask_seed(cfg.seed, i))?;
    let (model, report) = self_train(&masked.labeled, &masked.unlabeled, cfg)?;

    let mut rows = masked.labeled.matrix().rows().to_vec();
    let mut labels = masked.labeled.labels().to_vec();
    for pl in &report.pseudo_labels {
        rows.push(masked.unlabeled.row(pl.index).to_vec());
        labels.push(pl.label);
    }
    let augmented = score(&model.predict_rows(&rows)?, &labels)?;
    Ok(FoldResult {
        fold: i,
        n_train: train.len(),
        n_validation: validation.len(),
        n_labeled: masked.labeled.len(),
        n_pseudo_labeled: report.pseudo_labels.len(),
        cycles_run: report.cycles_run,
        train_labeled: score_model(&model, &masked.labeled)?,
        train_augmented: augmented,
        validation: score_model(&model, &validation)?,
    })
}

/// Self-training CV: labels are masked inside each fold's training part
/// only, so validation rows never feed pseudo-labels.
pub fn cross_validate(cfg: &SelfTrainConfig, dataset: &Dataset, k: usize) -> Result<CVReport> {
    cfg.validate()?;
    let folds = stratified_kfold(dataset, k, cfg.seed)?;
    let results = folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| ssl_fold(cfg, dataset, i, fold))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(cfg.base, cfg.labeled_fraction, cfg.confidence_threshold, results))
}

/// Plain supervised CV with the same fold assignment as [`cross_validate`].
pub fn supervised_cross_validate(
    spec: &ClassifierSpec,
    dataset: &Dataset,
    k: usize,
    seed: u64,
    confidence_threshold: f64,
) -> Result<CVReport> {
    spec.validate()?;
    let folds = stratified_kfold(dataset, k, seed)?;
    let results = folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| {
            let train = dataset.subset(&fold.train);
            let validation = dataset.subset(&fold.validation);
            let model = fit(spec, train.matrix(), seed)?;
            let on_train = score_model(&model, &train)?;
            Ok(FoldResult {
                fold: i,
                n_train: train.len(),
                n_validation: validation.len(),
                n_labeled: train.len(),
                n_pseudo_labeled: 0,
                cycles_run: 1,
                train_labeled: on_train,
                train_augmented: on_train,
                validation: score_model(&model, &validation)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(*spec, 1.0, confidence_threshold, results))
}
