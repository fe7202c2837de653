//! Confidence-thresholded self-training.
//!
//! Each cycle fits the base learner on the current training set, scores
//! every still-unlabeled row, and permanently moves rows whose top class
//! probability strictly exceeds the threshold into the training set with
//! that class as a pseudo-label. The loop ends when nothing is left to
//! label, the cycle budget runs out, or (unless disabled) a cycle adds
//! nothing.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datamodel::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};
use crate::features::Scaler;
use crate::learners::{fit_with_scaler, label_of, ClassifierSpec, Model};

pub const DEFAULT_THRESHOLD: f64 = 0.75;
pub const DEFAULT_MAX_CYCLES: usize = 10;

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTrainConfig {
    pub base: ClassifierSpec,
    pub confidence_threshold: f64,
    pub max_cycles: usize,
    /// Share of rows whose labels stay visible when the caller masks.
    pub labeled_fraction: f64,
    pub seed: u64,
    /// Stop after a cycle that pseudo-labels nothing. Turning this off runs
    /// the full cycle budget regardless.
    #[serde(default = "yes")]
    pub early_stop: bool,
}

impl SelfTrainConfig {
    pub fn new(base: ClassifierSpec) -> Self {
        SelfTrainConfig {
            base,
            confidence_threshold: DEFAULT_THRESHOLD,
            max_cycles: DEFAULT_MAX_CYCLES,
            labeled_fraction: 1.0,
            seed: 42,
            early_stop: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.confidence_threshold;
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "confidence threshold must lie in (0,1], got {t}"
            )));
        }
        if self.max_cycles == 0 {
            return Err(Error::InvalidConfig("max_cycles must be >= 1".into()));
        }
        let r = self.labeled_fraction;
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "labeled fraction must lie in (0,1], got {r}"
            )));
        }
        self.base.validate()
    }
}

/// Why the loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ExhaustedUnlabeled,
    MaxCycles,
    NoAdditions,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ExhaustedUnlabeled => "exhausted_unlabeled",
            Termination::MaxCycles => "max_cycles",
            Termination::NoAdditions => "no_additions",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    /// Rows the cycle's classifier was trained on.
    pub training_size: usize,
    pub added_count: usize,
    pub remaining_unlabeled: usize,
    pub mean_confidence_of_added: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabel {
    /// Row index within the unlabeled matrix.
    pub index: usize,
    pub label: u8,
    pub confidence: f64,
    pub cycle: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTrainReport {
    pub cycles_run: usize,
    pub cycles: Vec<CycleRecord>,
    pub termination: Termination,
    pub final_training_size: usize,
    pub initial_labeled: usize,
    pub initial_unlabeled: usize,
    pub confidence_threshold: f64,
    pub pseudo_labels: Vec<PseudoLabel>,
}

/// Outcome of [`mask_labels`]: the visible labeled subset, the unlabeled
/// remainder (labels stripped) and, separately, the stripped labels for
/// evaluation only.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedSplit {
    pub labeled: Dataset,
    pub unlabeled: FeatureMatrix,
    pub hidden_labels: Vec<u8>,
}

fn ceil_count(fraction: f64, count: usize) -> usize {
    // guard against 0.07 * 100 = 7.000000000000001
    let raw = fraction * count as f64;
    ((raw - 1e-9).ceil().max(0.0) as usize).min(count)
}

/// Keeps `ceil(fraction * class_count)` labels per class, chosen at random,
/// and strips the rest.
pub fn mask_labels(dataset: &Dataset, fraction: f64, seed: u64) -> Result<MaskedSplit> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "labeled fraction must lie in (0,1], got {fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; dataset.len()];
    for class in [0u8, 1] {
        let count = dataset.class_count(class);
        let n_keep = ceil_count(fraction, count);
        if n_keep == 0 {
            return Err(Error::DegenerateDataset(format!(
                "class {class} has {count} rows; cannot keep any label at fraction {fraction}"
            )));
        }
        let mut idx = dataset.class_indices(class);
        idx.shuffle(&mut rng);
        for &i in &idx[..n_keep] {
            keep[i] = true;
        }
    }
    let (labeled_idx, unlabeled_idx): (Vec<usize>, Vec<usize>) =
        (0..dataset.len()).partition(|&i| keep[i]);
    let unlabeled = dataset.matrix().select_rows(&unlabeled_idx);
    let hidden_labels = unlabeled.labels().expect("dataset rows are labeled").to_vec();
    Ok(MaskedSplit {
        labeled: dataset.subset(&labeled_idx),
        unlabeled: unlabeled.with_labels(None)?,
        hidden_labels,
    })
}

/// Runs the self-training loop. The returned model is the classifier of
/// the last cycle run.
pub fn self_train(
    labeled: &Dataset,
    unlabeled: &FeatureMatrix,
    cfg: &SelfTrainConfig,
) -> Result<(Model, SelfTrainReport)> {
    cfg.validate()?;
    if labeled.class_count(0) == 0 || labeled.class_count(1) == 0 {
        return Err(Error::DegenerateLabels);
    }
    if unlabeled.n_features() != labeled.matrix().n_features() && !unlabeled.is_empty() {
        return Err(Error::ArityMismatch(format!(
            "labeled rows have {} features, unlabeled rows {}",
            labeled.matrix().n_features(),
            unlabeled.n_features()
        )));
    }
    let base = labeled.matrix();
    let d = base.n_features();
    let mut train_rows: Vec<Vec<f64>> = base.rows().to_vec();
    let mut train_labels: Vec<u8> = labeled.labels().to_vec();
    let mut train_ids: Vec<String> = base.row_ids().to_vec();
    let mut remaining: Vec<usize> = (0..unlabeled.n_rows()).collect();
    let mut cycles = Vec::new();
    let mut pseudo_labels = Vec::new();
    let mut termination = Termination::MaxCycles;
    let mut model = None;

    for cycle in 1..=cfg.max_cycles {
        let train = FeatureMatrix::new(
            base.feature_names().to_vec(),
            train_rows.clone(),
            Some(train_labels.clone()),
            train_ids.clone(),
        )?;
        let scaler = if cfg.base.uses_scaler() {
            let rows = train_rows
                .iter()
                .map(Vec::as_slice)
                .chain(remaining.iter().map(|&i| unlabeled.row(i)));
            Some(Scaler::fit_rows(rows, d)?)
        } else {
            None
        };
        let current = fit_with_scaler(&cfg.base, &train, scaler, cfg.seed)?;
        let training_size = train_rows.len();

        if remaining.is_empty() {
            cycles.push(CycleRecord {
                cycle,
                training_size,
                added_count: 0,
                remaining_unlabeled: 0,
                mean_confidence_of_added: None,
            });
            model = Some(current);
            termination = Termination::ExhaustedUnlabeled;
            break;
        }

        let mut still = Vec::with_capacity(remaining.len());
        let mut conf_sum = 0.0;
        let mut added = 0;
        for &i in &remaining {
            let p = current.predict_proba(unlabeled.row(i))?;
            let confidence = p[0].max(p[1]);
            if confidence > cfg.confidence_threshold {
                let label = label_of(p);
                train_rows.push(unlabeled.row(i).to_vec());
                train_labels.push(label);
                train_ids.push(unlabeled.row_ids()[i].clone());
                pseudo_labels.push(PseudoLabel {
                    index: i,
                    label,
                    confidence,
                    cycle,
                });
                conf_sum += confidence;
                added += 1;
            } else {
                still.push(i);
            }
        }
        remaining = still;
        cycles.push(CycleRecord {
            cycle,
            training_size,
            added_count: added,
            remaining_unlabeled: remaining.len(),
            mean_confidence_of_added: (added > 0).then(|| conf_sum / added as f64),
        });
        model = Some(current);
        if added == 0 && cfg.early_stop {
            termination = Termination::NoAdditions;
            break;
        }
    }

    let report = SelfTrainReport {
        cycles_run: cycles.len(),
        cycles,
        termination,
        final_training_size: train_rows.len(),
        initial_labeled: labeled.len(),
        initial_unlabeled: unlabeled.n_rows(),
        confidence_threshold: cfg.confidence_threshold,
        pseudo_labels,
    };
    Ok((model.expect("at least one cycle runs"), report))
}
