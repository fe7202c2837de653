use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use ctaudit::datamodel::{matrix_to_csv, read_matrix, read_profiles, to_jsonl};
use ctaudit::eval::{grid_rows_csv, grid_search, score, GridConfig, GridRow, Grids, MeanStd, DEFAULT_FRACTIONS};
use ctaudit::features::{build_matrix, stratified_split, variance_filter, SplitSpec, DEFAULT_MIN_VARIANCE};
use ctaudit::selftrain::{mask_labels, self_train, SelfTrainConfig, DEFAULT_MAX_CYCLES, DEFAULT_THRESHOLD};
use ctaudit::synth::{generate_all_profiles, SynthParams};
use ctaudit::{ClassifierSpec, Dataset, FeatureMatrix, Model, ModelKind};
use serde::Serialize;

use crate::manifest::{ensure_dir, Run};
use crate::{CliResult, Failure};

#[derive(Args, Serialize)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Generator parameters as JSON (defaults to the built-in provider table).
    #[arg(long)]
    pub params: Option<PathBuf>,
}

pub fn synth(a: &SynthArgs) -> CliResult<()> {
    let mut run = Run::new("synth");
    let params = match &a.params {
        Some(p) => {
            run.input(p)?;
            let params = SynthParams::read(p)?;
            params.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            params
        }
        None => SynthParams::default(),
    };
    let profiles = generate_all_profiles(&params, a.seed)?;
    let matrix = build_matrix(&profiles);
    ensure_dir(&a.out)?;
    run.write(a.out.join("profiles.jsonl"), &to_jsonl(&profiles)?)?;
    run.write(a.out.join("matrix.csv"), &matrix_to_csv(&matrix)?)?;
    run.finish(a.out.join("manifest.json"), a)?;
    let ct = profiles.iter().filter(|p| p.label == Some(ctaudit::Label::Ct)).count();
    println!("wrote {} profiles: CT {ct}, Real {}", profiles.len(), profiles.len() - ct);
    Ok(())
}

/// Reads a labeled dataset from a matrix CSV or a profile JSONL file.
fn load_dataset(path: &Path, run: &mut Run) -> CliResult<Dataset> {
    run.input(path)?;
    let matrix = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_matrix(path)?
    } else {
        build_matrix(&read_profiles(path)?)
    };
    if matrix.labels().is_none() {
        return Err(Failure::Data(format!("{} carries no labels", path.display())));
    }
    Ok(Dataset::new(matrix)?)
}

/// Picks `names` out of `matrix`, in that order.
fn project(matrix: &FeatureMatrix, names: &[String]) -> CliResult<FeatureMatrix> {
    let keep = names
        .iter()
        .map(|n| {
            matrix
                .feature_names()
                .iter()
                .position(|m| m == n)
                .ok_or_else(|| Failure::Data(format!("missing feature `{n}`")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(matrix.select_columns(&keep))
}

/// Split into train/test and drop near-constant columns, judged on train.
/// A zero test fraction keeps every row for training.
fn prepare(dataset: &Dataset, test_fraction: f64, seed: u64) -> CliResult<(Dataset, Option<Dataset>, Vec<String>)> {
    let (train, test) = if test_fraction == 0.0 {
        (dataset.clone(), None)
    } else {
        let (train, test) = stratified_split(dataset, SplitSpec { test_fraction, seed })?;
        (train, Some(test))
    };
    let filtered = variance_filter(train.matrix(), DEFAULT_MIN_VARIANCE)?;
    let test = match test {
        Some(t) => Some(Dataset::new(project(t.matrix(), filtered.matrix.feature_names())?)?),
        None => None,
    };
    Ok((Dataset::new(filtered.matrix)?, test, filtered.removed))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, run: &mut Run) -> CliResult<T> {
    run.input(path)?;
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

#[derive(Args, Serialize)]
pub struct TrainArgs {
    /// Labeled matrix CSV or profile JSONL.
    #[arg(long)]
    pub data: PathBuf,
    /// KNN, LR, DT or RF, with default hyperparameters.
    #[arg(long, default_value = "LR")]
    pub model_kind: String,
    /// Classifier spec JSON; overrides --model-kind.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    pub labeled_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_CYCLES)]
    pub max_cycles: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Held-out share scored after training; 0 trains on every row.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Keep cycling after a cycle adds nothing.
    #[arg(long)]
    pub no_early_stop: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct TrainMetrics {
    n_train: usize,
    n_test: usize,
    removed_features: Vec<String>,
    test: Option<ctaudit::eval::MetricSet>,
}

pub fn train(a: &TrainArgs) -> CliResult<()> {
    let mut run = Run::new("train");
    let spec: ClassifierSpec = match &a.spec {
        Some(p) => read_json(p, &mut run)?,
        None => ModelKind::parse(&a.model_kind)
            .ok_or_else(|| Failure::Usage(format!("unknown model kind `{}`", a.model_kind)))?
            .default_spec(),
    };
    let cfg = SelfTrainConfig {
        base: spec,
        confidence_threshold: a.threshold,
        max_cycles: a.max_cycles,
        labeled_fraction: a.labeled_fraction,
        seed: a.seed,
        early_stop: !a.no_early_stop,
    };
    cfg.validate()?;
    let dataset = load_dataset(&a.data, &mut run)?;
    if !(0.0..1.0).contains(&a.test_fraction) {
        return Err(Failure::Usage(format!("test fraction must lie in [0,1), got {}", a.test_fraction)));
    }
    let (train, test, removed) = prepare(&dataset, a.test_fraction, a.seed)?;
    let masked = mask_labels(&train, a.labeled_fraction, a.seed)?;
    let (model, report) = self_train(&masked.labeled, &masked.unlabeled, &cfg)?;
    let test_metrics = match &test {
        Some(t) => Some(score(&model.predict_rows(t.matrix().rows())?, t.labels())?),
        None => None,
    };
    let metrics = TrainMetrics {
        n_train: train.len(),
        n_test: test.as_ref().map_or(0, Dataset::len),
        removed_features: removed,
        test: test_metrics,
    };

    ensure_dir(&a.out)?;
    run.write(a.out.join("model.json"), &model.to_json_bytes()?)?;
    run.write_json(a.out.join("selftrain_report.json"), &report)?;
    run.write_json(a.out.join("metrics.json"), &metrics)?;
    run.finish(a.out.join("manifest.json"), &serde_json::json!({ "args": a, "selftrain": cfg }))?;

    println!(
        "{} rho={} cycles={} termination={} train_size={}",
        spec.describe(),
        a.labeled_fraction,
        report.cycles_run,
        report.termination.as_str(),
        report.final_training_size
    );
    if let Some(m) = &metrics.test {
        println!(
            "test n={} accuracy={:.4} macro_precision={:.4} macro_recall={:.4} macro_f1={:.4}",
            metrics.n_test, m.accuracy, m.macro_precision, m.macro_recall, m.macro_f1
        );
    }
    Ok(())
}

#[derive(Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Hyperparameter grids JSON (defaults to the built-in grids).
    #[arg(long)]
    pub grids: Option<PathBuf>,
    /// Labeled fractions; the supervised baseline (1.0) is always included.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_FRACTIONS.to_vec())]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_CYCLES)]
    pub max_cycles: usize,
    /// Held-out share set aside before cross-validation.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn pm(m: &MeanStd) -> String {
    format!("{:.2}±{:.2}", m.mean, m.std)
}

/// One line per (learner, fraction): the best spec's scores as mean±std.
pub fn table_csv(rows: &[GridRow], best: &GridRow) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Failure::Data(e.to_string());
    w.write_record([
        "model", "labeled_fraction", "spec", "accuracy", "precision", "recall", "f1", "validation_fold_sizes", "best",
    ])
    .map_err(err)?;
    for r in rows {
        let fraction = if r.supervised { "supervised".to_string() } else { r.labeled_fraction.to_string() };
        let sizes: Vec<String> = r.validation_fold_sizes.iter().map(usize::to_string).collect();
        let is_best = r.spec_index == best.spec_index && r.labeled_fraction == best.labeled_fraction;
        w.write_record([
            r.kind.as_str().to_string(),
            fraction,
            r.spec.describe(),
            pm(&r.validation.accuracy),
            pm(&r.validation.precision),
            pm(&r.validation.recall),
            pm(&r.validation.f1),
            sizes.join(";"),
            if is_best { "*".into() } else { String::new() },
        ])
        .map_err(err)?;
    }
    w.into_inner().map_err(|e| Failure::Data(e.to_string()))
}

pub fn eval(a: &EvalArgs) -> CliResult<()> {
    let mut run = Run::new("eval");
    let grids: Grids = match &a.grids {
        Some(p) => read_json(p, &mut run)?,
        None => Grids::defaults(),
    };
    let specs = grids.expand();
    let mut fractions = a.fractions.clone();
    fractions.push(1.0);
    fractions.sort_by(f64::total_cmp);
    fractions.dedup();
    let cfg = GridConfig {
        fractions,
        k: a.k,
        seed: a.seed,
        confidence_threshold: a.threshold,
        max_cycles: a.max_cycles,
        early_stop: true,
    };
    let dataset = load_dataset(&a.data, &mut run)?;
    let (train, _, removed) = prepare(&dataset, a.test_fraction, a.seed)?;
    eprintln!(
        "grid: {} specs x {} fractions, {}-fold CV on {} rows ({} features, dropped [{}])",
        specs.len(),
        cfg.fractions.len(),
        cfg.k,
        train.len(),
        train.matrix().n_features(),
        removed.join(", ")
    );
    let result = grid_search(&specs, &train, &cfg)?;

    ensure_dir(&a.out)?;
    run.write_json(a.out.join("grid.json"), &result)?;
    run.write(a.out.join("grid.csv"), &grid_rows_csv(&result.rows)?)?;
    run.write(a.out.join("table.csv"), &table_csv(&result.best_per_cell, &result.best)?)?;
    run.finish(a.out.join("manifest.json"), &serde_json::json!({ "args": a, "grid": cfg, "grids": grids }))?;

    let mut out = std::io::stdout().lock();
    for r in &result.best_per_cell {
        let frac = if r.supervised { "supervised".to_string() } else { r.labeled_fraction.to_string() };
        let _ = writeln!(out, "{:<3} {:<10} f1 {}  {}", r.kind.as_str(), frac, pm(&r.validation.f1), r.spec.describe());
    }
    let b = &result.best;
    let _ = writeln!(
        out,
        "best: {} at fraction {} with f1 {}",
        b.spec.describe(),
        b.labeled_fraction,
        pm(&b.validation.f1)
    );
    Ok(())
}

#[derive(Args, Serialize)]
pub struct PredictArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Profile JSONL or feature matrix CSV.
    #[arg(long)]
    pub profiles: PathBuf,
    /// Output CSV; its manifest goes next to it.
    #[arg(long)]
    pub out: PathBuf,
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn predict(a: &PredictArgs) -> CliResult<()> {
    let mut run = Run::new("predict");
    run.input(&a.model)?;
    let text = std::fs::read_to_string(&a.model).map_err(|e| Failure::Data(format!("{}: {e}", a.model.display())))?;
    let model = Model::from_json_str(&text)?;
    run.input(&a.profiles)?;
    let matrix = if a.profiles.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_matrix(&a.profiles)?
    } else {
        build_matrix(&read_profiles(&a.profiles)?)
    };
    let cols = model.column_map(matrix.feature_names())?;
    let rows: Vec<Vec<f64>> = matrix.rows().iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect();
    let probs = model.predict_proba_rows(&rows)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Failure::Data(e.to_string());
    w.write_record(["user_id", "p_ct", "label"]).map_err(err)?;
    let mut n_ct = 0usize;
    for (id, p) in matrix.row_ids().iter().zip(&probs) {
        let label = ctaudit::learners::label_of(*p);
        n_ct += usize::from(label == 1);
        w.write_record([id.clone(), format!("{:.6}", p[1]), label.to_string()]).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Data(e.to_string()))?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    run.write(&a.out, &bytes)?;
    run.finish(manifest_path(&a.out), a)?;
    let n = probs.len();
    let frac = if n == 0 { 0.0 } else { n_ct as f64 / n as f64 };
    println!("scored {n} profiles: {n_ct} CT ({:.4} CT fraction)", frac);
    Ok(())
}
