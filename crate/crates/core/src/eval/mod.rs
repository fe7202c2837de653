//! Cross-validation, grid search, metrics and significance testing.

mod cv;
mod grid;
mod metrics;
mod ttest;

pub use cv::{
    cross_validate, stratified_kfold, supervised_cross_validate, CVReport, Fold, FoldResult, MeanStd,
    MetricSummary,
};
pub use grid::{
    grid_rows_csv, grid_search, ForestGrid, GridConfig, GridResult, GridRow, Grids, KnnGrid,
    LogisticGrid, TreeGrid, DEFAULT_FRACTIONS,
};
pub use metrics::{confusion, metrics, score, ClassMetrics, ConfusionMatrix, MetricSet};
pub use ttest::{two_sided_p, welch_ttest, TTest};
