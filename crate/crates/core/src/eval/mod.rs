//! Splits, metrics, grid search, confusion heatmaps and word-variance analysis.

pub mod grid;
pub mod ledger;
pub mod metrics;
pub mod split;
pub mod svg;
pub mod variance;

pub use grid::{evaluate, grid_search, GridEntry, GridOutcome, Protocol, ProtocolScore};
pub use ledger::RunRecord;
pub use metrics::{confusion_matrix, f1_score, Averaging, ConfusionMatrix};
pub use split::{kfold, tdt_split, tdt_split_labels, FoldPlan, TdtSplit};
pub use svg::{confusion_svg, render_confusion_svg};
pub use variance::{class_variance_ranking, ClassRanking, VarianceConfig, VarianceInput};
