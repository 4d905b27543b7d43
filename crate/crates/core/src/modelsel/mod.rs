//! Train/validation split, stratified folds, grid search and the full
//! evaluation pipeline.

pub mod experiment;
pub mod grid;
pub mod split;

pub use experiment::{run_experiment, run_experiment_with_models, EvalReport, ExperimentSettings, ReportStatus};
pub use grid::{cross_val_scores, grid_search, select_best, CandidateScore, GridSearchResult};
pub use split::{stratified_kfold, stratified_split, FoldAssignment, SplitSpec};
