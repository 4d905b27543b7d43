//! Obstacle detection on UWB monostatic radar scans.
//!
//! The crate synthesizes labelled pulse-response scans, derives raw,
//! baseband and motion-filtered representations, and evaluates eight
//! supervised classifiers with stratified cross-validated grid search.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod labeling;
pub mod matrix;
pub mod modelsel;
pub mod report;
pub mod rng;
pub mod sigproc;
pub mod synth;

pub use dataset::{DataType, LabeledDataset};
pub use error::{Error, Result};
pub use estimators::{accuracy, fit, predict, EstimatorKind, EstimatorSpec, TrainedModel};
pub use labeling::{LabelScheme, SchemeKind};
pub use matrix::Matrix;
pub use synth::{Scenario, TargetState};
