use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::estimators::{
    accuracy, confusion_matrix, fit, EstimatorKind, HyperParamGrid, ParamValue, TrainedModel,
    TrainingOptions,
};
use crate::modelsel::grid::{grid_search, CandidateScore};
use crate::modelsel::split::{stratified_kfold, stratified_split, SplitSpec};
use crate::rng::{derive_seed, tag};
use crate::sigproc::standardize_dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub kinds: Vec<EstimatorKind>,
    /// Grid per kind; kinds missing here use the default grid.
    pub grids: Vec<(EstimatorKind, HyperParamGrid)>,
    pub split: SplitSpec,
    pub k: usize,
    /// Parent of every estimator seed.
    pub seed: u64,
    pub options: TrainingOptions,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            kinds: EstimatorKind::ALL.to_vec(),
            grids: Vec::new(),
            split: SplitSpec::default(),
            k: 5,
            seed: 0,
            options: TrainingOptions::default(),
        }
    }
}

impl ExperimentSettings {
    pub fn grid(&self, kind: EstimatorKind) -> HyperParamGrid {
        self.grids
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, g)| g.clone())
            .unwrap_or_else(|| HyperParamGrid::table1(kind))
    }

    /// Seed handed to every candidate of `kind`.
    pub fn estimator_seed(&self, kind: EstimatorKind) -> u64 {
        derive_seed(self.seed, &[kind.id() as u64])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset_id: String,
    pub estimator: EstimatorKind,
    pub status: ReportStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub selected_params: Vec<(String, ParamValue)>,
    pub candidates: Vec<CandidateScore>,
    /// Percent; `null` in JSON when the estimator failed.
    #[serde(with = "nan_as_null")]
    pub validation_accuracy: f64,
    #[serde(with = "nan_as_null")]
    pub test_accuracy: f64,
    /// Rows are true labels, columns predictions.
    pub confusion: Vec<Vec<u64>>,
    pub grid_search_ms: f64,
    pub fit_ms: f64,
    pub predict_ms: f64,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    /// Examples left out because their scan could not be standardized.
    pub dropped: usize,
}

impl EvalReport {
    fn failed(dataset_id: &str, kind: EstimatorKind, err: &Error) -> Self {
        Self {
            dataset_id: dataset_id.to_string(),
            estimator: kind,
            status: ReportStatus::Failed,
            error: Some(err.to_string()),
            selected_params: Vec::new(),
            candidates: Vec::new(),
            validation_accuracy: f64::NAN,
            test_accuracy: f64::NAN,
            confusion: Vec::new(),
            grid_search_ms: 0.0,
            fit_ms: 0.0,
            predict_ms: 0.0,
            n_train: 0,
            n_valid: 0,
            n_test: 0,
            dropped: 0,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == ReportStatus::Ok
    }
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Prepared inputs shared by every estimator of one dataset run.
struct Prepared {
    train: LabeledDataset,
    valid: LabeledDataset,
    test: LabeledDataset,
    dropped: usize,
}

fn prepare(train: &LabeledDataset, test: &LabeledDataset, split: &SplitSpec) -> Result<Prepared> {
    if train.scheme != test.scheme {
        return Err(Error::invalid(format!(
            "train scheme {} differs from test scheme {}",
            train.scheme.name(),
            test.scheme.name()
        )));
    }
    if train.data_type != test.data_type {
        return Err(Error::invalid(format!(
            "train data type {} differs from test data type {}",
            train.data_type.name(),
            test.data_type.name()
        )));
    }
    if train.n_bins() != test.n_bins() {
        return Err(Error::LengthMismatch {
            expected: train.n_bins(),
            found: test.n_bins(),
        });
    }
    let (x, d1) = standardize_dataset(train)?;
    let (x1, d2) = standardize_dataset(test)?;
    if x1.is_empty() {
        return Err(Error::invalid("test set is empty after standardization"));
    }
    let (tr, va) = stratified_split(&x, split)?;
    Ok(Prepared {
        train: tr,
        valid: va,
        test: x1,
        dropped: d1 + d2,
    })
}

fn evaluate(
    kind: EstimatorKind,
    p: &Prepared,
    settings: &ExperimentSettings,
    dataset_id: &str,
) -> Result<(EvalReport, TrainedModel)> {
    let folds = stratified_kfold(
        &p.train.labels,
        settings.k,
        derive_seed(settings.split.seed, &[tag("folds")]),
    )?;
    let t = Instant::now();
    let gs = grid_search(
        kind,
        &settings.grid(kind),
        &p.train.scans,
        &p.train.labels,
        &folds,
        settings.estimator_seed(kind),
        &settings.options,
    )?;
    let grid_search_ms = ms(t);

    let t = Instant::now();
    let model = fit(&gs.best, &p.train.scans, &p.train.labels)?;
    let fit_ms = ms(t);

    let valid_pred = model.predict(&p.valid.scans)?;
    let t = Instant::now();
    let test_pred = model.predict(&p.test.scans)?;
    let predict_ms = ms(t);

    let report = EvalReport {
        dataset_id: dataset_id.to_string(),
        estimator: kind,
        status: ReportStatus::Ok,
        error: None,
        selected_params: gs.best.params.clone(),
        candidates: gs.all,
        validation_accuracy: accuracy(&p.valid.labels, &valid_pred)?,
        test_accuracy: accuracy(&p.test.labels, &test_pred)?,
        confusion: confusion_matrix(&p.test.labels, &test_pred, p.test.scheme.n_classes())?,
        grid_search_ms,
        fit_ms,
        predict_ms,
        n_train: p.train.len(),
        n_valid: p.valid.len(),
        n_test: p.test.len(),
        dropped: p.dropped,
    };
    Ok((report, model))
}

/// Split `train` into X_train / X_valid, select each estimator on X_train
/// by cross-validation, refit it on all of X_train and score it on X_valid
/// and on the independent `test` set.
///
/// Every scan is standardized on its own before use. An estimator that fails
/// produces a report with status `failed`; the others still run.
pub fn run_experiment(
    train: &LabeledDataset,
    test: &LabeledDataset,
    settings: &ExperimentSettings,
) -> Result<Vec<EvalReport>> {
    Ok(run_experiment_with_models(train, test, settings)?
        .into_iter()
        .map(|(r, _)| r)
        .collect())
}

/// As [`run_experiment`], also returning the refit model of each estimator
/// that succeeded.
pub fn run_experiment_with_models(
    train: &LabeledDataset,
    test: &LabeledDataset,
    settings: &ExperimentSettings,
) -> Result<Vec<(EvalReport, Option<TrainedModel>)>> {
    if settings.k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {}", settings.k)));
    }
    let id = train.id();
    let prepared = prepare(train, test, &settings.split)?;
    Ok(settings
        .kinds
        .iter()
        .map(|&kind| match evaluate(kind, &prepared, settings, &id) {
            Ok((r, m)) => (r, Some(m)),
            Err(e) => (EvalReport::failed(&id, kind, &e), None),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DataType;
    use crate::labeling::SchemeKind;
    use crate::matrix::Matrix;

    fn toy(n_per_class: usize) -> LabeledDataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..4u32 {
            for i in 0..n_per_class {
                let mut r = vec![0.0; 16];
                r[(c as usize) * 4] = 1.0 + i as f64 * 0.01;
                r[15] = 0.1 * ((i % 3) as f64);
                rows.push(r);
                labels.push(c);
            }
        }
        LabeledDataset::new(
            Matrix::from_rows(&rows).unwrap(),
            labels,
            SchemeKind::Simple4,
            DataType::MotionFiltered,
            "toy",
        )
        .unwrap()
    }

    #[test]
    fn report_per_kind_and_consistent_confusion() {
        let settings = ExperimentSettings {
            kinds: vec![EstimatorKind::KNearestNeighbors, EstimatorKind::DecisionTree],
            split: SplitSpec {
                train_fraction: 0.5,
                seed: 3,
            },
            ..Default::default()
        };
        let ds = toy(20);
        let reports = run_experiment(&ds, &ds, &settings).unwrap();
        assert_eq!(reports.len(), 2);
        for r in &reports {
            assert!(r.is_ok(), "{:?}", r.error);
            let total: u64 = r.confusion.iter().flatten().sum();
            let trace: u64 = (0..4).map(|i| r.confusion[i][i]).sum();
            assert_eq!(total as usize, r.n_test);
            assert!((100.0 * trace as f64 / total as f64 - r.test_accuracy).abs() < 1e-9);
            for (c, row) in r.confusion.iter().enumerate() {
                let n = ds.labels.iter().filter(|&&l| l as usize == c).count();
                assert_eq!(row.iter().sum::<u64>() as usize, n);
            }
        }
    }

    #[test]
    fn nearest_neighbour_on_its_own_training_data_is_exact() {
        let settings = ExperimentSettings {
            kinds: vec![EstimatorKind::KNearestNeighbors],
            grids: vec![(
                EstimatorKind::KNearestNeighbors,
                HyperParamGrid {
                    axes: vec![("n_neighbors".into(), vec![ParamValue::Int(1)])],
                },
            )],
            split: SplitSpec {
                train_fraction: 0.5,
                seed: 5,
            },
            ..Default::default()
        };
        let ds = toy(20);
        let (train, _) = stratified_split(&ds, &settings.split).unwrap();
        let reports = run_experiment(&ds, &train, &settings).unwrap();
        assert_eq!(reports[0].test_accuracy, 100.0);
    }

    #[test]
    fn failing_estimator_does_not_abort_others() {
        let mut settings = ExperimentSettings {
            kinds: vec![EstimatorKind::DecisionTree, EstimatorKind::KNearestNeighbors],
            split: SplitSpec {
                train_fraction: 0.5,
                seed: 1,
            },
            ..Default::default()
        };
        let mut bad = HyperParamGrid::table1(EstimatorKind::DecisionTree);
        bad.axes.push(("bogus".into(), vec![ParamValue::Int(1)]));
        settings.grids.push((EstimatorKind::DecisionTree, bad));
        let ds = toy(20);
        let reports = run_experiment(&ds, &ds, &settings).unwrap();
        assert_eq!(reports[0].status, ReportStatus::Failed);
        assert!(reports[1].is_ok());
    }

    #[test]
    fn mismatched_datasets_rejected() {
        let a = toy(10);
        let mut b = toy(10);
        b.data_type = DataType::Raw;
        assert!(run_experiment(&a, &b, &ExperimentSettings::default()).is_err());
    }
}
