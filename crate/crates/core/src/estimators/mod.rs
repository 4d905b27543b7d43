//! The eight supervised estimators behind one fit/predict contract.
//!
//! Labels are arbitrary `u32` values; internally each model works on class
//! indices into its sorted list of training labels, so predictions can only
//! ever be labels seen during fit.

pub mod boosting;
pub mod forest;
pub mod knn;
pub mod linear;
pub mod logistic;
pub mod params;
pub mod perceptron;
pub mod svc;
pub mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::write_atomic;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::rng_from_seed;

pub use boosting::BoostedTrees;
pub use forest::Forest;
pub use knn::KnnModel;
pub use linear::LinearModel;
pub use params::{
    EstimatorKind, EstimatorSpec, HyperParamGrid, ParamValue, ResolvedParams, Solver,
    TrainingOptions,
};
pub use tree::{impurity, ClassificationTree, Criterion, MaxFeatures, SplitStrategy, TreeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LearnedParams {
    Linear(LinearModel),
    Neighbors(KnnModel),
    Tree(ClassificationTree),
    Forest(Forest),
    Boosting(BoostedTrees),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: EstimatorKind,
    pub spec: EstimatorSpec,
    /// Sorted unique training labels; class index `i` means `classes[i]`.
    pub classes: Vec<u32>,
    pub n_features: usize,
    pub learned: LearnedParams,
}

/// Fit `spec` on rows of `x` labelled by `y`. Deterministic in `spec.seed`.
pub fn fit(spec: &EstimatorSpec, x: &Matrix, y: &[u32]) -> Result<TrainedModel> {
    let resolved = spec.resolve()?;
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::invalid("cannot fit on an empty feature matrix"));
    }
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.rows(),
            found: y.len(),
        });
    }
    if let Some(i) = x.first_non_finite() {
        return Err(Error::NonFinite(i));
    }
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::invalid("need at least two classes to fit"));
    }
    let idx: Vec<u32> = y
        .iter()
        .map(|l| classes.binary_search(l).expect("label present") as u32)
        .collect();
    let k = classes.len();
    let mut rng = rng_from_seed(spec.seed);
    let opts = &spec.options;
    let learned = match resolved {
        ResolvedParams::Logistic { c, solver } => {
            LearnedParams::Linear(logistic::fit(x, &idx, k, c, solver, opts, &mut rng))
        }
        ResolvedParams::Perceptron { alpha } => LearnedParams::Linear(perceptron::fit(
            x,
            &idx,
            k,
            alpha,
            opts.perceptron_epochs,
            &mut rng,
        )),
        ResolvedParams::LinearSvc { c } => {
            LearnedParams::Linear(svc::fit(x, &idx, k, c, opts.svc_epochs))
        }
        ResolvedParams::Knn { n_neighbors } => LearnedParams::Neighbors(KnnModel {
            x: x.clone(),
            y: idx,
            n_classes: k as u32,
            n_neighbors,
        }),
        ResolvedParams::Tree {
            criterion,
            max_features,
        } => {
            let params = TreeParams {
                criterion,
                max_features,
                strategy: SplitStrategy::Best,
            };
            let all: Vec<usize> = (0..x.rows()).collect();
            LearnedParams::Tree(ClassificationTree::fit(
                x, &idx, &all, k as u32, &params, &mut rng,
            ))
        }
        ResolvedParams::Forest {
            n_estimators,
            criterion,
            max_features,
        } => {
            let extra = spec.kind == EstimatorKind::ExtraTrees;
            let params = TreeParams {
                criterion,
                max_features,
                strategy: if extra {
                    SplitStrategy::Random
                } else {
                    SplitStrategy::Best
                },
            };
            LearnedParams::Forest(Forest::fit(
                x,
                &idx,
                k as u32,
                n_estimators,
                &params,
                !extra,
                spec.seed,
            ))
        }
        ResolvedParams::Boosting {
            n_estimators,
            learning_rate,
        } => LearnedParams::Boosting(BoostedTrees::fit(
            x,
            &idx,
            k as u32,
            n_estimators,
            learning_rate,
            opts.boosting_max_depth,
        )),
    };
    Ok(TrainedModel {
        kind: spec.kind,
        spec: spec.clone(),
        classes,
        n_features: x.cols(),
        learned,
    })
}

pub const MODEL_MAGIC: &[u8; 4] = b"UWBM";
pub const MODEL_VERSION: u16 = 1;

impl TrainedModel {
    fn check_width(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.n_features {
            return Err(Error::LengthMismatch {
                expected: self.n_features,
                found: x.cols(),
            });
        }
        Ok(())
    }

    fn predict_index(&self, row: &[f64]) -> u32 {
        match &self.learned {
            LearnedParams::Linear(m) => m.predict_row(row),
            LearnedParams::Neighbors(m) => m.predict_row(row),
            LearnedParams::Tree(t) => t.predict_row(row),
            LearnedParams::Forest(f) => f.predict_row(row),
            LearnedParams::Boosting(b) => b.predict_row(row),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<u32>> {
        self.check_width(x)?;
        Ok(x
            .iter_rows()
            .map(|r| self.classes[self.predict_index(r) as usize])
            .collect())
    }

    /// Number of ensemble stages (trees or boosting rounds), if staged.
    pub fn n_stages(&self) -> Option<usize> {
        match &self.learned {
            LearnedParams::Forest(f) => Some(f.trees.len()),
            LearnedParams::Boosting(b) => Some(b.stages.len()),
            _ => None,
        }
    }

    /// Predictions using only the first `k` ensemble stages, for each `k` in
    /// `sizes`. Equivalent to fitting separate ensembles of those sizes with
    /// the same spec. Sizes must be ascending and at most [`Self::n_stages`].
    pub fn predict_staged(&self, x: &Matrix, sizes: &[usize]) -> Result<Vec<Vec<u32>>> {
        self.check_width(x)?;
        let stages = self
            .n_stages()
            .ok_or_else(|| Error::invalid(format!("{} is not an ensemble", self.kind)))?;
        if sizes.windows(2).any(|w| w[0] > w[1]) || sizes.iter().any(|&s| s > stages) {
            return Err(Error::invalid(format!(
                "staged sizes {sizes:?} must ascend and not exceed {stages}"
            )));
        }
        let raw = match &self.learned {
            LearnedParams::Forest(f) => f.predict_staged(x, sizes),
            LearnedParams::Boosting(b) => b.predict_staged(x, sizes),
            _ => unreachable!("checked above"),
        };
        Ok(raw
            .into_iter()
            .map(|p| p.into_iter().map(|c| self.classes[c as usize]).collect())
            .collect())
    }

    /// Container: magic `UWBM`, version (u16 LE), kind id (u8), reserved
    /// byte, payload length (u64 LE), then the bincode-encoded model.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let payload = bincode::serialize(self).map_err(|e| Error::Format(e.to_string()))?;
        let mut out = Vec::with_capacity(16 + payload.len());
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.push(self.kind.id());
        out.push(0);
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..4] != MODEL_MAGIC {
            return Err(Error::Format("not a model file".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model version {version}")));
        }
        let kind = EstimatorKind::from_id(bytes[6])
            .ok_or_else(|| Error::Format(format!("unknown estimator id {}", bytes[6])))?;
        let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        if bytes.len() - 16 != len {
            return Err(Error::Format("model payload length mismatch".into()));
        }
        let model: TrainedModel =
            bincode::deserialize(&bytes[16..]).map_err(|e| Error::Format(e.to_string()))?;
        if model.kind != kind {
            return Err(Error::Format("model kind tag disagrees with payload".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingInput(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_bytes(&bytes)
    }
}

pub fn predict(model: &TrainedModel, x: &Matrix) -> Result<Vec<u32>> {
    model.predict(x)
}

/// Percentage of positions where the labels agree.
pub fn accuracy(y_true: &[u32], y_pred: &[u32]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            expected: y_true.len(),
            found: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::invalid("accuracy of zero predictions"));
    }
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    Ok(100.0 * hits as f64 / y_true.len() as f64)
}

/// `counts[true][pred]` over labels `0..n_classes`.
pub fn confusion_matrix(y_true: &[u32], y_pred: &[u32], n_classes: usize) -> Result<Vec<Vec<u64>>> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            expected: y_true.len(),
            found: y_pred.len(),
        });
    }
    let mut m = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t as usize >= n_classes || p as usize >= n_classes {
            return Err(Error::invalid(format!("label outside 0..{n_classes}")));
        }
        m[t as usize][p as usize] += 1;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_kind_survives_the_model_file() {
        let x = Matrix::from_rows(&[
            [0.0, 1.0, 0.2],
            [0.1, 0.9, 0.1],
            [1.0, 0.0, 0.3],
            [0.9, 0.2, 0.4],
            [0.5, 0.5, 1.0],
            [0.4, 0.6, 0.9],
        ])
        .unwrap();
        let y = [0, 0, 1, 1, 2, 2];
        for kind in EstimatorKind::ALL {
            let params = HyperParamGrid::table1(kind).candidates().remove(0);
            let m = fit(&EstimatorSpec::new(kind, params, 3), &x, &y).unwrap();
            let back = TrainedModel::from_bytes(&m.to_bytes().unwrap()).unwrap();
            assert_eq!(back, m, "{kind}");
            assert_eq!(back.predict(&x).unwrap(), m.predict(&x).unwrap());
        }
    }

    #[test]
    fn accuracy_values() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 100.0);
        assert_eq!(accuracy(&[1, 2, 3], &[0, 0, 0]).unwrap(), 0.0);
        let t = [0, 1, 2, 3, 0, 1, 2, 3, 0, 1];
        let mut p = t;
        p[0] = 9;
        p[5] = 9;
        assert_eq!(accuracy(&t, &p).unwrap(), 80.0);
        assert!(accuracy(&[1], &[1, 2]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn confusion_counts() {
        let m = confusion_matrix(&[0, 0, 1, 2], &[0, 1, 1, 2], 3).unwrap();
        assert_eq!(m, vec![vec![1, 1, 0], vec![0, 1, 0], vec![0, 0, 1]]);
    }
}
