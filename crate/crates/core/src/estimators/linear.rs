use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

/// Per-class affine scores `w_k . x + b_k`; the prediction is the arg max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// `n_classes x n_features`
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(n_classes: usize, n_features: usize) -> Self {
        Self {
            weights: Matrix::zeros(n_classes, n_features),
            bias: vec![0.0; n_classes],
        }
    }

    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        self.weights
            .iter_rows()
            .zip(&self.bias)
            .map(|(w, b)| dot(w, row) + b)
            .collect()
    }

    /// Highest score, lowest class index on ties.
    pub fn predict_row(&self, row: &[f64]) -> u32 {
        crate::estimators::boosting::argmax(&self.scores(row))
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
