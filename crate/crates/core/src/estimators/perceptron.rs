//! One-vs-rest perceptron. A mistake on class `k` (`y_k (w_k . x + b_k) <= 0`
//! with `y_k = +-1`) adds `y_k x` to `w_k` and `y_k` to `b_k`. After every
//! epoch the weights (not the intercepts) are shrunk by `1 / (1 + alpha)`.
//! The visiting order is reshuffled each epoch.

use rand::seq::SliceRandom;

use crate::estimators::linear::{axpy, dot, LinearModel};
use crate::matrix::Matrix;
use crate::rng::Rng;

pub fn fit(x: &Matrix, y: &[u32], n_classes: usize, alpha: f64, epochs: usize, rng: &mut Rng) -> LinearModel {
    let d = x.cols();
    let mut model = LinearModel::zeros(n_classes, d);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let shrink = 1.0 / (1.0 + alpha);
    for _ in 0..epochs {
        order.shuffle(rng);
        for &i in &order {
            let row = x.row(i);
            for k in 0..n_classes {
                let target = if y[i] as usize == k { 1.0 } else { -1.0 };
                let w = model.weights.row_mut(k);
                if target * (dot(w, row) + model.bias[k]) <= 0.0 {
                    axpy(target, row, w);
                    model.bias[k] += target;
                }
            }
        }
        for k in 0..n_classes {
            model.weights.row_mut(k).iter_mut().for_each(|w| *w *= shrink);
        }
    }
    model
}
