//! One-vs-rest linear SVM. Each binary problem minimizes
//! `lambda/2 |w|^2 + mean(hinge)` with `lambda = 1 / (C n)` over an input
//! augmented by a constant 1 (the intercept is regularized with the
//! weights). Deterministic full-batch subgradient steps of size
//! `1 / (lambda t)` are followed by projection onto the ball of radius
//! `1 / sqrt(lambda)`; the iterate with the lowest objective is kept.

use crate::estimators::linear::{axpy, dot, LinearModel};
use crate::matrix::Matrix;

fn objective(x: &Matrix, targets: &[f64], w: &[f64], b: f64, lambda: f64) -> f64 {
    let hinge: f64 = x
        .iter_rows()
        .zip(targets)
        .map(|(row, &t)| (1.0 - t * (dot(w, row) + b)).max(0.0))
        .sum();
    0.5 * lambda * (dot(w, w) + b * b) + hinge / x.rows() as f64
}

pub fn fit(x: &Matrix, y: &[u32], n_classes: usize, c: f64, epochs: usize) -> LinearModel {
    let n = x.rows();
    let d = x.cols();
    let lambda = 1.0 / (c * n as f64);
    let radius = 1.0 / lambda.sqrt();
    let mut model = LinearModel::zeros(n_classes, d);
    let mut grad = vec![0.0; d];
    for k in 0..n_classes {
        let targets: Vec<f64> = y.iter().map(|&l| if l as usize == k { 1.0 } else { -1.0 }).collect();
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut best = (objective(x, &targets, &w, b, lambda), w.clone(), b);
        for t in 1..=epochs {
            grad.iter_mut().zip(&w).for_each(|(g, wi)| *g = lambda * wi);
            let mut grad_b = lambda * b;
            for (row, &yt) in x.iter_rows().zip(&targets) {
                if yt * (dot(&w, row) + b) < 1.0 {
                    axpy(-yt / n as f64, row, &mut grad);
                    grad_b -= yt / n as f64;
                }
            }
            let eta = 1.0 / (lambda * t as f64);
            axpy(-eta, &grad, &mut w);
            b -= eta * grad_b;
            let norm = (dot(&w, &w) + b * b).sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
                b *= s;
            }
            let f = objective(x, &targets, &w, b, lambda);
            if f < best.0 {
                best = (f, w.clone(), b);
            }
        }
        model.weights.row_mut(k).copy_from_slice(&best.1);
        model.bias[k] = best.2;
    }
    model
}
