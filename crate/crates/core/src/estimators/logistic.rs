//! Multinomial logistic regression with an L2 penalty of strength `1/C`.
//!
//! Minimizes the mean cross-entropy plus `|W|^2 / (2 C n)` (intercepts are
//! not penalized). Parameters are packed as `[W row-major | b]`. Three
//! optimizers are available: limited-memory BFGS, stochastic average
//! gradient, and a truncated Newton method with a conjugate-gradient inner
//! solve. All stop when the gradient max-norm falls below the tolerance or
//! the iteration cap is reached, returning the best iterate seen.

use rand::Rng as _;

use crate::estimators::linear::{axpy, dot, LinearModel};
use crate::estimators::params::{Solver, TrainingOptions};
use crate::matrix::Matrix;
use crate::rng::Rng;

struct Problem<'a> {
    x: &'a Matrix,
    y: &'a [u32],
    k: usize,
    d: usize,
    inv_cn: f64,
}

impl<'a> Problem<'a> {
    fn dim(&self) -> usize {
        self.k * (self.d + 1)
    }

    fn n(&self) -> f64 {
        self.x.rows() as f64
    }

    fn w<'t>(&self, theta: &'t [f64], class: usize) -> &'t [f64] {
        &theta[class * self.d..(class + 1) * self.d]
    }

    fn b(&self, theta: &[f64], class: usize) -> f64 {
        theta[self.k * self.d + class]
    }

    /// Class probabilities of row `i` into `p`; returns `-log p[y_i]`.
    fn probs(&self, theta: &[f64], i: usize, p: &mut [f64]) -> f64 {
        let row = self.x.row(i);
        for (c, pc) in p.iter_mut().enumerate() {
            *pc = dot(self.w(theta, c), row) + self.b(theta, c);
        }
        let m = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for pc in p.iter_mut() {
            *pc = (*pc - m).exp();
            z += *pc;
        }
        let yi = self.y[i] as usize;
        let nll = -(p[yi].ln() - z.ln());
        p.iter_mut().for_each(|v| *v /= z);
        nll
    }

    fn penalty(&self, theta: &[f64]) -> f64 {
        let w = &theta[..self.k * self.d];
        0.5 * self.inv_cn * dot(w, w)
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let mut p = vec![0.0; self.k];
        let loss: f64 = (0..self.x.rows()).map(|i| self.probs(theta, i, &mut p)).sum();
        loss / self.n() + self.penalty(theta)
    }

    fn value_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut p = vec![0.0; self.k];
        let mut loss = 0.0;
        let kd = self.k * self.d;
        for i in 0..self.x.rows() {
            loss += self.probs(theta, i, &mut p);
            p[self.y[i] as usize] -= 1.0;
            let row = self.x.row(i);
            for c in 0..self.k {
                axpy(p[c], row, &mut grad[c * self.d..(c + 1) * self.d]);
                grad[kd + c] += p[c];
            }
        }
        let n = self.n();
        grad.iter_mut().for_each(|g| *g /= n);
        axpy(self.inv_cn, &theta[..kd], &mut grad[..kd]);
        loss / n + self.penalty(theta)
    }

    /// Hessian-vector product at `theta` (probabilities cached in `probs`).
    fn hess_vec(&self, probs: &[f64], v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let kd = self.k * self.d;
        let mut z = vec![0.0; self.k];
        for i in 0..self.x.rows() {
            let row = self.x.row(i);
            let p = &probs[i * self.k..(i + 1) * self.k];
            for (c, zc) in z.iter_mut().enumerate() {
                *zc = dot(self.w(v, c), row) + self.b(v, c);
            }
            let pz = dot(p, &z);
            for c in 0..self.k {
                let s = p[c] * (z[c] - pz);
                axpy(s, row, &mut out[c * self.d..(c + 1) * self.d]);
                out[kd + c] += s;
            }
        }
        let n = self.n();
        out.iter_mut().for_each(|o| *o /= n);
        axpy(self.inv_cn, &v[..kd], &mut out[..kd]);
    }

    fn all_probs(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.x.rows() * self.k];
        for i in 0..self.x.rows() {
            self.probs(theta, i, &mut out[i * self.k..(i + 1) * self.k]);
        }
        out
    }

    fn into_model(&self, theta: &[f64]) -> LinearModel {
        let kd = self.k * self.d;
        LinearModel {
            weights: Matrix::from_vec(self.k, self.d, theta[..kd].to_vec()).expect("sized"),
            bias: theta[kd..].to_vec(),
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Backtracking Armijo search along `dir`. Returns the accepted step and the
/// new objective, or `None` if no decrease was found.
fn backtrack(
    prob: &Problem,
    theta: &[f64],
    f0: f64,
    grad: &[f64],
    dir: &[f64],
    mut step: f64,
    trial: &mut [f64],
) -> Option<(f64, f64)> {
    let slope = dot(grad, dir);
    if slope >= 0.0 {
        return None;
    }
    for _ in 0..60 {
        for ((t, &x), &d) in trial.iter_mut().zip(theta).zip(dir) {
            *t = x + step * d;
        }
        let f = prob.value(trial);
        if f <= f0 + 1e-4 * step * slope {
            return Some((step, f));
        }
        step *= 0.5;
    }
    None
}

fn lbfgs(prob: &Problem, opts: &TrainingOptions) -> Vec<f64> {
    let dim = prob.dim();
    let mut theta = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut f = prob.value_grad(&theta, &mut grad);
    let m = opts.lbfgs_memory.max(1);
    let mut s_hist: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut y_hist: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut trial = vec![0.0; dim];
    let mut new_grad = vec![0.0; dim];
    for iter in 0..opts.logistic_max_iter {
        if max_abs(&grad) < opts.logistic_tol {
            break;
        }
        // two-loop recursion
        let mut q = grad.clone();
        let mut alphas = vec![0.0; s_hist.len()];
        for j in (0..s_hist.len()).rev() {
            let rho = 1.0 / dot(&y_hist[j], &s_hist[j]);
            alphas[j] = rho * dot(&s_hist[j], &q);
            axpy(-alphas[j], &y_hist[j], &mut q);
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for j in 0..s_hist.len() {
            let rho = 1.0 / dot(&y_hist[j], &s_hist[j]);
            let beta = rho * dot(&y_hist[j], &q);
            axpy(alphas[j] - beta, &s_hist[j], &mut q);
        }
        let dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let step0 = if iter == 0 { 1.0 / dot(&grad, &grad).sqrt().max(1.0) } else { 1.0 };
        let Some((step, f_new)) = backtrack(prob, &theta, f, &grad, &dir, step0, &mut trial) else {
            break;
        };
        prob.value_grad(&trial, &mut new_grad);
        let s: Vec<f64> = dir.iter().map(|d| step * d).collect();
        let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 {
            if s_hist.len() == m {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
        }
        std::mem::swap(&mut theta, &mut trial);
        std::mem::swap(&mut grad, &mut new_grad);
        f = f_new;
    }
    theta
}

fn newton_cg(prob: &Problem, opts: &TrainingOptions) -> Vec<f64> {
    let dim = prob.dim();
    let mut theta = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut hp = vec![0.0; dim];
    for _ in 0..opts.logistic_max_iter {
        let f = prob.value_grad(&theta, &mut grad);
        if max_abs(&grad) < opts.logistic_tol {
            break;
        }
        let probs = prob.all_probs(&theta);
        // CG on H p = -g with forcing tolerance min(0.5, sqrt|g|) |g|
        let gnorm = dot(&grad, &grad).sqrt();
        let tol = gnorm.sqrt().min(0.5) * gnorm;
        let mut p = vec![0.0; dim];
        let mut r: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut d = r.clone();
        let mut rr = dot(&r, &r);
        for _ in 0..opts.newton_cg_max_inner {
            if rr.sqrt() <= tol {
                break;
            }
            prob.hess_vec(&probs, &d, &mut hp);
            let curv = dot(&d, &hp);
            if curv <= 0.0 {
                break;
            }
            let a = rr / curv;
            axpy(a, &d, &mut p);
            axpy(-a, &hp, &mut r);
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for (di, ri) in d.iter_mut().zip(&r) {
                *di = ri + beta * *di;
            }
        }
        if p.iter().all(|v| *v == 0.0) {
            p = grad.iter().map(|g| -g).collect();
        }
        let Some(_) = backtrack(prob, &theta, f, &grad, &p, 1.0, &mut trial) else {
            break;
        };
        std::mem::swap(&mut theta, &mut trial);
    }
    theta
}

fn sag(prob: &Problem, opts: &TrainingOptions, rng: &mut Rng) -> Vec<f64> {
    let (k, d) = (prob.k, prob.d);
    let n = prob.x.rows();
    let kd = k * d;
    let mut theta = vec![0.0; prob.dim()];
    // stored per-sample loss gradients (p - e_y), and their running sum
    let mut memory = vec![0.0; n * k];
    let mut seen = vec![false; n];
    let mut n_seen = 0usize;
    let mut sum_w = vec![0.0; kd];
    let mut sum_b = vec![0.0; k];
    let max_sq = prob
        .x
        .iter_rows()
        .map(|r| dot(r, r) + 1.0)
        .fold(0.0, f64::max);
    let step = 1.0 / (0.5 * max_sq + prob.inv_cn);
    let mut p = vec![0.0; k];
    let mut grad = vec![0.0; prob.dim()];
    let mut best = theta.clone();
    let mut best_f = f64::INFINITY;
    for _epoch in 0..opts.logistic_max_iter {
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            prob.probs(&theta, i, &mut p);
            p[prob.y[i] as usize] -= 1.0;
            if !seen[i] {
                seen[i] = true;
                n_seen += 1;
            }
            let row = prob.x.row(i);
            for c in 0..k {
                let delta = p[c] - memory[i * k + c];
                if delta != 0.0 {
                    axpy(delta, row, &mut sum_w[c * d..(c + 1) * d]);
                    sum_b[c] += delta;
                }
                memory[i * k + c] = p[c];
            }
            let scale = step / n_seen as f64;
            let shrink = 1.0 - step * prob.inv_cn;
            theta[..kd].iter_mut().for_each(|w| *w *= shrink);
            axpy(-scale, &sum_w, &mut theta[..kd]);
            axpy(-scale, &sum_b, &mut theta[kd..]);
        }
        let f = prob.value_grad(&theta, &mut grad);
        if f < best_f {
            best_f = f;
            best.copy_from_slice(&theta);
        }
        if max_abs(&grad) < opts.logistic_tol {
            return theta;
        }
    }
    best
}

/// Fit on class indices `y` in `0..n_classes`.
pub fn fit(
    x: &Matrix,
    y: &[u32],
    n_classes: usize,
    c: f64,
    solver: Solver,
    opts: &TrainingOptions,
    rng: &mut Rng,
) -> LinearModel {
    let prob = Problem {
        x,
        y,
        k: n_classes,
        d: x.cols(),
        inv_cn: 1.0 / (c * x.rows() as f64),
    };
    let theta = match solver {
        Solver::Lbfgs => lbfgs(&prob, opts),
        Solver::Sag => sag(&prob, opts, rng),
        Solver::NewtonCg => newton_cg(&prob, opts),
    };
    prob.into_model(&theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn blobs() -> (Matrix, Vec<u32>) {
        let mut rng = rng_from_seed(4);
        let centers = [[2.0, 0.0], [-1.0, 1.7], [-1.0, -1.7]];
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (c, ctr) in centers.iter().enumerate() {
            for _ in 0..30 {
                rows.push([ctr[0] + rng.gen_range(-1.2..1.2), ctr[1] + rng.gen_range(-1.2..1.2)]);
                y.push(c as u32);
            }
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = blobs();
        let prob = Problem { x: &x, y: &y, k: 3, d: 2, inv_cn: 0.1 };
        let theta: Vec<f64> = (0..prob.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut g = vec![0.0; prob.dim()];
        prob.value_grad(&theta, &mut g);
        for j in 0..prob.dim() {
            let h = 1e-6;
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[j] += h;
            tm[j] -= h;
            let fd = (prob.value(&tp) - prob.value(&tm)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-7, "coordinate {j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn hessian_vector_matches_gradient_differences() {
        let (x, y) = blobs();
        let prob = Problem { x: &x, y: &y, k: 3, d: 2, inv_cn: 0.05 };
        let theta: Vec<f64> = (0..prob.dim()).map(|i| (i as f64 * 0.91).cos() * 0.3).collect();
        let v: Vec<f64> = (0..prob.dim()).map(|i| (i as f64 * 1.7).sin()).collect();
        let mut hv = vec![0.0; prob.dim()];
        prob.hess_vec(&prob.all_probs(&theta), &v, &mut hv);
        let h = 1e-6;
        let tp: Vec<f64> = theta.iter().zip(&v).map(|(t, d)| t + h * d).collect();
        let tm: Vec<f64> = theta.iter().zip(&v).map(|(t, d)| t - h * d).collect();
        let (mut gp, mut gm) = (vec![0.0; prob.dim()], vec![0.0; prob.dim()]);
        prob.value_grad(&tp, &mut gp);
        prob.value_grad(&tm, &mut gm);
        for j in 0..prob.dim() {
            let fd = (gp[j] - gm[j]) / (2.0 * h);
            assert!((fd - hv[j]).abs() < 1e-6);
        }
    }

    #[test]
    fn solvers_agree_on_a_strongly_convex_problem() {
        let (x, y) = blobs();
        let opts = TrainingOptions::default();
        let objective = |m: &LinearModel| {
            let prob = Problem { x: &x, y: &y, k: 3, d: 2, inv_cn: 1.0 / (1.0 * 90.0) };
            let mut theta = m.weights.as_slice().to_vec();
            theta.extend_from_slice(&m.bias);
            prob.value(&theta)
        };
        let a = fit(&x, &y, 3, 1.0, Solver::Lbfgs, &opts, &mut rng_from_seed(0));
        let b = fit(&x, &y, 3, 1.0, Solver::NewtonCg, &opts, &mut rng_from_seed(0));
        let c = fit(&x, &y, 3, 1.0, Solver::Sag, &opts, &mut rng_from_seed(0));
        let (fa, fb, fc) = (objective(&a), objective(&b), objective(&c));
        assert!((fa - fb).abs() < 1e-8, "{fa} vs {fb}");
        assert!((fa - fc).abs() < 1e-6, "{fa} vs {fc}");
    }
}
