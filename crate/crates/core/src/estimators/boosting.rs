//! Gradient boosting on the multinomial deviance.
//!
//! Each stage fits one depth-limited least-squares regression tree per class
//! to the residuals `y_k - p_k` and sets leaf values with a single Newton step
//! `(K-1)/K * sum(r) / sum(|r| (1 - |r|))`. Raw scores start at the log class
//! priors and are shrunk by the learning rate.

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegNode {
    Leaf { value: f64 },
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<RegNode>,
}

impl RegressionTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                RegNode::Leaf { value } => return value,
                RegNode::Split { feature, threshold, left, right } => {
                    i = if row[feature as usize] <= threshold { left as usize } else { right as usize };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedTrees {
    pub n_classes: u32,
    pub learning_rate: f64,
    pub init: Vec<f64>,
    /// `stages[s][k]` is the tree for class `k` at stage `s`.
    pub stages: Vec<Vec<RegressionTree>>,
    /// Mean training deviance after each stage (index 0 = initial scores).
    pub train_deviance: Vec<f64>,
}

/// Per-feature `(value, row)` pairs, ascending by value (ties by row index).
pub(crate) fn presort(x: &Matrix) -> Vec<Vec<(f64, u32)>> {
    (0..x.cols())
        .map(|f| {
            let mut col: Vec<(f64, u32)> = (0..x.rows()).map(|i| (x.get(i, f), i as u32)).collect();
            col.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            col
        })
        .collect()
}

fn softmax_into(scores: &[f64], out: &mut [f64]) {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for (o, &s) in out.iter_mut().zip(scores) {
        *o = (s - m).exp();
        z += *o;
    }
    out.iter_mut().for_each(|o| *o /= z);
}

/// Mean negative log-likelihood of the true classes.
pub(crate) fn deviance(scores: &[f64], y: &[u32], k: usize) -> f64 {
    let mut total = 0.0;
    for (i, &c) in y.iter().enumerate() {
        let s = &scores[i * k..(i + 1) * k];
        let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += lse - s[c as usize];
    }
    total / y.len() as f64
}

impl BoostedTrees {
    pub fn fit(
        x: &Matrix,
        y: &[u32],
        n_classes: u32,
        n_stages: usize,
        learning_rate: f64,
        max_depth: usize,
    ) -> BoostedTrees {
        let n = x.rows();
        let k = n_classes as usize;
        let mut prior = vec![0.0; k];
        for &c in y {
            prior[c as usize] += 1.0;
        }
        let init: Vec<f64> = prior
            .iter()
            .map(|&c| (c / n as f64).max(f64::MIN_POSITIVE).ln())
            .collect();
        let mut scores: Vec<f64> = (0..n).flat_map(|_| init.iter().copied()).collect();
        let order = presort(x);
        let mut grower = RegGrower::new(x, &order, max_depth);
        let mut probs = vec![0.0; n * k];
        let mut residual = vec![0.0; n];
        let mut stages = Vec::with_capacity(n_stages);
        let mut train_deviance = vec![deviance(&scores, y, k)];
        for _ in 0..n_stages {
            for i in 0..n {
                softmax_into(&scores[i * k..(i + 1) * k], &mut probs[i * k..(i + 1) * k]);
            }
            let mut stage = Vec::with_capacity(k);
            for class in 0..k {
                for i in 0..n {
                    let target = if y[i] as usize == class { 1.0 } else { 0.0 };
                    residual[i] = target - probs[i * k + class];
                }
                let tree = grower.grow(&residual, k);
                for i in 0..n {
                    scores[i * k + class] += learning_rate * tree.predict_row(x.row(i));
                }
                stage.push(tree);
            }
            stages.push(stage);
            train_deviance.push(deviance(&scores, y, k));
        }
        BoostedTrees {
            n_classes,
            learning_rate,
            init,
            stages,
            train_deviance,
        }
    }

    fn add_stage(&self, stage: &[RegressionTree], row: &[f64], scores: &mut [f64]) {
        for (s, tree) in scores.iter_mut().zip(stage) {
            *s += self.learning_rate * tree.predict_row(row);
        }
    }

    pub fn decision_scores(&self, row: &[f64]) -> Vec<f64> {
        let mut scores = self.init.clone();
        for stage in &self.stages {
            self.add_stage(stage, row, &mut scores);
        }
        scores
    }

    pub fn predict_row(&self, row: &[f64]) -> u32 {
        argmax(&self.decision_scores(row))
    }

    /// Predictions after the first `k` stages for each `k` in `sizes`
    /// (ascending).
    pub fn predict_staged(&self, x: &Matrix, sizes: &[usize]) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::with_capacity(x.rows()); sizes.len()];
        for row in x.iter_rows() {
            let mut scores = self.init.clone();
            let mut done = 0;
            while done < sizes.len() && sizes[done] == 0 {
                out[done].push(argmax(&scores));
                done += 1;
            }
            for (i, stage) in self.stages.iter().enumerate() {
                self.add_stage(stage, row, &mut scores);
                while done < sizes.len() && sizes[done] == i + 1 {
                    out[done].push(argmax(&scores));
                    done += 1;
                }
            }
        }
        out
    }
}

pub(crate) fn argmax(v: &[f64]) -> u32 {
    let mut best = 0;
    for (i, &s) in v.iter().enumerate() {
        if s > v[best] {
            best = i;
        }
    }
    best as u32
}

/// Level-wise least-squares tree growth over presorted feature orders.
/// Each level costs one pass over every feature order.
struct RegGrower<'a> {
    x: &'a Matrix,
    order: &'a [Vec<(f64, u32)>],
    max_depth: usize,
    node_of: Vec<u32>,
    /// `1 / n` for every node size.
    inv: Vec<f64>,
}

#[derive(Clone, Copy, Default)]
struct Stats {
    n: u32,
    sum: f64,
}

#[derive(Clone, Copy)]
struct BestSplit {
    gain: f64,
    feature: u32,
    threshold: f64,
}

const NO_NODE: u32 = u32::MAX;

impl<'a> RegGrower<'a> {
    fn new(x: &'a Matrix, order: &'a [Vec<(f64, u32)>], max_depth: usize) -> Self {
        Self {
            x,
            order,
            max_depth,
            node_of: vec![0; x.rows()],
            inv: (0..=x.rows()).map(|n| 1.0 / n.max(1) as f64).collect(),
        }
    }

    fn grow(&mut self, r: &[f64], n_classes: usize) -> RegressionTree {
        let n = self.x.rows();
        // tree nodes, with the sample totals for each open node
        let mut nodes: Vec<RegNode> = vec![RegNode::Leaf { value: 0.0 }];
        self.node_of.iter_mut().for_each(|v| *v = 0);
        let mut open: Vec<u32> = vec![0];
        for depth in 0..=self.max_depth {
            if open.is_empty() {
                break;
            }
            // slot in `open` for each tree node id
            let mut slot = vec![NO_NODE; nodes.len()];
            for (s, &id) in open.iter().enumerate() {
                slot[id as usize] = s as u32;
            }
            let mut totals = vec![Stats::default(); open.len()];
            for i in 0..n {
                let id = self.node_of[i];
                if id != NO_NODE {
                    let s = slot[id as usize] as usize;
                    totals[s].n += 1;
                    totals[s].sum += r[i];
                }
            }
            let parent_term: Vec<f64> = totals
                .iter()
                .map(|t| t.sum * t.sum / f64::from(t.n.max(1)))
                .collect();
            let mut best: Vec<Option<BestSplit>> = vec![None; open.len()];
            if depth < self.max_depth {
                let row_slot: Vec<u32> = self
                    .node_of
                    .iter()
                    .map(|&id| if id == NO_NODE { NO_NODE } else { slot[id as usize] })
                    .collect();
                let mut left = vec![Stats::default(); open.len()];
                let mut last = vec![f64::NAN; open.len()];
                for (f, ord) in self.order.iter().enumerate() {
                    left.iter_mut().for_each(|s| *s = Stats::default());
                    for &(v, i) in ord {
                        let i = i as usize;
                        let s = row_slot[i];
                        if s == NO_NODE {
                            continue;
                        }
                        let s = s as usize;
                        let l = left[s];
                        if l.n > 0 && v > last[s] {
                            let t = totals[s];
                            let rn = t.n - l.n;
                            let rs = t.sum - l.sum;
                            let gain = l.sum * l.sum * self.inv[l.n as usize]
                                + rs * rs * self.inv[rn as usize]
                                - parent_term[s];
                            if gain > 1e-12 && best[s].map_or(true, |b| gain > b.gain) {
                                best[s] = Some(BestSplit {
                                    gain,
                                    feature: f as u32,
                                    threshold: crate::estimators::tree::midpoint(last[s], v),
                                });
                            }
                        }
                        left[s].n += 1;
                        left[s].sum += r[i];
                        last[s] = v;
                    }
                }
            }
            // finalize leaves, create children for splits
            let mut next_open = Vec::new();
            let mut leaf_num = vec![0.0; open.len()];
            let mut leaf_den = vec![0.0; open.len()];
            for i in 0..n {
                let id = self.node_of[i];
                if id == NO_NODE {
                    continue;
                }
                let s = slot[id as usize] as usize;
                if best[s].is_none() {
                    leaf_num[s] += r[i];
                    leaf_den[s] += r[i].abs() * (1.0 - r[i].abs());
                }
            }
            let mut child_of = vec![(NO_NODE, NO_NODE); open.len()];
            for (s, &id) in open.iter().enumerate() {
                match best[s] {
                    None => {
                        let kf = n_classes as f64;
                        let value = if leaf_den[s].abs() < 1e-150 {
                            0.0
                        } else {
                            (kf - 1.0) / kf * leaf_num[s] / leaf_den[s]
                        };
                        nodes[id as usize] = RegNode::Leaf { value };
                    }
                    Some(b) => {
                        let l = nodes.len() as u32;
                        nodes.push(RegNode::Leaf { value: 0.0 });
                        nodes.push(RegNode::Leaf { value: 0.0 });
                        nodes[id as usize] = RegNode::Split {
                            feature: b.feature,
                            threshold: b.threshold,
                            left: l,
                            right: l + 1,
                        };
                        child_of[s] = (l, l + 1);
                        next_open.push(l);
                        next_open.push(l + 1);
                    }
                }
            }
            for i in 0..n {
                let id = self.node_of[i];
                if id == NO_NODE {
                    continue;
                }
                let s = slot[id as usize] as usize;
                self.node_of[i] = match best[s] {
                    None => NO_NODE,
                    Some(b) => {
                        if self.x.get(i, b.feature as usize) <= b.threshold {
                            child_of[s].0
                        } else {
                            child_of[s].1
                        }
                    }
                };
            }
            open = next_open;
        }
        RegressionTree { nodes }
    }
}
