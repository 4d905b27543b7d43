//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use uwbdetect::estimators::tree::Node;

/// Gini or entropy of a count vector, straight from the definition.
pub fn impurity_ref(counts: &[usize], entropy: bool) -> f64 {
    let n: usize = counts.iter().sum();
    let n = n as f64;
    if entropy {
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .sum()
    } else {
        1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
    }
}

pub fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Fully grown CART tree found by trying every feature and every midpoint
/// at every node. Ties keep the first candidate in (feature, threshold)
/// order, within the same tolerance the library documents. Nodes are
/// numbered in pre-order, left child first.
pub fn brute_force_tree(x: &[Vec<f64>], y: &[u32], n_classes: usize, entropy: bool, eps: f64) -> Vec<Node> {
    let mut nodes = Vec::new();
    let all: Vec<usize> = (0..y.len()).collect();
    grow(x, y, n_classes, entropy, eps, &all, &mut nodes);
    nodes
}

fn counts_of(y: &[u32], idx: &[usize], k: usize) -> Vec<usize> {
    let mut c = vec![0; k];
    for &i in idx {
        c[y[i] as usize] += 1;
    }
    c
}

fn argmax_low(c: &[usize]) -> u32 {
    let mut best = 0;
    for i in 1..c.len() {
        if c[i] > c[best] {
            best = i;
        }
    }
    best as u32
}

fn grow(
    x: &[Vec<f64>],
    y: &[u32],
    k: usize,
    entropy: bool,
    eps: f64,
    idx: &[usize],
    nodes: &mut Vec<Node>,
) -> u32 {
    let id = nodes.len();
    let counts = counts_of(y, idx, k);
    let classes_present = counts.iter().filter(|&&c| c > 0).count();
    let mut best: Option<(usize, f64, f64)> = None;
    if classes_present > 1 && idx.len() >= 2 {
        for f in 0..x[0].len() {
            let mut vals: Vec<f64> = idx.iter().map(|&i| x[i][f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = midpoint(w[0], w[1]);
                let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][f] <= t);
                let n = idx.len() as f64;
                let score = (l.len() as f64 * impurity_ref(&counts_of(y, &l, k), entropy)
                    + r.len() as f64 * impurity_ref(&counts_of(y, &r, k), entropy))
                    / n;
                if best.map_or(true, |(_, _, s)| score < s - eps) {
                    best = Some((f, t, score));
                }
            }
        }
    }
    match best {
        None => {
            nodes.push(Node::Leaf { class: argmax_low(&counts) });
        }
        Some((f, t, _)) => {
            nodes.push(Node::Split {
                feature: f as u32,
                threshold: t,
                left: 0,
                right: 0,
            });
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][f] <= t);
            let li = grow(x, y, k, entropy, eps, &l, nodes);
            let ri = grow(x, y, k, entropy, eps, &r, nodes);
            nodes[id] = Node::Split {
                feature: f as u32,
                threshold: t,
                left: li,
                right: ri,
            };
        }
    }
    id as u32
}

/// Same rounding as the library's threshold convention.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

/// Label by majority vote of the `k` nearest rows after a full sort by
/// (distance, index); smallest label wins a tied vote.
pub fn knn_ref(train: &[Vec<f64>], labels: &[u32], query: &[f64], k: usize, n_classes: usize) -> u32 {
    let mut d: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, r)| (r.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut votes = vec![0usize; n_classes];
    for &(_, i) in d.iter().take(k) {
        votes[labels[i] as usize] += 1;
    }
    argmax_low(&votes)
}

/// Largest deviation of per-class counts from `fraction` of each class.
pub fn class_ratio_deviation(all: &[u32], part: &[u32], fraction: f64) -> f64 {
    let k = all.iter().copied().max().map_or(0, |m| m as usize + 1);
    (0..k)
        .map(|c| {
            let total = all.iter().filter(|&&l| l as usize == c).count() as f64;
            let got = part.iter().filter(|&&l| l as usize == c).count() as f64;
            (got - fraction * total).abs()
        })
        .fold(0.0, f64::max)
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
