//! CART classification trees with exhaustive or randomized threshold search.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    Gini,
    Entropy,
}

impl Criterion {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gini" => Some(Criterion::Gini),
            "entropy" => Some(Criterion::Entropy),
            _ => None,
        }
    }

    /// Impurity of a count vector with a known positive total.
    #[inline]
    pub(crate) fn of_counts(self, counts: &[u32], total: u32) -> f64 {
        let n = f64::from(total);
        match self {
            Criterion::Gini => {
                1.0 - counts
                    .iter()
                    .map(|&c| {
                        let p = f64::from(c) / n;
                        p * p
                    })
                    .sum::<f64>()
            }
            Criterion::Entropy => -counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = f64::from(c) / n;
                    p * p.log2()
                })
                .sum::<f64>(),
        }
    }
}

/// Count-weighted impurity `n * impurity(counts)` maintained incrementally as
/// samples move between the two sides of a split.
struct SideStats {
    criterion: Criterion,
    /// `sum c^2` for Gini, `sum c ln c` for entropy.
    acc: f64,
    n: u32,
}

impl SideStats {
    fn new(criterion: Criterion, counts: &[u32], xlogx: &[f64]) -> Self {
        let mut s = SideStats {
            criterion,
            acc: 0.0,
            n: 0,
        };
        for &c in counts {
            s.acc += s.term(c, xlogx);
            s.n += c;
        }
        s
    }

    #[inline]
    fn term(&self, c: u32, xlogx: &[f64]) -> f64 {
        match self.criterion {
            Criterion::Gini => f64::from(c) * f64::from(c),
            Criterion::Entropy => xlogx[c as usize],
        }
    }

    /// Class count goes from `c` to `c + 1`.
    #[inline]
    fn add(&mut self, c: u32, xlogx: &[f64]) {
        self.acc += self.term(c + 1, xlogx) - self.term(c, xlogx);
        self.n += 1;
    }

    /// Class count goes from `c` to `c - 1`.
    #[inline]
    fn remove(&mut self, c: u32, xlogx: &[f64]) {
        self.acc += self.term(c - 1, xlogx) - self.term(c, xlogx);
        self.n -= 1;
    }

    #[inline]
    fn weighted(&self, xlogx: &[f64]) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let n = f64::from(self.n);
        match self.criterion {
            Criterion::Gini => n - self.acc / n,
            Criterion::Entropy => (xlogx[self.n as usize] - self.acc) / std::f64::consts::LN_2,
        }
    }
}

/// Impurity of a class-count vector: Gini `1 - sum p^2` or entropy
/// `-sum p log2 p` with `0 log 0 = 0`.
pub fn impurity(counts: &[usize], criterion: Criterion) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::invalid("impurity of an empty count vector"));
    }
    let counts: Vec<u32> = counts
        .iter()
        .map(|&c| u32::try_from(c).map_err(|_| Error::invalid("count overflows u32")))
        .collect::<Result<_>>()?;
    let total = u32::try_from(total).map_err(|_| Error::invalid("count overflows u32"))?;
    Ok(criterion.of_counts(&counts, total).max(0.0))
}

/// Number of features examined per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxFeatures {
    /// Same as `Sqrt`.
    Auto,
    Sqrt,
    Log2,
    All,
}

impl MaxFeatures {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "auto" => Some(MaxFeatures::Auto),
            "sqrt" => Some(MaxFeatures::Sqrt),
            "log2" => Some(MaxFeatures::Log2),
            "all" => Some(MaxFeatures::All),
            _ => None,
        }
    }

    /// Rounded up, at least 1, at most `n_features`.
    pub fn resolve(self, n_features: usize) -> usize {
        let n = n_features as f64;
        let m = match self {
            MaxFeatures::Auto | MaxFeatures::Sqrt => n.sqrt().ceil() as usize,
            MaxFeatures::Log2 => n.log2().ceil() as usize,
            MaxFeatures::All => n_features,
        };
        m.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitStrategy {
    /// Every midpoint between consecutive distinct values.
    Best,
    /// One uniform threshold in `[min, max)` per feature.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub criterion: Criterion,
    pub max_features: MaxFeatures,
    pub strategy: SplitStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        class: u32,
    },
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

/// A fitted tree over class indices `0..n_classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationTree {
    pub nodes: Vec<Node>,
    pub n_classes: u32,
}

/// Splits closer than this in weighted impurity are ties, resolved in favour
/// of the one found first.
pub const SPLIT_TIE_EPS: f64 = 1e-12;

struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl ClassificationTree {
    /// Grow until every leaf is pure or holds fewer than two samples.
    /// `samples` may repeat rows (bootstrap); `y` holds class indices.
    pub fn fit(
        x: &Matrix,
        y: &[u32],
        samples: &[usize],
        n_classes: u32,
        params: &TreeParams,
        rng: &mut Rng,
    ) -> ClassificationTree {
        let mut builder = Builder {
            x,
            y,
            n_classes: n_classes as usize,
            params,
            rng,
            nodes: Vec::new(),
            buf: Vec::with_capacity(samples.len()),
            features: (0..x.cols()).collect(),
            xlogx: (0..=samples.len())
                .map(|c| if c == 0 { 0.0 } else { c as f64 * (c as f64).ln() })
                .collect(),
        };
        builder.grow(samples.to_vec());
        ClassificationTree {
            nodes: builder.nodes,
            n_classes,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> u32 {
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, left as usize).max(walk(nodes, right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [u32],
    n_classes: usize,
    params: &'a TreeParams,
    rng: &'a mut Rng,
    nodes: Vec<Node>,
    buf: Vec<(f64, u32)>,
    features: Vec<usize>,
    /// `c ln c` for every count that can occur.
    xlogx: Vec<f64>,
}

impl Builder<'_> {
    /// Depth-first, left subtree before right, so node ids and random draws
    /// follow a fixed order.
    fn grow(&mut self, root: Vec<usize>) {
        // (sample set, slot in parent to patch)
        let mut stack: Vec<(Vec<usize>, Option<(usize, bool)>)> = vec![(root, None)];
        while let Some((samples, parent)) = stack.pop() {
            let id = self.nodes.len();
            if let Some((p, is_left)) = parent {
                if let Node::Split { left, right, .. } = &mut self.nodes[p] {
                    if is_left {
                        *left = id as u32;
                    } else {
                        *right = id as u32;
                    }
                }
            }
            let counts = self.counts(&samples);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let split = if pure || samples.len() < 2 {
                None
            } else {
                self.find_split(&samples, &counts)
            };
            match split {
                None => self.nodes.push(Node::Leaf {
                    class: majority(&counts),
                }),
                Some(c) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = samples
                        .iter()
                        .partition(|&&s| self.x.get(s, c.feature) <= c.threshold);
                    self.nodes.push(Node::Split {
                        feature: c.feature as u32,
                        threshold: c.threshold,
                        left: 0,
                        right: 0,
                    });
                    stack.push((r, Some((id, false))));
                    stack.push((l, Some((id, true))));
                }
            }
        }
    }

    fn counts(&self, samples: &[usize]) -> Vec<u32> {
        let mut c = vec![0u32; self.n_classes];
        for &s in samples {
            c[self.y[s] as usize] += 1;
        }
        c
    }

    /// Features are visited in random order (ascending for `All`); at least
    /// `max_features` are examined, more while none admits a split.
    fn find_split(&mut self, samples: &[usize], counts: &[u32]) -> Option<Candidate> {
        let n_features = self.features.len();
        let m = self.params.max_features.resolve(n_features);
        let shuffle = self.params.max_features != MaxFeatures::All;
        if !shuffle {
            self.features.sort_unstable();
        }
        let mut best: Option<Candidate> = None;
        for i in 0..n_features {
            if i >= m && best.is_some() {
                break;
            }
            if shuffle {
                let j = self.rng.gen_range(i..n_features);
                self.features.swap(i, j);
            }
            let f = self.features[i];
            let cand = match self.params.strategy {
                SplitStrategy::Best => self.best_threshold(samples, counts, f),
                SplitStrategy::Random => self.random_threshold(samples, counts, f),
            };
            if let Some(c) = cand {
                if best.as_ref().map_or(true, |b| c.score < b.score - SPLIT_TIE_EPS) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn best_threshold(&mut self, samples: &[usize], counts: &[u32], f: usize) -> Option<Candidate> {
        self.buf.clear();
        self.buf
            .extend(samples.iter().map(|&s| (self.x.get(s, f), self.y[s])));
        self.buf.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = f64::from(self.buf.len() as u32);
        let crit = self.params.criterion;
        let xlogx = &self.xlogx;
        let mut left_counts = vec![0u32; self.n_classes];
        let mut right_counts = counts.to_vec();
        let mut left = SideStats::new(crit, &left_counts, xlogx);
        let mut right = SideStats::new(crit, &right_counts, xlogx);
        let mut best: Option<Candidate> = None;
        for i in 0..self.buf.len() - 1 {
            let (v, c) = self.buf[i];
            let c = c as usize;
            left.add(left_counts[c], xlogx);
            right.remove(right_counts[c], xlogx);
            left_counts[c] += 1;
            right_counts[c] -= 1;
            let next = self.buf[i + 1].0;
            if v >= next {
                continue;
            }
            let score = (left.weighted(xlogx) + right.weighted(xlogx)) / n;
            if best.as_ref().map_or(true, |b| score < b.score - SPLIT_TIE_EPS) {
                best = Some(Candidate {
                    feature: f,
                    threshold: midpoint(v, next),
                    score,
                });
            }
        }
        best
    }

    fn random_threshold(&mut self, samples: &[usize], _counts: &[u32], f: usize) -> Option<Candidate> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &s in samples {
            let v = self.x.get(s, f);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo >= hi {
            return None;
        }
        let threshold = self.rng.gen_range(lo..hi);
        let mut left = vec![0u32; self.n_classes];
        let mut right = vec![0u32; self.n_classes];
        for &s in samples {
            let c = self.y[s] as usize;
            if self.x.get(s, f) <= threshold {
                left[c] += 1;
            } else {
                right[c] += 1;
            }
        }
        let crit = self.params.criterion;
        let l = SideStats::new(crit, &left, &self.xlogx);
        let r = SideStats::new(crit, &right, &self.xlogx);
        let score = (l.weighted(&self.xlogx) + r.weighted(&self.xlogx)) / f64::from(l.n + r.n);
        Some(Candidate {
            feature: f,
            threshold,
            score,
        })
    }
}

/// Threshold strictly below `b` and not below `a`.
pub fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b || !m.is_finite() {
        a
    } else {
        m
    }
}

/// Index of the largest count, lowest index on ties.
pub(crate) fn majority(counts: &[u32]) -> u32 {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn impurity_closed_forms() {
        assert_eq!(impurity(&[10, 0], Criterion::Gini).unwrap(), 0.0);
        assert_eq!(impurity(&[10, 0], Criterion::Entropy).unwrap(), 0.0);
        assert!((impurity(&[5, 5], Criterion::Gini).unwrap() - 0.5).abs() < 1e-15);
        assert!((impurity(&[5, 5], Criterion::Entropy).unwrap() - 1.0).abs() < 1e-15);
        assert!((impurity(&[1, 2, 3], Criterion::Gini).unwrap() - 11.0 / 18.0).abs() < 1e-15);
        assert!(impurity(&[0, 0], Criterion::Gini).is_err());
        assert!(impurity(&[], Criterion::Entropy).is_err());
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::Auto.resolve(480), 22);
        assert_eq!(MaxFeatures::Sqrt.resolve(16), 4);
        assert_eq!(MaxFeatures::Log2.resolve(480), 9);
        assert_eq!(MaxFeatures::Log2.resolve(1), 1);
        assert_eq!(MaxFeatures::All.resolve(7), 7);
    }

    #[test]
    fn single_threshold_separator_gives_depth_one() {
        let x = Matrix::from_rows(&[[0.1], [0.4], [0.35], [2.0], [3.0], [2.5]]).unwrap();
        let y = [0, 0, 0, 1, 1, 1];
        let params = TreeParams {
            criterion: Criterion::Gini,
            max_features: MaxFeatures::Auto,
            strategy: SplitStrategy::Best,
        };
        let t = ClassificationTree::fit(&x, &y, &[0, 1, 2, 3, 4, 5], 2, &params, &mut rng_from_seed(0));
        assert_eq!(t.depth(), 1);
        match t.nodes[0] {
            Node::Split { threshold, .. } => assert!((threshold - 1.2).abs() < 1e-12),
            _ => panic!("root must split"),
        }
        for (i, &label) in y.iter().enumerate() {
            assert_eq!(t.predict_row(x.row(i)), label);
        }
    }

    #[test]
    fn constant_features_make_a_leaf() {
        let x = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]).unwrap();
        let params = TreeParams {
            criterion: Criterion::Entropy,
            max_features: MaxFeatures::Sqrt,
            strategy: SplitStrategy::Random,
        };
        let t = ClassificationTree::fit(&x, &[1, 0, 1], &[0, 1, 2], 2, &params, &mut rng_from_seed(1));
        assert_eq!(t.nodes, vec![Node::Leaf { class: 1 }]);
    }

    #[test]
    fn midpoint_stays_below_upper() {
        assert_eq!(midpoint(1.0, 3.0), 2.0);
        let a = 1.0_f64;
        let b = f64::from_bits(a.to_bits() + 1);
        assert_eq!(midpoint(a, b), a);
    }
}
