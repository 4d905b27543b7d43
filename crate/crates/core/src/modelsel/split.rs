use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fraction of each class that goes to the training side.
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.10,
            seed: 0,
        }
    }
}

/// Row indices per label, ascending.
fn by_class(y: &[u32]) -> BTreeMap<u32, Vec<usize>> {
    let mut m: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &l) in y.iter().enumerate() {
        m.entry(l).or_default().push(i);
    }
    m
}

/// Split into `(train, valid)` keeping `round(fraction * n_c)` examples of
/// each class `c` on the training side, clamped so both sides keep at least
/// one. Rows keep their original relative order.
pub fn stratified_split(
    dataset: &LabeledDataset,
    spec: &SplitSpec,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let (train, valid) = stratified_split_indices(&dataset.labels, spec)?;
    Ok((dataset.subset(&train), dataset.subset(&valid)))
}

pub fn stratified_split_indices(y: &[u32], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let mut train = Vec::new();
    let mut valid = Vec::new();
    for (label, mut idx) in by_class(y) {
        let n = idx.len();
        if n < 2 {
            return Err(Error::InsufficientClass {
                label,
                count: n,
                required: 2,
            });
        }
        let mut rng = rng_from_seed(derive_seed(spec.seed, &[u64::from(label)]));
        idx.shuffle(&mut rng);
        let take = ((spec.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
        train.extend_from_slice(&idx[..take]);
        valid.extend_from_slice(&idx[take..]);
    }
    train.sort_unstable();
    valid.sort_unstable();
    Ok((train, valid))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    /// Fold of each example.
    pub fold: Vec<usize>,
}

impl FoldAssignment {
    /// `(fit rows, held-out rows)` for fold `i`.
    pub fn split(&self, i: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.fold.len()).partition(|&j| self.fold[j] != i)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &f in &self.fold {
            s[f] += 1;
        }
        s
    }
}

/// Deal each class's shuffled examples round-robin over the folds. The
/// starting fold of each class continues where the previous class stopped,
/// so fold sizes stay within one of each other as well.
pub fn stratified_kfold(y: &[u32], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {k}")));
    }
    let mut fold = vec![0; y.len()];
    let mut next = 0usize;
    for (label, mut idx) in by_class(y) {
        if idx.len() < k {
            return Err(Error::InsufficientClass {
                label,
                count: idx.len(),
                required: k,
            });
        }
        let mut rng = rng_from_seed(derive_seed(seed, &[u64::from(label)]));
        idx.shuffle(&mut rng);
        for &i in &idx {
            fold[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldAssignment { k, fold })
}
