//! Random forests (bootstrap + exhaustive split search) and extremely
//! randomized trees (full sample + one random threshold per feature).

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimators::tree::{majority, ClassificationTree, TreeParams};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<ClassificationTree>,
    pub n_classes: u32,
}

impl Forest {
    /// Member `i` draws from its own stream derived from `(seed, i)`, so the
    /// first `k` members of a larger forest equal a forest of `k` members.
    pub fn fit(
        x: &Matrix,
        y: &[u32],
        n_classes: u32,
        n_trees: usize,
        params: &TreeParams,
        bootstrap: bool,
        seed: u64,
    ) -> Forest {
        let n = x.rows();
        let trees = (0..n_trees)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_from_seed(derive_seed(seed, &[i as u64]));
                let samples: Vec<usize> = if bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                ClassificationTree::fit(x, y, &samples, n_classes, params, &mut rng)
            })
            .collect();
        Forest { trees, n_classes }
    }

    /// Majority vote of member predictions, lowest class index on ties.
    pub fn predict_row(&self, row: &[f64]) -> u32 {
        let mut votes = vec![0u32; self.n_classes as usize];
        for t in &self.trees {
            votes[t.predict_row(row) as usize] += 1;
        }
        majority(&votes)
    }

    /// Predictions of the first `k` members for each `k` in `sizes`
    /// (ascending, each at most the forest size).
    pub fn predict_staged(&self, x: &Matrix, sizes: &[usize]) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::with_capacity(x.rows()); sizes.len()];
        let mut votes = vec![0u32; self.n_classes as usize];
        for row in x.iter_rows() {
            votes.iter_mut().for_each(|v| *v = 0);
            let mut done = 0;
            for (i, t) in self.trees.iter().enumerate() {
                votes[t.predict_row(row) as usize] += 1;
                while done < sizes.len() && sizes[done] == i + 1 {
                    out[done].push(majority(&votes));
                    done += 1;
                }
            }
        }
        out
    }
}
