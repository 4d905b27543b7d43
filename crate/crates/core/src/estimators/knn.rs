//! Brute-force k nearest neighbours under Euclidean distance.

use serde::{Deserialize, Serialize};

use crate::estimators::tree::majority;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub x: Matrix,
    pub y: Vec<u32>,
    pub n_classes: u32,
    pub n_neighbors: usize,
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

impl KnnModel {
    /// Indices of the `k` nearest training rows, nearest first; equal
    /// distances resolve to the lower training index.
    pub fn neighbors(&self, row: &[f64], k: usize) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .x
            .iter_rows()
            .enumerate()
            .map(|(i, r)| (sq_dist(row, r), i))
            .collect();
        let k = k.min(d.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < d.len() {
            d.select_nth_unstable_by(k, cmp);
            d.truncate(k);
        }
        d.sort_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }

    /// Majority label among the neighbours, smallest class on ties.
    pub fn predict_row(&self, row: &[f64]) -> u32 {
        let mut votes = vec![0u32; self.n_classes as usize];
        for i in self.neighbors(row, self.n_neighbors) {
            votes[self.y[i] as usize] += 1;
        }
        majority(&votes)
    }
}
