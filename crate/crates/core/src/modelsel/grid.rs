use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    accuracy, fit, EstimatorKind, EstimatorSpec, HyperParamGrid, ParamValue, TrainingOptions,
};
use crate::matrix::Matrix;
use crate::modelsel::split::FoldAssignment;

/// Cross-validation result of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub params: Vec<(String, ParamValue)>,
    /// Accuracy (%) on each held-out fold.
    pub scores: Vec<f64>,
    pub s_min: f64,
}

impl CandidateScore {
    pub fn new(params: Vec<(String, ParamValue)>, scores: Vec<f64>) -> Self {
        let s_min = scores.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            params,
            scores,
            s_min,
        }
    }

    pub fn mean(&self) -> f64 {
        self.scores.iter().sum::<f64>() / self.scores.len() as f64
    }
}

/// Index of the candidate with the largest worst-fold score; the earliest
/// one wins ties.
pub fn select_best(candidates: &[CandidateScore]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        if best.map_or(true, |b| c.s_min > candidates[b].s_min) {
            best = Some(i);
        }
    }
    best
}

fn check_folds(x: &Matrix, y: &[u32], folds: &FoldAssignment) -> Result<()> {
    if x.rows() != y.len() || folds.fold.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            found: folds.fold.len(),
        });
    }
    if folds.fold_sizes().contains(&0) {
        return Err(Error::invalid("every fold must hold at least one example"));
    }
    Ok(())
}

fn fold_data(x: &Matrix, y: &[u32], idx: &[usize]) -> (Matrix, Vec<u32>) {
    (x.select_rows(idx), idx.iter().map(|&i| y[i]).collect())
}

/// Accuracy on each fold of a model fit on the remaining folds.
pub fn cross_val_scores(
    spec: &EstimatorSpec,
    x: &Matrix,
    y: &[u32],
    folds: &FoldAssignment,
) -> Result<Vec<f64>> {
    check_folds(x, y, folds)?;
    (0..folds.k)
        .into_par_iter()
        .map(|i| {
            let (fit_idx, test_idx) = folds.split(i);
            let (xf, yf) = fold_data(x, y, &fit_idx);
            let (xt, yt) = fold_data(x, y, &test_idx);
            let model = fit(spec, &xf, &yf)?;
            accuracy(&yt, &model.predict(&xt)?)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: EstimatorSpec,
    pub best_index: usize,
    pub all: Vec<CandidateScore>,
}

const STAGE_AXIS: &str = "n_estimators";

/// Exhaustive search over `grid`, scoring each candidate by cross-validation
/// and selecting the maximum worst-fold accuracy.
///
/// Ensembles whose grid varies the member count are evaluated by fitting the
/// largest size once per fold and reading off the smaller sizes as prefixes;
/// results are identical to fitting every size separately.
pub fn grid_search(
    kind: EstimatorKind,
    grid: &HyperParamGrid,
    x: &Matrix,
    y: &[u32],
    folds: &FoldAssignment,
    seed: u64,
    options: &TrainingOptions,
) -> Result<GridSearchResult> {
    grid.validate_for(kind)?;
    check_folds(x, y, folds)?;
    let candidates = grid.candidates();
    let spec_for = |params: Vec<(String, ParamValue)>| EstimatorSpec {
        kind,
        params,
        seed,
        options: *options,
    };

    let staged = matches!(
        kind,
        EstimatorKind::RandomForest | EstimatorKind::ExtraTrees | EstimatorKind::GradientBoosting
    ) && kind.axes().contains(&STAGE_AXIS);

    // groups of candidate indices that differ only in the stage axis
    let mut groups: Vec<Vec<usize>> = Vec::new();
    if staged {
        let key = |p: &[(String, ParamValue)]| -> Vec<(String, ParamValue)> {
            p.iter().filter(|(n, _)| n != STAGE_AXIS).cloned().collect()
        };
        let mut keys: Vec<Vec<(String, ParamValue)>> = Vec::new();
        for (i, c) in candidates.iter().enumerate() {
            let k = key(c);
            match keys.iter().position(|x| *x == k) {
                Some(g) => groups[g].push(i),
                None => {
                    keys.push(k);
                    groups.push(vec![i]);
                }
            }
        }
    } else {
        groups = (0..candidates.len()).map(|i| vec![i]).collect();
    }

    let stage_of = |i: usize| -> usize {
        candidates[i]
            .iter()
            .find(|(n, _)| n == STAGE_AXIS)
            .and_then(|(_, v)| v.as_usize())
            .expect("validated grid")
    };

    let jobs: Vec<(usize, usize)> = (0..groups.len())
        .flat_map(|g| (0..folds.k).map(move |f| (g, f)))
        .collect();
    // (group, fold) -> accuracy per member of the group
    let results: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(g, f)| {
            let (fit_idx, test_idx) = folds.split(f);
            let (xf, yf) = fold_data(x, y, &fit_idx);
            let (xt, yt) = fold_data(x, y, &test_idx);
            let members = &groups[g];
            if staged {
                let mut sizes: Vec<usize> = members.iter().map(|&i| stage_of(i)).collect();
                sizes.sort_unstable();
                sizes.dedup();
                let largest = *sizes.last().expect("non-empty group");
                let mut params = candidates[members[0]].clone();
                for (n, v) in params.iter_mut() {
                    if n == STAGE_AXIS {
                        *v = ParamValue::Int(largest as i64);
                    }
                }
                let model = fit(&spec_for(params), &xf, &yf)?;
                let preds = model.predict_staged(&xt, &sizes)?;
                members
                    .iter()
                    .map(|&i| {
                        let s = sizes.binary_search(&stage_of(i)).expect("size listed");
                        accuracy(&yt, &preds[s])
                    })
                    .collect()
            } else {
                let model = fit(&spec_for(candidates[members[0]].clone()), &xf, &yf)?;
                Ok(vec![accuracy(&yt, &model.predict(&xt)?)?])
            }
        })
        .collect::<Result<_>>()?;

    let mut scores = vec![vec![0.0; folds.k]; candidates.len()];
    for (&(g, f), accs) in jobs.iter().zip(&results) {
        for (&i, &a) in groups[g].iter().zip(accs) {
            scores[i][f] = a;
        }
    }
    let all: Vec<CandidateScore> = candidates
        .into_iter()
        .zip(scores)
        .map(|(p, s)| CandidateScore::new(p, s))
        .collect();
    let best_index = select_best(&all).ok_or_else(|| Error::invalid("empty grid"))?;
    Ok(GridSearchResult {
        best: spec_for(all[best_index].params.clone()),
        best_index,
        all,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(scores: &[f64]) -> CandidateScore {
        CandidateScore::new(Vec::new(), scores.to_vec())
    }

    #[test]
    fn max_of_min_beats_max_of_mean() {
        let a = cand(&[100.0, 100.0, 40.0]);
        let b = cand(&[75.0, 75.0, 75.0]);
        assert!(a.mean() > b.mean());
        assert_eq!(select_best(&[a, b]), Some(1));
    }

    #[test]
    fn ties_go_to_the_earliest_candidate() {
        let c = [cand(&[50.0, 60.0]), cand(&[70.0, 50.0]), cand(&[40.0, 90.0])];
        assert_eq!(select_best(&c), Some(0));
        assert_eq!(select_best(&c[..1]), Some(0));
        assert_eq!(select_best(&[]), None);
    }
}
