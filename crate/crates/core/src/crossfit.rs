//! K-fold cross-fitting plans.
//!
//! Fold membership is a function of unit identity (a hash of the row's
//! values), not row position, so permuting the rows of a dataset permutes
//! the plan with them.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seed;

const STREAM_FOLDS: u64 = 0xF01D;

/// Row indices sorted by unit identity.
pub fn canonical_order(dataset: &Dataset) -> Vec<usize> {
    let w = dataset.treatment_f64();
    canonical_rows(dataset.covariates(), &[&w, dataset.outcome()])
}

/// Row indices of `x` sorted by a hash of each row's values (plus the
/// matching entries of `extra`), with a full lexicographic tiebreak.
pub fn canonical_rows(x: &Matrix, extra: &[&[f64]]) -> Vec<usize> {
    let values = |i: usize| x.row(i).iter().copied().chain(extra.iter().map(move |c| c[i]));
    let keys: Vec<u64> = (0..x.nrows()).map(|i| seed::row_key(values(i))).collect();
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    order.sort_by(|&a, &b| {
        keys[a].cmp(&keys[b]).then_with(|| {
            values(a)
                .zip(values(b))
                .map(|(p, q)| p.total_cmp(&q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossFitPlan {
    pub k: usize,
    /// Fold of each row, in `0..k`.
    pub folds: Vec<usize>,
    pub seed: u64,
}

impl CrossFitPlan {
    /// Treatment-stratified assignment: every fold receives units from both arms.
    pub fn new(dataset: &Dataset, k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 folds, got {k}")));
        }
        let order = canonical_order(dataset);
        let mut folds = vec![0usize; dataset.len()];
        for arm in [0u8, 1] {
            let mut members: Vec<usize> = order
                .iter()
                .copied()
                .filter(|&i| dataset.treatment()[i] == arm)
                .collect();
            if members.len() < k {
                return Err(Error::SingleClassFold {
                    fold: members.len(),
                });
            }
            members.shuffle(&mut seed::rng(seed, &[STREAM_FOLDS, u64::from(arm)]));
            for (pos, i) in members.into_iter().enumerate() {
                folds[i] = pos % k;
            }
        }
        Ok(CrossFitPlan { k, folds, seed })
    }

    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    /// (training rows, held-out rows) for fold `f`.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.folds.len()).partition(|&i| self.folds[i] != f)
    }

    /// Checks every fold holds both treatment arms.
    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        if self.folds.len() != dataset.len() {
            return Err(Error::DimensionMismatch(format!(
                "plan covers {} rows, dataset has {}",
                self.folds.len(),
                dataset.len()
            )));
        }
        for f in 0..self.k {
            let mut arms = [false; 2];
            for (i, &g) in self.folds.iter().enumerate() {
                if g == f {
                    arms[dataset.treatment()[i] as usize] = true;
                }
            }
            if !(arms[0] && arms[1]) {
                return Err(Error::SingleClassFold { fold: f });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{generate, ScenarioKind, ScenarioSpec};

    #[test]
    fn folds_are_stratified_and_balanced() {
        let (d, _) = generate(&ScenarioSpec::new(ScenarioKind::Linear, 103, 4)).unwrap();
        let plan = CrossFitPlan::new(&d, 5, 9).unwrap();
        plan.validate(&d).unwrap();
        for f in 0..5 {
            let size = plan.folds.iter().filter(|&&g| g == f).count();
            assert!((19..=22).contains(&size), "fold {f} has {size}");
        }
    }

    #[test]
    fn too_few_treated_is_an_error() {
        let x = crate::linalg::Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]])
            .unwrap();
        let d = Dataset::new(vec!["x".into()], x, vec![0, 0, 0, 1], vec![0.0; 4]).unwrap();
        let err = CrossFitPlan::new(&d, 2, 0).unwrap_err();
        assert!(err.to_string().contains("fewer folds"), "{err}");
    }

    #[test]
    fn plan_follows_units_under_permutation() {
        let (d, _) = generate(&ScenarioSpec::new(ScenarioKind::Constant, 60, 1)).unwrap();
        let perm: Vec<usize> = (0..60).rev().collect();
        let p = d.subset(&perm);
        let a = CrossFitPlan::new(&d, 3, 2).unwrap();
        let b = CrossFitPlan::new(&p, 3, 2).unwrap();
        for (new, &old) in perm.iter().enumerate() {
            assert_eq!(b.folds[new], a.folds[old]);
        }
    }
}
