//! Honest causal forests and the regression forests used for nuisances.
//!
//! Growth pipeline for the causal forest:
//!
//! 1. cross-fitted `m̂(x) = E[Y|X]` and `ê(x) = E[W|X]` from regression
//!    forests (ê clipped to `[0.05, 0.95]`);
//! 2. residuals `Ỹ = Y − m̂`, `W̃ = W − ê`;
//! 3. trees are assigned round-robin to `G` groups; groups come in pairs
//!    that draw a random half of the units and its complement;
//! 4. each tree subsamples its group's half, splits the subsample into a
//!    split part and an estimation part, and grows on the split part with
//!    the heterogeneity criterion (see [`crate::tree`]).
//!
//! The spread of group means around the forest mean estimates the sampling
//! variance of a prediction, after removing the Monte Carlo noise that comes
//! from each group having finitely many trees.
//!
//! All randomness is keyed by tree index and unit identity, so results do not
//! depend on thread count or on the order of the training rows.

use std::path::Path;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossfit::{canonical_order, canonical_rows, CrossFitPlan};
use crate::data::{write_atomic, Dataset};
use crate::error::{Error, Result};
use crate::estimates::CateEstimates;
use crate::linalg::Matrix;
use crate::seed;
use crate::tree::{grow_tree, Objective, Tree, TreeParams, UnitStats};

pub const PROPENSITY_CLIP: (f64, f64) = (0.05, 0.95);
pub const IMPORTANCE_DECAY: f64 = 0.79;
pub const IMPORTANCE_MAX_DEPTH: usize = 4;
pub const FORMAT_VERSION: u32 = 1;

const STREAM_TREE: u64 = 1;
const STREAM_HALF: u64 = 2;
const STREAM_NUISANCE: u64 = 3;
const STREAM_REG_TREE: u64 = 4;

fn clip_propensity(e: f64) -> f64 {
    e.clamp(PROPENSITY_CLIP.0, PROPENSITY_CLIP.1)
}

fn check_fraction(name: &str, v: f64, allow_one: bool) -> Result<()> {
    let ok = v > 0.0 && (v < 1.0 || (allow_one && v == 1.0));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be in (0, 1{}, got {v}",
            if allow_one { "]" } else { ")" }
        )))
    }
}

/// Splits a subsample into (split part, estimation part).
fn honest_halves(mut pick: Vec<u32>, honesty_fraction: f64) -> (Vec<u32>, Vec<u32>) {
    let s = pick.len();
    debug_assert!(s >= 2);
    let h = ((honesty_fraction * s as f64).round() as usize).clamp(1, s - 1);
    let est = pick.split_off(h);
    (pick, est)
}

// ---------------------------------------------------------------------------
// Regression forest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressionForestParams {
    pub num_trees: usize,
    pub subsample_fraction: f64,
    pub honesty_fraction: f64,
    pub min_leaf_size: u32,
    /// Features tried per split; `None` tries all of them.
    pub mtry: Option<usize>,
    pub seed: u64,
}

impl Default for RegressionForestParams {
    fn default() -> Self {
        RegressionForestParams {
            num_trees: 200,
            subsample_fraction: 0.5,
            honesty_fraction: 0.5,
            min_leaf_size: 5,
            mtry: None,
            seed: 0,
        }
    }
}

impl RegressionForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_trees == 0 {
            return Err(Error::InvalidParameter("num_trees must be positive".into()));
        }
        check_fraction("subsample_fraction", self.subsample_fraction, true)?;
        check_fraction("honesty_fraction", self.honesty_fraction, false)?;
        if self.min_leaf_size == 0 {
            return Err(Error::InvalidParameter("min_leaf_size must be positive".into()));
        }
        if self.mtry == Some(0) {
            return Err(Error::InvalidParameter("mtry must be positive".into()));
        }
        Ok(())
    }
}

/// Honest CART forest with a weighted squared-error criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionForest {
    pub num_features: usize,
    pub trees: Vec<Tree>,
}

impl RegressionForest {
    pub fn fit(
        x: &Matrix,
        y: &[f64],
        weights: Option<&[f64]>,
        params: &RegressionForestParams,
    ) -> Result<Self> {
        params.validate()?;
        let n = x.nrows();
        if y.len() != n || weights.is_some_and(|w| w.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "regression forest: {n} rows but {} targets",
                y.len()
            )));
        }
        if n < 2 {
            return Err(Error::InvalidData("regression forest needs at least 2 rows".into()));
        }
        if let Some(w) = weights {
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
                return Err(Error::InvalidData("weights must be finite, >= 0, not all zero".into()));
            }
        }
        let p = x.ncols();
        let mtry = params.mtry.unwrap_or(p).min(p);
        let ones;
        let w = match weights {
            Some(w) => w,
            None => {
                ones = vec![1.0; n];
                &ones
            }
        };
        let order = canonical_rows(x, &[y, w]);
        let xc = x.select_rows(&order);
        let stats: Vec<UnitStats> = order
            .iter()
            .map(|&i| UnitStats {
                a: w[i] * y[i],
                b: w[i],
                treated: false,
            })
            .collect();
        let tree_params = TreeParams {
            objective: Objective::Regression,
            mtry,
            min_leaf_treated: params.min_leaf_size,
            min_leaf_control: 0,
            max_depth: None,
        };
        let s = ((params.subsample_fraction * n as f64).round() as usize).clamp(2, n);
        let trees = (0..params.num_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(params.seed, &[STREAM_REG_TREE, t as u64]);
                let pick: Vec<u32> = sample(&mut rng, n, s).into_iter().map(|i| i as u32).collect();
                let (split, est) = honest_halves(pick, params.honesty_fraction);
                let mut tree = grow_tree(&xc, &stats, split, est, &tree_params, &mut rng);
                remap(&mut tree, &order);
                tree
            })
            .collect();
        Ok(RegressionForest {
            num_features: p,
            trees,
        })
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if self.trees.is_empty() {
            return Err(Error::Unfitted);
        }
        if x.ncols() != self.num_features {
            return Err(Error::DimensionMismatch(format!(
                "forest trained on {} features, got {}",
                self.num_features,
                x.ncols()
            )));
        }
        Ok((0..x.nrows())
            .into_par_iter()
            .map(|i| self.predict_row(x.row(i)))
            .collect())
    }
}

/// Rewrites canonical-position subsample indices as training-row indices.
fn remap(tree: &mut Tree, order: &[usize]) {
    for v in tree
        .split_subsample
        .iter_mut()
        .chain(tree.estimation_subsample.iter_mut())
    {
        *v = order[*v as usize] as u32;
    }
}

// ---------------------------------------------------------------------------
// Causal forest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub num_trees: usize,
    pub subsample_fraction: f64,
    pub honesty_fraction: f64,
    pub min_leaf_treated: u32,
    pub min_leaf_control: u32,
    /// Features tried per split; `None` means min(⌈√p + 20⌉, p).
    pub mtry: Option<usize>,
    pub num_folds_nuisance: usize,
    /// Number of tree groups used for the variance estimate.
    pub num_groups: usize,
    /// Trees per nuisance regression forest.
    pub nuisance_trees: usize,
    pub nuisance_min_leaf: u32,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            num_trees: 2000,
            subsample_fraction: 0.5,
            honesty_fraction: 0.5,
            min_leaf_treated: 5,
            min_leaf_control: 5,
            mtry: None,
            num_folds_nuisance: 5,
            num_groups: 50,
            nuisance_trees: 200,
            nuisance_min_leaf: 5,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn with_trees(mut self, num_trees: usize) -> Self {
        self.num_trees = num_trees;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_trees == 0 {
            return Err(Error::InvalidParameter("num_trees must be positive".into()));
        }
        check_fraction("subsample_fraction", self.subsample_fraction, true)?;
        check_fraction("honesty_fraction", self.honesty_fraction, false)?;
        if self.min_leaf_treated == 0 || self.min_leaf_control == 0 {
            return Err(Error::InvalidParameter("leaf minima must be positive".into()));
        }
        if self.mtry == Some(0) {
            return Err(Error::InvalidParameter("mtry must be positive".into()));
        }
        if self.num_folds_nuisance < 2 {
            return Err(Error::InvalidParameter("num_folds_nuisance must be >= 2".into()));
        }
        if self.num_groups == 0 {
            return Err(Error::InvalidParameter("num_groups must be positive".into()));
        }
        if self.nuisance_trees == 0 || self.nuisance_min_leaf == 0 {
            return Err(Error::InvalidParameter("nuisance forest settings must be positive".into()));
        }
        Ok(())
    }

    pub fn resolved_mtry(&self, p: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| (((p as f64).sqrt() + 20.0).ceil() as usize).min(p))
    }

    fn nuisance_params(&self, seed: u64) -> RegressionForestParams {
        RegressionForestParams {
            num_trees: self.nuisance_trees,
            min_leaf_size: self.nuisance_min_leaf,
            seed,
            ..RegressionForestParams::default()
        }
    }
}

/// Cross-fitted outcome and propensity predictions. `e_hat` is not yet
/// clipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nuisance {
    pub m_hat: Vec<f64>,
    pub e_hat: Vec<f64>,
}

/// K-fold cross-fitted `m̂` and `ê`: each unit's values come from forests
/// trained without its fold.
pub fn fit_nuisance(dataset: &Dataset, params: &ForestParams) -> Result<Nuisance> {
    params.validate()?;
    let k = params.num_folds_nuisance;
    let n = dataset.len();
    if n < 4 * k {
        return Err(Error::InvalidData(format!(
            "cross-fitting with {k} folds needs at least {} units, got {n}",
            4 * k
        )));
    }
    let plan = CrossFitPlan::new(dataset, k, seed::derive(params.seed, &[STREAM_NUISANCE]))?;
    plan.validate(dataset)?;
    let w = dataset.treatment_f64();
    let x = dataset.covariates();
    let per_fold = (0..k)
        .into_par_iter()
        .map(|f| -> Result<(Vec<usize>, Vec<f64>, Vec<f64>)> {
            let (train, held) = plan.split(f);
            let xt = x.select_rows(&train);
            let yt: Vec<f64> = train.iter().map(|&i| dataset.outcome()[i]).collect();
            let wt: Vec<f64> = train.iter().map(|&i| w[i]).collect();
            if wt.iter().all(|&v| v == wt[0]) {
                return Err(Error::SingleClassFold { fold: f });
            }
            let base = seed::derive(params.seed, &[STREAM_NUISANCE, f as u64]);
            let m = RegressionForest::fit(&xt, &yt, None, &params.nuisance_params(base ^ 1))?;
            let e = RegressionForest::fit(&xt, &wt, None, &params.nuisance_params(base ^ 2))?;
            let xh = x.select_rows(&held);
            Ok((held, m.predict(&xh)?, e.predict(&xh)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut m_hat = vec![0.0; n];
    let mut e_hat = vec![0.0; n];
    for (held, m, e) in per_fold {
        for (j, &i) in held.iter().enumerate() {
            m_hat[i] = m[j];
            e_hat[i] = e[j];
        }
    }
    Ok(Nuisance { m_hat, e_hat })
}

/// A fitted honest causal forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub params: ForestParams,
    pub m_hat: Vec<f64>,
    /// Clipped propensities used for residualization.
    pub e_hat: Vec<f64>,
    /// Propensities before clipping, kept for overlap diagnostics.
    #[serde(default)]
    pub e_hat_unclipped: Vec<f64>,
    /// Effective number of variance groups; tree `t` belongs to group `t % num_groups`.
    pub num_groups: usize,
    pub trees: Vec<Tree>,
}

/// Grows a causal forest, fitting nuisances by cross-fitting first.
pub fn grow(dataset: &Dataset, params: &ForestParams) -> Result<ForestModel> {
    check_growable(dataset, params)?;
    let nuisance = fit_nuisance(dataset, params)?;
    grow_with_nuisance(dataset, params, nuisance)
}

fn check_growable(dataset: &Dataset, params: &ForestParams) -> Result<()> {
    params.validate()?;
    let n = dataset.len();
    if n < 50 {
        return Err(Error::InvalidData(format!("causal forest needs n >= 50, got {n}")));
    }
    let treated = dataset.num_treated();
    if treated == 0 || treated == n {
        return Err(Error::InvalidData("both treatment arms must be nonempty".into()));
    }
    let p = dataset.num_features();
    let mtry = params.resolved_mtry(p);
    if mtry == 0 || mtry > p {
        return Err(Error::InvalidParameter(format!("mtry {mtry} not in 1..={p}")));
    }
    Ok(())
}

/// Grows a causal forest on supplied nuisance estimates.
pub fn grow_with_nuisance(
    dataset: &Dataset,
    params: &ForestParams,
    nuisance: Nuisance,
) -> Result<ForestModel> {
    check_growable(dataset, params)?;
    let n = dataset.len();
    if nuisance.m_hat.len() != n || nuisance.e_hat.len() != n {
        return Err(Error::DimensionMismatch("nuisance vectors must have length n".into()));
    }
    if nuisance.e_hat.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(Error::InvalidData("e_hat must lie in [0, 1]".into()));
    }
    let e_hat: Vec<f64> = nuisance.e_hat.iter().map(|&e| clip_propensity(e)).collect();
    let m_hat = nuisance.m_hat;

    let order = canonical_order(dataset);
    let xc = dataset.covariates().select_rows(&order);
    let stats: Vec<UnitStats> = order
        .iter()
        .map(|&i| {
            let w = dataset.treatment()[i];
            let wr = f64::from(w) - e_hat[i];
            let yr = dataset.outcome()[i] - m_hat[i];
            UnitStats {
                a: wr * yr,
                b: wr * wr,
                treated: w == 1,
            }
        })
        .collect();

    let groups = params.num_groups.min(params.num_trees / 2).max(1);
    let halves: Vec<Vec<u32>> = if groups == 1 {
        vec![(0..n as u32).collect()]
    } else {
        (0..groups.div_ceil(2))
            .flat_map(|q| {
                let mut perm: Vec<u32> = (0..n as u32).collect();
                perm.shuffle(&mut seed::rng(params.seed, &[STREAM_HALF, q as u64]));
                let rest = perm.split_off(n / 2);
                [perm, rest]
            })
            .take(groups)
            .collect()
    };

    let tree_params = TreeParams {
        objective: Objective::Causal,
        mtry: params.resolved_mtry(dataset.num_features()),
        min_leaf_treated: params.min_leaf_treated,
        min_leaf_control: params.min_leaf_control,
        max_depth: None,
    };
    let s_target = (params.subsample_fraction * n as f64).round() as usize;
    let trees = (0..params.num_trees)
        .into_par_iter()
        .map(|t| {
            let pool = &halves[t % groups];
            let s = s_target.clamp(2.min(pool.len()), pool.len());
            let mut rng = seed::rng(params.seed, &[STREAM_TREE, t as u64]);
            let pick: Vec<u32> = sample(&mut rng, pool.len(), s)
                .into_iter()
                .map(|k| pool[k])
                .collect();
            let (split, est) = honest_halves(pick, params.honesty_fraction);
            let mut tree = grow_tree(&xc, &stats, split, est, &tree_params, &mut rng);
            remap(&mut tree, &order);
            tree
        })
        .collect();

    Ok(ForestModel {
        format_version: FORMAT_VERSION,
        feature_names: dataset.names().to_vec(),
        params: *params,
        m_hat,
        e_hat,
        e_hat_unclipped: nuisance.e_hat.clone(),
        num_groups: groups,
        trees,
    })
}

/// Posterior mean of a nonnegative variance given a noisy unbiased estimate.
fn debias_variance(between: f64, group_noise: f64, good_groups: usize) -> f64 {
    let initial = between - group_noise;
    let initial_se = between.max(group_noise) * (2.0 / good_groups as f64).sqrt();
    if initial_se <= 0.0 {
        return initial.max(0.0);
    }
    let ratio = initial / initial_se;
    let density = (-0.5 * ratio * ratio).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mass = 0.5 * statrs::function::erf::erfc(-ratio / std::f64::consts::SQRT_2);
    if mass <= 0.0 {
        return 0.0;
    }
    (initial + initial_se * density / mass).max(0.0)
}

/// Mean and (when at least two groups hold two or more trees) the standard
/// error from per-group tree predictions.
fn aggregate(by_group: &[Vec<f64>]) -> (f64, Option<f64>) {
    let total: usize = by_group.iter().map(Vec::len).sum();
    if total == 0 {
        return (f64::NAN, None);
    }
    let mean = by_group.iter().flatten().sum::<f64>() / total as f64;
    let good: Vec<&Vec<f64>> = by_group.iter().filter(|g| g.len() >= 2).collect();
    if good.len() < 2 {
        return (mean, None);
    }
    let means: Vec<f64> = good
        .iter()
        .map(|g| g.iter().sum::<f64>() / g.len() as f64)
        .collect();
    let center = means.iter().sum::<f64>() / means.len() as f64;
    let between = means.iter().map(|m| (m - center).powi(2)).sum::<f64>() / means.len() as f64;
    let noise = good
        .iter()
        .zip(&means)
        .map(|(g, m)| {
            let l = g.len() as f64;
            g.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (l * (l - 1.0))
        })
        .sum::<f64>()
        / good.len() as f64;
    (mean, Some(debias_variance(between, noise, good.len()).sqrt()))
}

impl ForestModel {
    fn check_fitted(&self) -> Result<()> {
        if self.trees.is_empty() {
            Err(Error::Unfitted)
        } else {
            Ok(())
        }
    }

    fn collect(&self, row: &[f64], include: impl Fn(usize) -> bool) -> (f64, Option<f64>) {
        let mut by_group = vec![Vec::new(); self.num_groups.max(1)];
        for (t, tree) in self.trees.iter().enumerate() {
            if include(t) {
                by_group[t % self.num_groups.max(1)].push(tree.predict(row));
            }
        }
        aggregate(&by_group)
    }

    fn finish(&self, results: Vec<(f64, Option<f64>)>) -> CateEstimates {
        let has_se = self.num_groups >= 2;
        let tau_hat = results.iter().map(|r| r.0).collect();
        let se = has_se.then(|| results.iter().map(|r| r.1.unwrap_or(f64::NAN)).collect());
        CateEstimates {
            method: "causal_forest".to_string(),
            tau_hat,
            se,
        }
    }

    /// CATE estimates for new rows (columns in training-feature order).
    pub fn predict(&self, rows: &Matrix) -> Result<CateEstimates> {
        self.check_fitted()?;
        if rows.ncols() != self.feature_names.len() {
            return Err(Error::DimensionMismatch(format!(
                "forest trained on {} features, got {}",
                self.feature_names.len(),
                rows.ncols()
            )));
        }
        let results = (0..rows.nrows())
            .into_par_iter()
            .map(|i| self.collect(rows.row(i), |_| true))
            .collect();
        Ok(self.finish(results))
    }

    /// Out-of-bag estimates for the training units: each unit is predicted
    /// only by trees whose subsample excluded it.
    pub fn predict_oob(&self, training: &Dataset) -> Result<CateEstimates> {
        self.check_fitted()?;
        let n = training.len();
        if n != self.m_hat.len() || training.num_features() != self.feature_names.len() {
            return Err(Error::DimensionMismatch(
                "out-of-bag prediction needs the training dataset".into(),
            ));
        }
        let in_bag: Vec<Vec<bool>> = self
            .trees
            .par_iter()
            .map(|t| {
                let mut m = vec![false; n];
                for &i in t.split_subsample.iter().chain(&t.estimation_subsample) {
                    m[i as usize] = true;
                }
                m
            })
            .collect();
        let x = training.covariates();
        let results = (0..n)
            .into_par_iter()
            .map(|i| self.collect(x.row(i), |t| !in_bag[t][i]))
            .collect();
        Ok(self.finish(results))
    }

    /// Depth-weighted split frequencies, normalized to sum to one.
    ///
    /// For each depth `d < IMPORTANCE_MAX_DEPTH`, the share of depth-`d`
    /// splits that use each feature is weighted by `IMPORTANCE_DECAY^d`.
    /// A forest without splits gets the uniform vector.
    pub fn variable_importance(&self) -> Vec<(String, f64)> {
        let p = self.feature_names.len();
        let weights =
            depth_weighted_importance(&self.trees, p, IMPORTANCE_DECAY, IMPORTANCE_MAX_DEPTH);
        self.feature_names.iter().cloned().zip(weights).collect()
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        write_atomic(path, &serde_json::to_vec(self)?)
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let model: ForestModel = serde_json::from_slice(&bytes)?;
        if model.format_version != FORMAT_VERSION {
            return Err(Error::InvalidData(format!(
                "unsupported forest format version {}",
                model.format_version
            )));
        }
        Ok(model)
    }
}

pub fn depth_weighted_importance(
    trees: &[Tree],
    p: usize,
    decay: f64,
    max_depth: usize,
) -> Vec<f64> {
    let mut counts = vec![vec![0usize; p]; max_depth];
    for tree in trees {
        for (d, f) in tree.splits_with_depth() {
            if d < max_depth {
                counts[d][f] += 1;
            }
        }
    }
    let mut score = vec![0.0; p];
    for (d, row) in counts.iter().enumerate() {
        let total: usize = row.iter().sum();
        if total == 0 {
            continue;
        }
        let w = decay.powi(d as i32);
        for (s, &c) in score.iter_mut().zip(row) {
            *s += w * c as f64 / total as f64;
        }
    }
    let sum: f64 = score.iter().sum();
    if sum <= 0.0 {
        return vec![1.0 / p as f64; p];
    }
    score.iter().map(|s| s / sum).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn debias_is_nonnegative_and_close_when_clear() {
        assert!(debias_variance(0.0, 0.1, 50) >= 0.0);
        let v = debias_variance(1.0, 0.01, 50);
        assert!((v - 0.99).abs() < 1e-6, "{v}");
    }

    #[test]
    fn identical_single_leaf_trees() {
        let model = ForestModel {
            format_version: FORMAT_VERSION,
            feature_names: vec!["a".into(), "b".into()],
            params: ForestParams::default(),
            m_hat: vec![],
            e_hat: vec![],
            e_hat_unclipped: vec![],
            num_groups: 5,
            trees: vec![Tree::constant(1.75); 20],
        };
        let rows = Matrix::from_rows(&[vec![0.0, 1.0], vec![-4.0, 2.0]]).unwrap();
        let est = model.predict(&rows).unwrap();
        assert_eq!(est.tau_hat, vec![1.75, 1.75]);
        assert_eq!(est.se, Some(vec![0.0, 0.0]));
        let imp = model.variable_importance();
        assert_eq!(imp[0].1, 0.5);
    }

    #[test]
    fn unfitted_model_errors() {
        let model = ForestModel {
            format_version: FORMAT_VERSION,
            feature_names: vec!["a".into()],
            params: ForestParams::default(),
            m_hat: vec![],
            e_hat: vec![],
            e_hat_unclipped: vec![],
            num_groups: 1,
            trees: vec![],
        };
        assert!(matches!(
            model.predict(&Matrix::zeros(1, 1)),
            Err(Error::Unfitted)
        ));
    }

    #[test]
    fn params_validation() {
        assert!(ForestParams::default().validate().is_ok());
        let bad = ForestParams {
            honesty_fraction: 1.0,
            ..ForestParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = ForestParams {
            num_folds_nuisance: 1,
            ..ForestParams::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(ForestParams::default().resolved_mtry(5), 5);
        assert_eq!(ForestParams::default().resolved_mtry(900), 50);
    }

    #[test]
    fn honest_halves_sizes() {
        let (a, b) = honest_halves((0..10).collect(), 0.5);
        assert_eq!((a.len(), b.len()), (5, 5));
        let (a, b) = honest_halves((0..10).collect(), 0.99);
        assert_eq!((a.len(), b.len()), (9, 1));
    }
}
