//! Honest binary trees shared by the causal and regression forests.
//!
//! Each unit contributes a pair `(a, b)` of sufficient statistics and a node's
//! value is `Σa / Σb`:
//!
//! * causal: `a = W̃·Ỹ`, `b = W̃²` so the value is the residual-on-residual
//!   effect estimate;
//! * regression: `a = ω·y`, `b = ω` so the value is the weighted mean.
//!
//! Both split criteria have the same form, `s_L·s_R/(s_L+s_R)·(v_L − v_R)²`,
//! where `s` is the unit count (causal) or the weight total (regression).
//! Splits are chosen on the split subsample; a split is admissible only if
//! both children meet the leaf minima on the split *and* the estimation
//! subsample. Leaf values are computed from estimation units only.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UnitStats {
    pub a: f64,
    pub b: f64,
    pub treated: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Acc {
    n: u32,
    n_treated: u32,
    a: f64,
    b: f64,
}

impl Acc {
    #[inline]
    fn add(&mut self, u: &UnitStats) {
        self.n += 1;
        self.n_treated += u32::from(u.treated);
        self.a += u.a;
        self.b += u.b;
    }

    #[inline]
    fn minus(&self, other: &Acc) -> Acc {
        Acc {
            n: self.n - other.n,
            n_treated: self.n_treated - other.n_treated,
            a: self.a - other.a,
            b: self.b - other.b,
        }
    }

    fn value(&self) -> Option<f64> {
        (self.b > 0.0).then(|| self.a / self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    /// Maximize effect heterogeneity between children.
    Causal,
    /// Maximize reduction in weighted squared error.
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub objective: Objective,
    pub mtry: usize,
    /// Causal: minimum treated units per leaf. Regression: minimum units per leaf.
    pub min_leaf_treated: u32,
    /// Causal only: minimum control units per leaf.
    pub min_leaf_control: u32,
    pub max_depth: Option<usize>,
}

impl TreeParams {
    fn admissible(&self, acc: &Acc) -> bool {
        match self.objective {
            Objective::Causal => {
                acc.n_treated >= self.min_leaf_treated
                    && acc.n - acc.n_treated >= self.min_leaf_control
            }
            Objective::Regression => acc.n >= self.min_leaf_treated && acc.b > 0.0,
        }
    }

    fn size(&self, acc: &Acc) -> f64 {
        match self.objective {
            Objective::Causal => f64::from(acc.n),
            Objective::Regression => acc.b,
        }
    }

    fn score(&self, left: &Acc, right: &Acc) -> Option<f64> {
        let (vl, vr) = (left.value()?, right.value()?);
        let (sl, sr) = (self.size(left), self.size(right));
        let d = vl - vr;
        Some(sl * sr / (sl + sr) * d * d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        value: f64,
        n_treated: u32,
        n_control: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
    /// Training-row indices used to choose splits.
    pub split_subsample: Vec<u32>,
    /// Training-row indices used to compute leaf values.
    pub estimation_subsample: Vec<u32>,
}

impl Tree {
    /// A single-leaf tree.
    pub fn constant(value: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf {
                value,
                n_treated: 0,
                n_control: 0,
            }],
            split_subsample: Vec::new(),
            estimation_subsample: Vec::new(),
        }
    }

    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut k = 0usize;
        loop {
            match self.nodes[k] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    k = if row[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
                Node::Leaf { .. } => return k,
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            Node::Leaf { value, .. } => value,
            Node::Split { .. } => unreachable!(),
        }
    }

    /// (depth, feature) for every split node.
    pub fn splits_with_depth(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, 0usize)];
        while let Some((k, d)) = stack.pop() {
            if let Node::Split {
                feature,
                left,
                right,
                ..
            } = self.nodes[k]
            {
                out.push((d, feature as usize));
                stack.push((left as usize, d + 1));
                stack.push((right as usize, d + 1));
            }
        }
        out
    }

    /// Depth of the deepest leaf (0 for a bare root).
    pub fn depth(&self) -> usize {
        self.splits_with_depth()
            .iter()
            .map(|(d, _)| d + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. }))
    }
}

struct Candidate {
    score: f64,
    feature: usize,
    threshold: f64,
}

struct Grower<'a, R> {
    x: &'a Matrix,
    stats: &'a [UnitStats],
    params: &'a TreeParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

impl<R: Rng> Grower<'_, R> {
    fn accumulate(&self, idx: &[u32]) -> Acc {
        let mut acc = Acc::default();
        for &i in idx {
            acc.add(&self.stats[i as usize]);
        }
        acc
    }

    fn leaf(&self, est: &Acc, fallback: &Acc) -> Node {
        Node::Leaf {
            value: est.value().or_else(|| fallback.value()).unwrap_or(0.0),
            n_treated: est.n_treated,
            n_control: est.n - est.n_treated,
        }
    }

    fn best_split(&mut self, split: &[u32], est: &[u32], split_total: &Acc) -> Option<Candidate> {
        let p = self.x.ncols();
        let mut features = sample(self.rng, p, self.params.mtry.min(p)).into_vec();
        features.sort_unstable();

        let est_total = self.accumulate(est);
        let mut best: Option<Candidate> = None;
        let mut sorted_split: Vec<(f64, u32)> = Vec::with_capacity(split.len());
        let mut sorted_est: Vec<(f64, u32)> = Vec::with_capacity(est.len());
        for &j in &features {
            sorted_split.clear();
            sorted_split.extend(split.iter().map(|&i| (self.x.get(i as usize, j), i)));
            sorted_split.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            sorted_est.clear();
            sorted_est.extend(est.iter().map(|&i| (self.x.get(i as usize, j), i)));
            sorted_est.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

            let mut left = Acc::default();
            let mut left_est = Acc::default();
            let mut e = 0usize;
            for k in 0..sorted_split.len().saturating_sub(1) {
                left.add(&self.stats[sorted_split[k].1 as usize]);
                let (lo, hi) = (sorted_split[k].0, sorted_split[k + 1].0);
                if lo == hi {
                    continue;
                }
                let mut threshold = 0.5 * (lo + hi);
                if threshold >= hi {
                    threshold = lo;
                }
                while e < sorted_est.len() && sorted_est[e].0 <= threshold {
                    left_est.add(&self.stats[sorted_est[e].1 as usize]);
                    e += 1;
                }
                let right = split_total.minus(&left);
                if !self.params.admissible(&left) || !self.params.admissible(&right) {
                    continue;
                }
                let right_est = est_total.minus(&left_est);
                if !self.params.admissible(&left_est) || !self.params.admissible(&right_est) {
                    continue;
                }
                let Some(score) = self.params.score(&left, &right) else {
                    continue;
                };
                if best.as_ref().is_none_or(|b| score > b.score) {
                    best = Some(Candidate {
                        score,
                        feature: j,
                        threshold,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, split: Vec<u32>, est: Vec<u32>, depth: usize) -> u32 {
        let id = self.nodes.len() as u32;
        let split_total = self.accumulate(&split);
        let est_total = self.accumulate(&est);
        self.nodes.push(self.leaf(&est_total, &split_total));

        if self.params.max_depth.is_some_and(|m| depth >= m) {
            return id;
        }
        let Some(c) = self.best_split(&split, &est, &split_total) else {
            return id;
        };
        let part = |idx: Vec<u32>| -> (Vec<u32>, Vec<u32>) {
            idx.into_iter()
                .partition(|&i| self.x.get(i as usize, c.feature) <= c.threshold)
        };
        let (sl, sr) = part(split);
        let (el, er) = part(est);
        let left = self.grow(sl, el, depth + 1);
        let right = self.grow(sr, er, depth + 1);
        self.nodes[id as usize] = Node::Split {
            feature: c.feature as u32,
            threshold: c.threshold,
            left,
            right,
        };
        id
    }
}

/// Grows one honest tree on the given split/estimation index sets.
pub fn grow_tree<R: Rng>(
    x: &Matrix,
    stats: &[UnitStats],
    split_subsample: Vec<u32>,
    estimation_subsample: Vec<u32>,
    params: &TreeParams,
    rng: &mut R,
) -> Tree {
    let mut g = Grower {
        x,
        stats,
        params,
        rng,
        nodes: Vec::new(),
    };
    g.grow(split_subsample.clone(), estimation_subsample.clone(), 0);
    Tree {
        nodes: g.nodes,
        split_subsample,
        estimation_subsample,
    }
}
