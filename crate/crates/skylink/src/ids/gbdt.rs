//! Gradient-boosted regression trees on logistic loss with second-order
//! (gradient + hessian) exact greedy split search.

use super::{sigmoid, FeatureMatrix, IdsError, FEATURE_WIDTH};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbdtParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub min_hessian: f64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams { rounds: 100, max_depth: 4, learning_rate: 0.1, lambda: 1.0, min_hessian: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Tree {
    Leaf { weight: f64 },
    Split { feature: usize, threshold: f64, left: Box<Tree>, right: Box<Tree> },
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self {
            Tree::Leaf { weight } => *weight,
            Tree::Split { feature, threshold, left, right } => {
                if row[*feature] <= *threshold {
                    left.predict(row)
                } else {
                    right.predict(row)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    /// Training log loss after each round, kept for monotonicity checks.
    pub loss_trace: Vec<f64>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    -g / (h + lambda)
}

fn split_score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

/// Exact greedy search over one feature: sort the node's rows by value, scan
/// prefix gradient/hessian sums, consider boundaries between distinct values.
fn best_split_for_feature(
    feature: usize,
    indices: &[usize],
    fm: &FeatureMatrix,
    grad: &[f64],
    hess: &[f64],
    params: &GbdtParams,
) -> Option<BestSplit> {
    let mut vals: Vec<(f64, f64, f64)> =
        indices.iter().map(|&i| (fm.rows[i][feature], grad[i], hess[i])).collect();
    vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total_g: f64 = vals.iter().map(|v| v.1).sum();
    let total_h: f64 = vals.iter().map(|v| v.2).sum();
    let parent = split_score(total_g, total_h, params.lambda);

    let mut best: Option<BestSplit> = None;
    let (mut gl, mut hl) = (0.0, 0.0);
    for i in 0..vals.len() - 1 {
        gl += vals[i].1;
        hl += vals[i].2;
        if vals[i + 1].0 == vals[i].0 {
            continue;
        }
        let (gr, hr) = (total_g - gl, total_h - hl);
        if hl < params.min_hessian || hr < params.min_hessian {
            continue;
        }
        let gain = 0.5
            * (split_score(gl, hl, params.lambda) + split_score(gr, hr, params.lambda) - parent);
        if gain > 0.0 && best.as_ref().map_or(true, |b| gain > b.gain) {
            best = Some(BestSplit {
                feature,
                threshold: (vals[i].0 + vals[i + 1].0) / 2.0,
                gain,
            });
        }
    }
    best
}

fn find_best_split(
    indices: &[usize],
    fm: &FeatureMatrix,
    grad: &[f64],
    hess: &[f64],
    params: &GbdtParams,
) -> Option<BestSplit> {
    let per_feature = |f: usize| best_split_for_feature(f, indices, fm, grad, hess, params);
    #[cfg(feature = "parallel")]
    let candidates: Vec<Option<BestSplit>> = {
        use rayon::prelude::*;
        (0..FEATURE_WIDTH).into_par_iter().map(per_feature).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let candidates: Vec<Option<BestSplit>> = (0..FEATURE_WIDTH).map(per_feature).collect();
    candidates
        .into_iter()
        .flatten()
        .max_by(|a, b| a.gain.partial_cmp(&b.gain).unwrap())
}

fn build_tree(
    indices: Vec<usize>,
    depth: usize,
    fm: &FeatureMatrix,
    grad: &[f64],
    hess: &[f64],
    params: &GbdtParams,
) -> Tree {
    let g: f64 = indices.iter().map(|&i| grad[i]).sum();
    let h: f64 = indices.iter().map(|&i| hess[i]).sum();
    if depth >= params.max_depth {
        return Tree::Leaf { weight: leaf_weight(g, h, params.lambda) };
    }
    match find_best_split(&indices, fm, grad, hess, params) {
        None => Tree::Leaf { weight: leaf_weight(g, h, params.lambda) },
        Some(split) => {
            let (left, right): (Vec<usize>, Vec<usize>) =
                indices.into_iter().partition(|&i| fm.rows[i][split.feature] <= split.threshold);
            Tree::Split {
                feature: split.feature,
                threshold: split.threshold,
                left: Box::new(build_tree(left, depth + 1, fm, grad, hess, params)),
                right: Box::new(build_tree(right, depth + 1, fm, grad, hess, params)),
            }
        }
    }
}

pub fn train(fm: &FeatureMatrix, params: &GbdtParams) -> Result<GbdtModel, IdsError> {
    let n = fm.rows.len();
    let prevalence =
        fm.labels.iter().filter(|&&l| l == 1).count() as f64 / n as f64;
    let base_score = (prevalence / (1.0 - prevalence)).ln();

    let mut raw = vec![base_score; n];
    let mut trees = Vec::with_capacity(params.rounds);
    let mut loss_trace = Vec::with_capacity(params.rounds + 1);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];

    let log_loss = |raw: &[f64]| -> f64 {
        raw.iter()
            .zip(&fm.labels)
            .map(|(&z, &y)| z.max(0.0) - z * y as f64 + (-z.abs()).exp().ln_1p())
            .sum::<f64>()
            / n as f64
    };
    loss_trace.push(log_loss(&raw));

    for _ in 0..params.rounds {
        for i in 0..n {
            let p = sigmoid(raw[i]);
            grad[i] = p - fm.labels[i] as f64;
            hess[i] = (p * (1.0 - p)).max(1e-16);
        }
        let tree = build_tree((0..n).collect(), 0, fm, &grad, &hess, params);
        for (z, row) in raw.iter_mut().zip(&fm.rows) {
            *z += params.learning_rate * tree.predict(row);
        }
        trees.push(tree);
        let loss = log_loss(&raw);
        if !loss.is_finite() {
            return Err(IdsError::NonFiniteLoss);
        }
        loss_trace.push(loss);
    }
    Ok(GbdtModel { base_score, learning_rate: params.learning_rate, trees, loss_trace })
}

pub fn score(model: &GbdtModel, rows: &[Vec<f64>]) -> Vec<f64> {
    let predict = |row: &Vec<f64>| {
        let raw = model.base_score
            + model.learning_rate * model.trees.iter().map(|t| t.predict(row)).sum::<f64>();
        sigmoid(raw)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        rows.par_iter().map(predict).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        rows.iter().map(predict).collect()
    }
}
