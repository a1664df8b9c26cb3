//! L2-regularized logistic regression trained by full-batch gradient descent.

use super::{sigmoid, FeatureMatrix, IdsError, FEATURE_WIDTH};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrParams {
    pub lambda: f64,
    pub rate: f64,
    pub iterations: usize,
}

impl Default for LrParams {
    fn default() -> Self {
        LrParams { lambda: 1e-4, rate: 0.1, iterations: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Mean regularized log loss per iteration, kept for convergence checks.
    pub loss_trace: Vec<f64>,
}

fn mean_loss(fm: &FeatureMatrix, weights: &[f64], bias: f64, lambda: f64) -> f64 {
    let n = fm.rows.len() as f64;
    let mut loss = 0.0;
    for (row, &label) in fm.rows.iter().zip(&fm.labels) {
        let z = bias + row.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>();
        let y = label as f64;
        // numerically stable -[y ln p + (1-y) ln (1-p)]
        loss += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
    }
    loss / n + 0.5 * lambda * weights.iter().map(|w| w * w).sum::<f64>()
}

pub fn train(fm: &FeatureMatrix, params: &LrParams) -> Result<LrModel, IdsError> {
    let n = fm.rows.len() as f64;
    let mut weights = vec![0.0; FEATURE_WIDTH];
    let mut bias = 0.0;
    let mut loss_trace = Vec::with_capacity(params.iterations + 1);
    loss_trace.push(mean_loss(fm, &weights, bias, params.lambda));
    for _ in 0..params.iterations {
        let mut grad_w = vec![0.0; FEATURE_WIDTH];
        let mut grad_b = 0.0;
        for (row, &label) in fm.rows.iter().zip(&fm.labels) {
            let z = bias + row.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>();
            let err = sigmoid(z) - label as f64;
            for (g, x) in grad_w.iter_mut().zip(row) {
                *g += err * x;
            }
            grad_b += err;
        }
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= params.rate * (g / n + params.lambda * *w);
        }
        bias -= params.rate * grad_b / n;
        let loss = mean_loss(fm, &weights, bias, params.lambda);
        if !loss.is_finite() {
            return Err(IdsError::NonFiniteLoss);
        }
        loss_trace.push(loss);
    }
    Ok(LrModel { weights, bias, loss_trace })
}

pub fn score(model: &LrModel, rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter()
        .map(|row| {
            sigmoid(model.bias + row.iter().zip(&model.weights).map(|(x, w)| x * w).sum::<f64>())
        })
        .collect()
}
