//! Gaussian naive Bayes with closed-form class statistics.

use super::{FeatureMatrix, FEATURE_WIDTH, STD_FLOOR};
use serde::{Deserialize, Serialize};

pub const VAR_FLOOR: f64 = STD_FLOOR;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    /// Index 0 = class 0, index 1 = class 1.
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

pub fn train(fm: &FeatureMatrix) -> NbModel {
    let n = fm.rows.len() as f64;
    let mut counts = [0usize; 2];
    let mut means = [vec![0.0; FEATURE_WIDTH], vec![0.0; FEATURE_WIDTH]];
    for (row, &label) in fm.rows.iter().zip(&fm.labels) {
        let c = label as usize;
        counts[c] += 1;
        for (m, x) in means[c].iter_mut().zip(row) {
            *m += x;
        }
    }
    for c in 0..2 {
        for m in &mut means[c] {
            *m /= counts[c] as f64;
        }
    }
    let mut variances = [vec![0.0; FEATURE_WIDTH], vec![0.0; FEATURE_WIDTH]];
    for (row, &label) in fm.rows.iter().zip(&fm.labels) {
        let c = label as usize;
        for ((v, x), m) in variances[c].iter_mut().zip(row).zip(&means[c]) {
            *v += (x - m).powi(2);
        }
    }
    for c in 0..2 {
        for v in &mut variances[c] {
            *v = (*v / counts[c] as f64).max(VAR_FLOOR);
        }
    }
    NbModel { priors: [counts[0] as f64 / n, counts[1] as f64 / n], means, variances }
}

fn class_log_posterior(model: &NbModel, row: &[f64], class: usize) -> f64 {
    let mut lp = model.priors[class].ln();
    for ((x, m), v) in row.iter().zip(&model.means[class]).zip(&model.variances[class]) {
        lp += -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m).powi(2) / v);
    }
    lp
}

pub fn score(model: &NbModel, rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter()
        .map(|row| {
            let l0 = class_log_posterior(model, row, 0);
            let l1 = class_log_posterior(model, row, 1);
            let m = l0.max(l1);
            let (e0, e1) = ((l0 - m).exp(), (l1 - m).exp());
            e1 / (e0 + e1)
        })
        .collect()
}
