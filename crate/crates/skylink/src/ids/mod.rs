//! Intrusion detection pipeline: feature preparation, three from-scratch
//! binary classifiers, rank-based ROC-AUC, and the four-experiment harness.

mod gbdt;
mod lr;
mod nb;

pub use gbdt::{GbdtModel, GbdtParams, Tree};
pub use lr::{LrModel, LrParams};
pub use nb::NbModel;

use crate::trafficlab::{self, TrafficRecord};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const FEATURE_NAMES: [&str; 4] =
    ["message_size_bytes", "file_size_bytes", "connection_duration_s", "data_volume_bytes"];
pub const FEATURE_WIDTH: usize = 4;
pub const STD_FLOOR: f64 = 1e-9;
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IdsError {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("training labels are all one class")]
    SingleClassTraining,
    #[error("evaluation labels are all one class; AUC undefined")]
    SingleClassEval,
    #[error("feature width {got} != expected {expected}")]
    WidthMismatch { got: usize, expected: usize },
    #[error("loss became non-finite; bad hyperparameters")]
    NonFiniteLoss,
    #[error("model document malformed: {0}")]
    MalformedModel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-feature standardization statistics, fitted on training data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub stats: FeatureStats,
}

fn raw_features(r: &TrafficRecord) -> Vec<f64> {
    vec![
        (r.message_size_bytes as f64).ln_1p(),
        (r.file_size_bytes as f64).ln_1p(),
        r.connection_duration_s,
        (r.data_volume_bytes as f64).ln_1p(),
    ]
}

/// Fit standardization on a training set; refuses empty or single-class data.
pub fn prepare(records: &[TrafficRecord]) -> Result<FeatureMatrix, IdsError> {
    if records.is_empty() {
        return Err(IdsError::EmptyDataset);
    }
    let labels: Vec<u8> = records.iter().map(|r| r.label).collect();
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(IdsError::SingleClassTraining);
    }
    let raw: Vec<Vec<f64>> = records.iter().map(raw_features).collect();
    let n = raw.len() as f64;
    let mut means = vec![0.0; FEATURE_WIDTH];
    for row in &raw {
        for (m, x) in means.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut stds = vec![0.0; FEATURE_WIDTH];
    for row in &raw {
        for ((s, x), m) in stds.iter_mut().zip(row).zip(&means) {
            *s += (x - m).powi(2);
        }
    }
    for s in &mut stds {
        *s = (*s / n).sqrt().max(STD_FLOOR);
    }
    let stats = FeatureStats { means, stds };
    Ok(apply_stats(raw, labels, stats))
}

/// Standardize a test set with training statistics (no leakage).
pub fn prepare_with_stats(
    records: &[TrafficRecord],
    stats: &FeatureStats,
) -> Result<FeatureMatrix, IdsError> {
    if records.is_empty() {
        return Err(IdsError::EmptyDataset);
    }
    let raw: Vec<Vec<f64>> = records.iter().map(raw_features).collect();
    let labels = records.iter().map(|r| r.label).collect();
    Ok(apply_stats(raw, labels, stats.clone()))
}

fn apply_stats(mut raw: Vec<Vec<f64>>, labels: Vec<u8>, stats: FeatureStats) -> FeatureMatrix {
    for row in &mut raw {
        for ((x, m), s) in row.iter_mut().zip(&stats.means).zip(&stats.stds) {
            // a floored std marks a constant training column: no information
            *x = if *s <= STD_FLOOR { 0.0 } else { (*x - m) / s };
        }
    }
    FeatureMatrix { rows: raw, labels, stats }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    LogisticRegression,
    GaussianNb,
    Gbdt,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] =
        [ModelKind::LogisticRegression, ModelKind::GaussianNb, ModelKind::Gbdt];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "lr",
            ModelKind::GaussianNb => "nb",
            ModelKind::Gbdt => "gbdt",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "lr" | "logistic" => Some(ModelKind::LogisticRegression),
            "nb" | "gnb" => Some(ModelKind::GaussianNb),
            "gbdt" | "xgb" => Some(ModelKind::Gbdt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainedModel {
    LogisticRegression(LrModel),
    GaussianNb(NbModel),
    Gbdt(GbdtModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::LogisticRegression(_) => ModelKind::LogisticRegression,
            TrainedModel::GaussianNb(_) => ModelKind::GaussianNb,
            TrainedModel::Gbdt(_) => ModelKind::Gbdt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparameters {
    pub lr: LrParams,
    pub gbdt: GbdtParams,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters { lr: LrParams::default(), gbdt: GbdtParams::default() }
    }
}

fn check_two_classes(labels: &[u8]) -> Result<(), IdsError> {
    if labels.is_empty() {
        return Err(IdsError::EmptyDataset);
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(IdsError::SingleClassTraining);
    }
    Ok(())
}

pub fn train(
    kind: ModelKind,
    features: &FeatureMatrix,
    hyper: &Hyperparameters,
) -> Result<TrainedModel, IdsError> {
    check_two_classes(&features.labels)?;
    Ok(match kind {
        ModelKind::LogisticRegression => {
            TrainedModel::LogisticRegression(lr::train(features, &hyper.lr)?)
        }
        ModelKind::GaussianNb => TrainedModel::GaussianNb(nb::train(features)),
        ModelKind::Gbdt => TrainedModel::Gbdt(gbdt::train(features, &hyper.gbdt)?),
    })
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-row probability of label 1.
pub fn score(model: &TrainedModel, rows: &[Vec<f64>]) -> Result<Vec<f64>, IdsError> {
    for row in rows {
        if row.len() != FEATURE_WIDTH {
            return Err(IdsError::WidthMismatch { got: row.len(), expected: FEATURE_WIDTH });
        }
    }
    Ok(match model {
        TrainedModel::LogisticRegression(m) => lr::score(m, rows),
        TrainedModel::GaussianNb(m) => nb::score(m, rows),
        TrainedModel::Gbdt(m) => gbdt::score(m, rows),
    })
}

/// Mann–Whitney AUC via rank sums with average ranks for ties.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64, IdsError> {
    if scores.is_empty() {
        return Err(IdsError::EmptyDataset);
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(IdsError::SingleClassEval);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based; ties share the average rank of the run
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let auc = (rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0) / (n_pos * n_neg) as f64;
    Ok(auc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub auc: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub threshold: f64,
}

pub fn evaluate(model: &TrainedModel, test: &FeatureMatrix) -> Result<EvalReport, IdsError> {
    let scores = score(model, &test.rows)?;
    let auc = roc_auc(&scores, &test.labels)?;
    Ok(confusion(&scores, &test.labels, 0.5, auc))
}

/// Accuracy-only evaluation for single-class test sets; AUC reported as NaN.
pub fn evaluate_accuracy_only(
    model: &TrainedModel,
    test: &FeatureMatrix,
) -> Result<EvalReport, IdsError> {
    let scores = score(model, &test.rows)?;
    Ok(confusion(&scores, &test.labels, 0.5, f64::NAN))
}

fn confusion(scores: &[f64], labels: &[u8], threshold: f64, auc: f64) -> EvalReport {
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (s, &l) in scores.iter().zip(labels) {
        match (*s >= threshold, l == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let n = labels.len();
    EvalReport { accuracy: (tp + tn) as f64 / n as f64, auc, tp, fp, tn, fn_, threshold }
}

/// ROC curve points (fpr, tpr) at every distinct score threshold.
pub fn roc_points(scores: &[f64], labels: &[u8]) -> Vec<(f64, f64)> {
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg.max(1) as f64, tp as f64 / n_pos.max(1) as f64));
    }
    points
}

/// Versioned JSON document wrapping a trained model.
#[derive(Debug, Serialize, Deserialize)]
struct ModelDocument {
    version: u32,
    stats: FeatureStats,
    model: TrainedModel,
}

pub fn save_model(
    model: &TrainedModel,
    stats: &FeatureStats,
    path: &Path,
) -> Result<(), IdsError> {
    let doc = ModelDocument {
        version: MODEL_FORMAT_VERSION,
        stats: stats.clone(),
        model: model.clone(),
    };
    let json = serde_json::to_string_pretty(&doc)
        .map_err(|e| IdsError::MalformedModel(e.to_string()))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(TrainedModel, FeatureStats), IdsError> {
    let json = std::fs::read_to_string(path)?;
    let doc: ModelDocument =
        serde_json::from_str(&json).map_err(|e| IdsError::MalformedModel(e.to_string()))?;
    if doc.version != MODEL_FORMAT_VERSION {
        return Err(IdsError::MalformedModel(format!("unsupported version {}", doc.version)));
    }
    Ok((doc.model, doc.stats))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub experiment_id: u32,
    pub kind: ModelKind,
    pub report: EvalReport,
}

/// Generate the preset datasets, train each requested model, evaluate on the
/// held-out test set.
pub fn run_experiment(
    experiment_id: u32,
    kinds: &[ModelKind],
    seed: u64,
    separation: f64,
) -> Result<Vec<ExperimentResult>, IdsError> {
    let mut config = trafficlab::preset(experiment_id)
        .map_err(|e| IdsError::MalformedModel(e.to_string()))?;
    config.seed = seed;
    config.separation = separation;
    let (train_rows, test_rows) = trafficlab::generate(&config);
    let train_fm = prepare(&train_rows)?;
    let test_fm = prepare_with_stats(&test_rows, &train_fm.stats)?;
    let hyper = Hyperparameters::default();
    let mut out = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let model = train(kind, &train_fm, &hyper)?;
        let report = evaluate(&model, &test_fm)?;
        out.push(ExperimentResult { experiment_id, kind, report });
    }
    Ok(out)
}

pub const REPORT_HEADER: &str = "experiment,model,accuracy,auc,tp,fp,tn,fn";

pub fn write_report_csv(results: &[ExperimentResult], path: &Path) -> Result<(), IdsError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| IdsError::MalformedModel(e.to_string()))?;
    w.write_record(REPORT_HEADER.split(',')).map_err(|e| IdsError::MalformedModel(e.to_string()))?;
    for r in results {
        w.write_record([
            r.experiment_id.to_string(),
            r.kind.name().to_string(),
            format!("{:.6}", r.report.accuracy),
            format!("{:.6}", r.report.auc),
            r.report.tp.to_string(),
            r.report.fp.to_string(),
            r.report.tn.to_string(),
            r.report.fn_.to_string(),
        ])
        .map_err(|e| IdsError::MalformedModel(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_roc_csv(
    points_per_model: &[(ModelKind, Vec<(f64, f64)>)],
    path: &Path,
) -> Result<(), IdsError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| IdsError::MalformedModel(e.to_string()))?;
    w.write_record(["model", "fpr", "tpr"])
        .map_err(|e| IdsError::MalformedModel(e.to_string()))?;
    for (kind, points) in points_per_model {
        for (fpr, tpr) in points {
            w.write_record([kind.name().to_string(), format!("{fpr:.6}"), format!("{tpr:.6}")])
                .map_err(|e| IdsError::MalformedModel(e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}
