//! Labeled synthetic traffic generator: normal clients vs intruders drawn
//! from shifted behavioral distributions, with four preset experiment
//! configurations and optional per-second aggregation.

use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Continuous, Gamma, LogNormal};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

pub const DATASET_HEADER: &str =
    "timestamp_s,entity_id,message_size_bytes,file_size_bytes,connection_duration_s,data_volume_bytes,label";

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("experiment id {0} unknown (valid: 1-4)")]
    UnknownExperiment(u32),
    #[error("empty traffic log")]
    EmptyLog,
    #[error("dataset row malformed: {0}")]
    MalformedRow(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrafficRecord {
    pub timestamp_s: f64,
    pub entity_id: String,
    pub message_size_bytes: u64,
    pub file_size_bytes: u64,
    pub connection_duration_s: f64,
    pub data_volume_bytes: u64,
    pub label: u8,
}

/// Log-normal (location, scale) for the three byte-count features, gamma
/// (shape, scale) for duration, plus a message rate per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorProfile {
    pub message_size_mu: f64,
    pub message_size_sigma: f64,
    pub file_size_mu: f64,
    pub file_size_sigma: f64,
    pub data_volume_mu: f64,
    pub data_volume_sigma: f64,
    pub duration_shape: f64,
    pub duration_scale: f64,
    pub rate_per_s: f64,
}

impl BehaviorProfile {
    pub fn client() -> Self {
        BehaviorProfile {
            message_size_mu: 6.0,
            message_size_sigma: 0.7,
            file_size_mu: 10.5,
            file_size_sigma: 1.0,
            data_volume_mu: 9.0,
            data_volume_sigma: 0.9,
            duration_shape: 2.0,
            duration_scale: 5.0,
            rate_per_s: 1.0,
        }
    }

    /// The intruder signature: the client profile shifted in each feature's
    /// log (or shape) space, scaled by one difficulty knob.
    pub fn intruder(separation: f64) -> Self {
        let mut p = Self::client();
        p.message_size_mu += 2.0 * separation;
        p.file_size_mu += 2.0 * separation;
        p.data_volume_mu += 2.0 * separation;
        p.duration_shape += 2.0 * separation;
        p
    }

    /// Joint log density of one record's four features under this profile.
    pub fn log_likelihood(&self, r: &TrafficRecord) -> f64 {
        let ln = |mu: f64, sigma: f64, x: f64| {
            LogNormal::new(mu, sigma).unwrap().ln_pdf(x.max(0.5))
        };
        let gamma = Gamma::new(self.duration_shape, 1.0 / self.duration_scale).unwrap();
        ln(self.message_size_mu, self.message_size_sigma, r.message_size_bytes as f64)
            + ln(self.file_size_mu, self.file_size_sigma, r.file_size_bytes as f64)
            + ln(self.data_volume_mu, self.data_volume_sigma, r.data_volume_bytes as f64)
            + gamma.ln_pdf(r.connection_duration_s.max(1e-6))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub experiment_id: u32,
    pub train_size: usize,
    /// Client fraction of the training set, in (0, 1).
    pub train_client_fraction: f64,
    pub test_size: usize,
    pub test_client_fraction: f64,
    pub per_second_sampling: bool,
    pub seed: u64,
    pub separation: f64,
}

pub fn preset(experiment_id: u32) -> Result<ExperimentConfig, TrafficError> {
    let (train_size, train_cf, test_size, test_cf, sampling) = match experiment_id {
        1 => (27_000, 0.60, 9_000, 0.70, true),
        2 => (27_000, 0.60, 9_000, 0.93, true),
        3 => (200_000, 0.70, 60_000, 0.70, false),
        4 => (200_000, 0.70, 60_000, 0.93, false),
        other => return Err(TrafficError::UnknownExperiment(other)),
    };
    Ok(ExperimentConfig {
        experiment_id,
        train_size,
        train_client_fraction: train_cf,
        test_size,
        test_client_fraction: test_cf,
        per_second_sampling: sampling,
        seed: 0,
        separation: 1.0,
    })
}

// Each entity emits events over its own window; horizon bounds the window.
const ENTITY_HORIZON_S: f64 = 60.0;

fn sample_entity_events(
    profile: &BehaviorProfile,
    entity_id: &str,
    label: u8,
    rng: &mut ChaCha8Rng,
) -> Vec<TrafficRecord> {
    let msg = LogNormal::new(profile.message_size_mu, profile.message_size_sigma).unwrap();
    let file = LogNormal::new(profile.file_size_mu, profile.file_size_sigma).unwrap();
    let vol = LogNormal::new(profile.data_volume_mu, profile.data_volume_sigma).unwrap();
    let dur = Gamma::new(profile.duration_shape, 1.0 / profile.duration_scale).unwrap();
    let gap = statrs::distribution::Exp::new(profile.rate_per_s).unwrap();

    let mut out = Vec::new();
    let mut t = gap.sample(rng);
    while t < ENTITY_HORIZON_S {
        out.push(TrafficRecord {
            timestamp_s: t,
            entity_id: entity_id.to_string(),
            message_size_bytes: msg.sample(rng).round() as u64,
            file_size_bytes: file.sample(rng).round() as u64,
            connection_duration_s: dur.sample(rng),
            data_volume_bytes: vol.sample(rng).round() as u64,
            label,
        });
        t += gap.sample(rng);
    }
    out
}

/// Aggregate records per (entity, whole second): byte counts are summed,
/// duration is the maximum, timestamp becomes the second.
pub fn aggregate_per_second(records: &[TrafficRecord]) -> Vec<TrafficRecord> {
    let mut buckets: BTreeMap<(String, u64), TrafficRecord> = BTreeMap::new();
    for r in records {
        let second = r.timestamp_s.floor() as u64;
        buckets
            .entry((r.entity_id.clone(), second))
            .and_modify(|agg| {
                agg.message_size_bytes += r.message_size_bytes;
                agg.file_size_bytes += r.file_size_bytes;
                agg.data_volume_bytes += r.data_volume_bytes;
                if r.connection_duration_s > agg.connection_duration_s {
                    agg.connection_duration_s = r.connection_duration_s;
                }
            })
            .or_insert_with(|| TrafficRecord { timestamp_s: second as f64, ..r.clone() });
    }
    buckets.into_values().collect()
}

fn generate_labeled(
    profile: &BehaviorProfile,
    label: u8,
    count: usize,
    aggregate: bool,
    rng: &mut ChaCha8Rng,
) -> Vec<TrafficRecord> {
    let prefix = if label == 0 { "client" } else { "intruder" };
    let mut rows = Vec::with_capacity(count);
    let mut entity = 0usize;
    while rows.len() < count {
        let id = format!("{prefix}-{entity:05}");
        let events = sample_entity_events(profile, &id, label, rng);
        if aggregate {
            rows.extend(aggregate_per_second(&events));
        } else {
            rows.extend(events);
        }
        entity += 1;
    }
    rows.truncate(count);
    rows
}

fn generate_split(
    size: usize,
    client_fraction: f64,
    config: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<TrafficRecord> {
    let n_client = (size as f64 * client_fraction).round() as usize;
    let n_intruder = size - n_client;
    let client = BehaviorProfile::client();
    let intruder = BehaviorProfile::intruder(config.separation);
    let mut rows = generate_labeled(&client, 0, n_client, config.per_second_sampling, rng);
    rows.extend(generate_labeled(&intruder, 1, n_intruder, config.per_second_sampling, rng));
    rows
}

/// Deterministic under `config.seed`; label counts are exact.
pub fn generate(config: &ExperimentConfig) -> (Vec<TrafficRecord>, Vec<TrafficRecord>) {
    let mut train_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut test_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let train = generate_split(config.train_size, config.train_client_fraction, config, &mut train_rng);
    let test = generate_split(config.test_size, config.test_client_fraction, config, &mut test_rng);
    (train, test)
}

/// One observed frame from a live station run.
#[derive(Debug, Clone, PartialEq)]
pub struct LiveFrame {
    pub entity_id: String,
    pub timestamp_s: f64,
    pub payload_bytes: u64,
    pub file_size_bytes: u64,
    pub connection_duration_s: f64,
}

/// Turn a station frame log into label-0 TrafficRecords, ready to merge with
/// generated intruder rows.
pub fn log_from_live_run(frames: &[LiveFrame]) -> Result<Vec<TrafficRecord>, TrafficError> {
    if frames.is_empty() {
        return Err(TrafficError::EmptyLog);
    }
    Ok(frames
        .iter()
        .map(|f| TrafficRecord {
            timestamp_s: f.timestamp_s,
            entity_id: f.entity_id.clone(),
            message_size_bytes: f.payload_bytes,
            file_size_bytes: f.file_size_bytes,
            connection_duration_s: f.connection_duration_s,
            data_volume_bytes: f.payload_bytes,
            label: 0,
        })
        .collect())
}

pub fn write_dataset_csv(records: &[TrafficRecord], path: &Path) -> Result<(), TrafficError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(DATASET_HEADER.split(',')).map_err(csv_io)?;
    for r in records {
        w.write_record([
            format!("{:.6}", r.timestamp_s),
            r.entity_id.clone(),
            r.message_size_bytes.to_string(),
            r.file_size_bytes.to_string(),
            format!("{:.6}", r.connection_duration_s),
            r.data_volume_bytes.to_string(),
            r.label.to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv(path: &Path) -> Result<Vec<TrafficRecord>, TrafficError> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_io)?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_io)?;
        let bad = || TrafficError::MalformedRow(row.as_slice().to_string());
        let field = |i: usize| row.get(i).ok_or_else(bad);
        out.push(TrafficRecord {
            timestamp_s: field(0)?.parse().map_err(|_| bad())?,
            entity_id: field(1)?.to_string(),
            message_size_bytes: field(2)?.parse().map_err(|_| bad())?,
            file_size_bytes: field(3)?.parse().map_err(|_| bad())?,
            connection_duration_s: field(4)?.parse().map_err(|_| bad())?,
            data_volume_bytes: field(5)?.parse().map_err(|_| bad())?,
            label: field(6)?.parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

fn csv_io(err: csv::Error) -> TrafficError {
    match err.into_kind() {
        csv::ErrorKind::Io(io) => TrafficError::Io(io),
        other => TrafficError::MalformedRow(format!("{other:?}")),
    }
}

/// Accuracy of the likelihood-ratio classifier that knows the true generating
/// profiles — an upper-bound reference for model quality on raw (unsampled)
/// records.
pub fn plug_in_accuracy(records: &[TrafficRecord], separation: f64) -> f64 {
    let client = BehaviorProfile::client();
    let intruder = BehaviorProfile::intruder(separation);
    let correct = records
        .iter()
        .filter(|r| {
            let predict = u8::from(intruder.log_likelihood(r) > client.log_likelihood(r));
            predict == r.label
        })
        .count();
    correct as f64 / records.len() as f64
}
