//! Run-level performance capture: section timing, a background CPU/memory
//! sampler, and CSV export with a grouped two-scheme comparison report.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};
use thiserror::Error;

pub const METRICS_HEADER: &str = "run_id,scheme,environment,handshake_time_ms,encryption_time_s,decryption_time_s,connection_duration_s,server_response_time_s,cpu_usage_percent,memory_usage_mb,timestamp";

pub const DEFAULT_SAMPLE_INTERVAL_MS: u64 = 200;

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("no records to export")]
    NoRecords,
    #[error("csv row malformed: {0}")]
    MalformedRow(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One run's worth of the seven measured parameters. Resource fields are
/// `None` when sampling was unavailable and export as empty cells.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricRecord {
    pub run_id: String,
    pub scheme: String,
    pub environment: String,
    pub handshake_time_ms: f64,
    pub encryption_time_s: f64,
    pub decryption_time_s: f64,
    pub connection_duration_s: f64,
    pub server_response_time_s: f64,
    pub cpu_usage_percent: Option<f64>,
    pub memory_usage_mb: Option<f64>,
    pub timestamp: u64,
}

impl MetricRecord {
    pub fn new(run_id: impl Into<String>, scheme: impl Into<String>, environment: impl Into<String>) -> Self {
        MetricRecord {
            run_id: run_id.into(),
            scheme: scheme.into(),
            environment: environment.into(),
            handshake_time_ms: 0.0,
            encryption_time_s: 0.0,
            decryption_time_s: 0.0,
            connection_duration_s: 0.0,
            server_response_time_s: 0.0,
            cpu_usage_percent: None,
            memory_usage_mb: None,
            timestamp: unix_now(),
        }
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Time a region with the monotonic clock. Nesting is fine; the caller decides
/// which `MetricRecord` field the duration feeds.
pub fn time_section<T>(_label: &str, f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

/// Mean CPU percent and resident memory over a sampling window.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResourceUsage {
    pub cpu_usage_percent: Option<f64>,
    pub memory_usage_mb: Option<f64>,
}

pub struct ResourceSampler {
    stop: mpsc::Sender<()>,
    handle: thread::JoinHandle<ResourceUsage>,
}

/// Start sampling this process's CPU and memory every `interval_ms`.
/// `stop()` returns arithmetic means; zero samples yield absent fields.
pub fn sample_resources(interval_ms: u64) -> ResourceSampler {
    let (stop, rx) = mpsc::channel::<()>();
    let handle = thread::spawn(move || {
        let pid = sysinfo::get_current_pid().ok();
        let mut system = sysinfo::System::new();
        let mut cpu_samples: Vec<f64> = Vec::new();
        let mut mem_samples: Vec<f64> = Vec::new();
        let interval = Duration::from_millis(interval_ms.max(10));
        // sysinfo needs two refreshes before CPU deltas mean anything
        let mut warmed = false;
        loop {
            match rx.recv_timeout(interval) {
                Ok(()) | Err(mpsc::RecvTimeoutError::Disconnected) => break,
                Err(mpsc::RecvTimeoutError::Timeout) => {}
            }
            let Some(pid) = pid else { continue };
            system.refresh_processes(sysinfo::ProcessesToUpdate::Some(&[pid]), true);
            if let Some(proc_) = system.process(pid) {
                if warmed {
                    cpu_samples.push(proc_.cpu_usage() as f64);
                }
                mem_samples.push(proc_.memory() as f64 / (1024.0 * 1024.0));
                warmed = true;
            }
        }
        let mean = |v: &[f64]| {
            if v.is_empty() { None } else { Some(v.iter().sum::<f64>() / v.len() as f64) }
        };
        ResourceUsage {
            cpu_usage_percent: mean(&cpu_samples),
            memory_usage_mb: mean(&mem_samples),
        }
    });
    ResourceSampler { stop, handle }
}

impl ResourceSampler {
    pub fn stop(self) -> ResourceUsage {
        let _ = self.stop.send(());
        self.handle.join().unwrap_or_default()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_default()
}

pub fn export_metrics_csv(records: &[MetricRecord], path: &Path) -> Result<(), TelemetryError> {
    if records.is_empty() {
        return Err(TelemetryError::NoRecords);
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(METRICS_HEADER.split(',')).map_err(csv_io)?;
    for r in records {
        w.write_record([
            r.run_id.as_str(),
            r.scheme.as_str(),
            r.environment.as_str(),
            &format!("{:.3}", r.handshake_time_ms),
            &format!("{:.6}", r.encryption_time_s),
            &format!("{:.6}", r.decryption_time_s),
            &format!("{:.6}", r.connection_duration_s),
            &format!("{:.6}", r.server_response_time_s),
            &fmt_opt(r.cpu_usage_percent),
            &fmt_opt(r.memory_usage_mb),
            &r.timestamp.to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn import_metrics_csv(path: &Path) -> Result<Vec<MetricRecord>, TelemetryError> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_io)?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_io)?;
        let get = |i: usize| row.get(i).unwrap_or("").to_string();
        let num = |i: usize| -> Result<f64, TelemetryError> {
            row.get(i)
                .unwrap_or("")
                .parse()
                .map_err(|_| TelemetryError::MalformedRow(row.as_slice().to_string()))
        };
        let opt = |i: usize| -> Option<f64> {
            let s = row.get(i).unwrap_or("");
            if s.is_empty() { None } else { s.parse().ok() }
        };
        out.push(MetricRecord {
            run_id: get(0),
            scheme: get(1),
            environment: get(2),
            handshake_time_ms: num(3)?,
            encryption_time_s: num(4)?,
            decryption_time_s: num(5)?,
            connection_duration_s: num(6)?,
            server_response_time_s: num(7)?,
            cpu_usage_percent: opt(8),
            memory_usage_mb: opt(9),
            timestamp: row.get(10).unwrap_or("0").parse().unwrap_or(0),
        });
    }
    Ok(out)
}

fn csv_io(err: csv::Error) -> TelemetryError {
    match err.into_kind() {
        csv::ErrorKind::Io(io) => TelemetryError::Io(io),
        other => TelemetryError::MalformedRow(format!("{other:?}")),
    }
}

const REPORT_PARAMETERS: [&str; 7] = [
    "Handshake Time (ms)",
    "Encryption Time (s)",
    "Decryption Time (s)",
    "Connection Duration (s)",
    "Server Response Time (s)",
    "CPU Usage (%)",
    "Memory Usage (MB)",
];

/// Text report: one 7-parameter grid per (scheme, environment) group, means
/// across the group's runs. Mirrors the two-scheme comparison layout.
pub fn comparison_report(records: &[MetricRecord]) -> String {
    let mut groups: BTreeMap<(String, String), Vec<&MetricRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.scheme.clone(), r.environment.clone())).or_default().push(r);
    }
    let mut out = String::new();
    out.push_str("Parameter comparison (means per scheme/environment)\n");
    for ((scheme, env), rows) in &groups {
        let n = rows.len() as f64;
        let mean = |f: fn(&MetricRecord) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
        let mean_opt = |f: fn(&MetricRecord) -> Option<f64>| {
            let vals: Vec<f64> = rows.iter().filter_map(|r| f(r)).collect();
            if vals.is_empty() { None } else { Some(vals.iter().sum::<f64>() / vals.len() as f64) }
        };
        let values = [
            Some(mean(|r| r.handshake_time_ms)),
            Some(mean(|r| r.encryption_time_s)),
            Some(mean(|r| r.decryption_time_s)),
            Some(mean(|r| r.connection_duration_s)),
            Some(mean(|r| r.server_response_time_s)),
            mean_opt(|r| r.cpu_usage_percent),
            mean_opt(|r| r.memory_usage_mb),
        ];
        out.push_str(&format!("\n[{scheme} @ {env}] ({} runs)\n", rows.len()));
        for (name, value) in REPORT_PARAMETERS.iter().zip(values) {
            match value {
                Some(v) => out.push_str(&format!("  {name:<26} {v:>12.6}\n")),
                None => out.push_str(&format!("  {name:<26} {:>12}\n", "n/a")),
            }
        }
    }
    out
}
