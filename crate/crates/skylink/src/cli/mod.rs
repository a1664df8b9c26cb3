//! Command-line surface: serve, send, bench, dataset generation, IDS
//! training/evaluation, and report rendering.

use crate::ids::{self, ModelKind};
use crate::kem::KemScheme;
use crate::station::{
    run_uav_client, GroundStation, MediaKind, StationConfig, TransferManifest, DEFAULT_CHUNK_SIZE,
};
use crate::telemetry::{
    comparison_report, export_metrics_csv, import_metrics_csv, sample_resources, MetricRecord,
};
use crate::trafficlab;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "skylink", version, about = "Secure UAV-ground communication stack with an intrusion-detection pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_scheme(s: &str) -> Result<KemScheme, String> {
    KemScheme::from_name(s).ok_or_else(|| format!("unknown scheme {s:?} (use ecdh or ml-kem-512)"))
}

fn parse_kind(s: &str) -> Result<MediaKind, String> {
    match s {
        "video" => Ok(MediaKind::Video),
        "audio" => Ok(MediaKind::Audio),
        "image" => Ok(MediaKind::Image),
        "telemetry" => Ok(MediaKind::Telemetry),
        _ => Err(format!("unknown media kind {s:?}")),
    }
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    ModelKind::from_name(s).ok_or_else(|| format!("unknown model {s:?} (use lr, nb, or gbdt)"))
}

#[derive(Args)]
struct ExperimentArg {
    /// Experiment preset (1-4)
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=4))]
    experiment: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Difficulty knob: scales the intruder profile's shift from the client profile
    #[arg(long, default_value_t = 1.0)]
    separation: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Run the ground station server
    Serve {
        #[arg(long, default_value = "127.0.0.1:7700")]
        listen: String,
        #[arg(long, default_value = "storage")]
        storage: PathBuf,
        #[arg(long, default_value_t = 16)]
        max_sessions: usize,
        #[arg(long, default_value_t = 30)]
        timeout: u64,
    },
    /// Transfer files to a ground station
    Send {
        #[arg(long)]
        connect: String,
        /// File to send; repeatable
        #[arg(long, required = true)]
        file: Vec<PathBuf>,
        #[arg(long, default_value = "ml-kem-512", value_parser = parse_scheme)]
        scheme: KemScheme,
        #[arg(long, default_value = "telemetry", value_parser = parse_kind)]
        kind: MediaKind,
        #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE)]
        chunk_size: usize,
        #[arg(long, default_value_t = 30)]
        timeout: u64,
    },
    /// Benchmark both schemes over loopback and emit the comparison grid
    Bench {
        #[arg(long, default_value_t = 3)]
        runs: usize,
        /// Payload file; a 1 MiB deterministic payload is generated if omitted
        #[arg(long)]
        file: Option<PathBuf>,
        /// Restrict to one scheme (default: both)
        #[arg(long, value_parser = parse_scheme)]
        scheme: Option<KemScheme>,
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a labeled synthetic dataset (train.csv + test.csv)
    GenDataset {
        #[command(flatten)]
        experiment: ExperimentArg,
        #[arg(long, default_value = "dataset-out")]
        out: PathBuf,
    },
    /// Train one IDS model on a dataset CSV
    IdsTrain {
        #[arg(long, value_parser = parse_model)]
        model: ModelKind,
        #[arg(long)]
        train: PathBuf,
        #[arg(long, default_value = "model.json")]
        model_out: PathBuf,
    },
    /// Evaluate a saved model on a test CSV
    IdsEval {
        #[arg(long)]
        model_in: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Run one full experiment: generate, train every model, evaluate
    IdsExperiment {
        #[command(flatten)]
        experiment: ExperimentArg,
        /// Comma-separated list of models
        #[arg(long, default_value = "lr,nb,gbdt")]
        models: String,
        /// Report CSV path
        #[arg(long, default_value = "ids-report.csv")]
        out: PathBuf,
    },
    /// Render the grouped comparison table from a metrics CSV
    Report {
        #[arg(long)]
        metrics: PathBuf,
    },
}

/// Parse and run; returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap uses 0 for --help/--version and 2 for usage errors
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn run(command: Command) -> Result<(), String> {
    match command {
        Command::Serve { listen, storage, max_sessions, timeout } => {
            let config = StationConfig {
                max_sessions,
                timeout_s: timeout,
                ..StationConfig::new(listen, storage)
            };
            let station = GroundStation::start(config).map_err(|e| e.to_string())?;
            log::info!("listening on {}", station.local_addr());
            println!("listening on {}", station.local_addr());
            loop {
                std::thread::park();
            }
        }
        Command::Send { connect, file, scheme, kind, chunk_size, timeout } => {
            let config = StationConfig {
                timeout_s: timeout,
                ..StationConfig::new(connect, "storage")
            };
            let manifests = file
                .iter()
                .map(|p| {
                    let mut m = TransferManifest::from_file(p, kind).map_err(|e| e.to_string())?;
                    m.chunk_size = chunk_size;
                    Ok(m)
                })
                .collect::<Result<Vec<_>, String>>()?;
            let report = run_uav_client(&config, &manifests, scheme).map_err(|e| e.to_string())?;
            for f in &report.files {
                println!("{}: {} bytes in {:.3}s", f.name, f.bytes, f.elapsed_s);
            }
            println!(
                "session {} scheme {} handshake {:.3}ms",
                report.metrics.run_id, report.metrics.scheme, report.metrics.handshake_time_ms
            );
            Ok(())
        }
        Command::Bench { runs, file, scheme, out, seed } => bench(runs, file, scheme, &out, seed),
        Command::GenDataset { experiment, out } => {
            let mut config = trafficlab::preset(experiment.experiment).map_err(|e| e.to_string())?;
            config.seed = experiment.seed;
            config.separation = experiment.separation;
            let (train, test) = trafficlab::generate(&config);
            std::fs::create_dir_all(&out).map_err(|e| e.to_string())?;
            trafficlab::write_dataset_csv(&train, &out.join("train.csv")).map_err(|e| e.to_string())?;
            trafficlab::write_dataset_csv(&test, &out.join("test.csv")).map_err(|e| e.to_string())?;
            println!(
                "experiment {}: wrote {} train rows, {} test rows to {}",
                experiment.experiment,
                train.len(),
                test.len(),
                out.display()
            );
            Ok(())
        }
        Command::IdsTrain { model, train, model_out } => {
            let rows = trafficlab::read_dataset_csv(&train).map_err(|e| e.to_string())?;
            let fm = ids::prepare(&rows).map_err(|e| e.to_string())?;
            let trained =
                ids::train(model, &fm, &ids::Hyperparameters::default()).map_err(|e| e.to_string())?;
            ids::save_model(&trained, &fm.stats, &model_out).map_err(|e| e.to_string())?;
            println!("trained {} on {} rows -> {}", model.name(), rows.len(), model_out.display());
            Ok(())
        }
        Command::IdsEval { model_in, test } => {
            let (model, stats) = ids::load_model(&model_in).map_err(|e| e.to_string())?;
            let rows = trafficlab::read_dataset_csv(&test).map_err(|e| e.to_string())?;
            let fm = ids::prepare_with_stats(&rows, &stats).map_err(|e| e.to_string())?;
            let report = ids::evaluate(&model, &fm).map_err(|e| e.to_string())?;
            println!(
                "{}: accuracy {:.4} auc {:.4} (tp {} fp {} tn {} fn {})",
                model.kind().name(),
                report.accuracy,
                report.auc,
                report.tp,
                report.fp,
                report.tn,
                report.fn_
            );
            Ok(())
        }
        Command::IdsExperiment { experiment, models, out } => {
            let kinds = models
                .split(',')
                .map(|s| parse_model(s.trim()))
                .collect::<Result<Vec<_>, String>>()?;
            let results =
                ids::run_experiment(experiment.experiment, &kinds, experiment.seed, experiment.separation)
                    .map_err(|e| e.to_string())?;
            for r in &results {
                println!(
                    "experiment {} {}: accuracy {:.4} auc {:.4}",
                    r.experiment_id,
                    r.kind.name(),
                    r.report.accuracy,
                    r.report.auc
                );
            }
            ids::write_report_csv(&results, &out).map_err(|e| e.to_string())?;
            println!("report -> {}", out.display());
            Ok(())
        }
        Command::Report { metrics } => {
            let records = import_metrics_csv(&metrics).map_err(|e| e.to_string())?;
            print!("{}", comparison_report(&records));
            Ok(())
        }
    }
}

fn bench(
    runs: usize,
    file: Option<PathBuf>,
    scheme: Option<KemScheme>,
    out: &std::path::Path,
    seed: u64,
) -> Result<(), String> {
    use rand::{Rng, SeedableRng};
    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;
    let payload = match file {
        Some(p) => p,
        None => {
            let p = scratch.path().join("payload.bin");
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut bytes = vec![0u8; 1 << 20];
            rng.fill_bytes(&mut bytes);
            std::fs::write(&p, bytes).map_err(|e| e.to_string())?;
            p
        }
    };
    let schemes: Vec<KemScheme> = match scheme {
        Some(s) => vec![s],
        None => KemScheme::ALL.to_vec(),
    };

    std::fs::create_dir_all(out).map_err(|e| e.to_string())?;
    let storage = scratch.path().join("storage");
    let station = GroundStation::start(StationConfig::new("127.0.0.1:0", &storage))
        .map_err(|e| e.to_string())?;
    let manifest =
        TransferManifest::from_file(&payload, MediaKind::Telemetry).map_err(|e| e.to_string())?;
    let client_config = StationConfig::new(station.local_addr().to_string(), &storage);

    let mut records: Vec<MetricRecord> = Vec::new();
    for scheme in schemes {
        for run in 0..runs {
            let seen = station.sink().metrics().len();
            let sampler = sample_resources(10); // short runs need a fast sampler
            let report = run_uav_client(&client_config, &[manifest.clone()], scheme)
                .map_err(|e| e.to_string())?;
            // the server finalizes its metric shortly after the client returns
            for _ in 0..200 {
                if station.sink().metrics().len() > seen {
                    break;
                }
                std::thread::sleep(std::time::Duration::from_millis(10));
            }
            std::thread::sleep(std::time::Duration::from_millis(30));
            let usage = sampler.stop();
            let mut record = report.metrics;
            record.run_id = format!("{}-{run}", scheme.name());
            record.cpu_usage_percent = usage.cpu_usage_percent;
            record.memory_usage_mb = usage.memory_usage_mb;
            // fold in the matching server-side decryption time
            if let Some(server) = station
                .sink()
                .metrics()
                .iter()
                .rev()
                .find(|m| m.scheme == scheme.name())
            {
                record.decryption_time_s = server.decryption_time_s;
            }
            records.push(record);
        }
    }
    station.shutdown();

    let csv_path = out.join("metrics.csv");
    export_metrics_csv(&records, &csv_path).map_err(|e| e.to_string())?;
    print!("{}", comparison_report(&records));
    println!("metrics -> {}", csv_path.display());
    Ok(())
}
