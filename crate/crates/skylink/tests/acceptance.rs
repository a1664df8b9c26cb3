//! Acceptance gate: one test per release criterion, each printing a single
//! pass line (run with `--nocapture` to see them). A failed assertion in any
//! test marks that criterion failed.

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::Digest;
use std::io::{Read, Write};
use std::os::unix::net::UnixStream;
use std::thread;
use std::time::Instant;

use skylink::channel::{handshake_client, handshake_server, ChannelError, RecordType};
use skylink::eax::{eax_decrypt, eax_encrypt, EaxInputs, EaxKey};
use skylink::ids;
use skylink::kem::mlkem;
use skylink::kem::KemScheme;
use skylink::station::{run_uav_client, GroundStation, MediaKind, StationConfig, TransferManifest};
use skylink::telemetry;
use skylink::trafficlab;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pass(id: u32, name: &str, started: Instant, budget_s: u64) {
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() < budget_s,
        "criterion {id} over budget: {elapsed:?} >= {budget_s}s"
    );
    println!("criterion {id:>2} PASS ({elapsed:>8.2?}) {name}");
}

// --- 1. EAX conformance ---------------------------------------------------

#[test]
fn criterion_01_eax_reference_vectors() {
    let t = Instant::now();
    let vectors = skylink::eax::vectors::parse_vectors(include_str!("data/eax_vectors.txt")).unwrap();
    assert_eq!(vectors.len(), 10);
    for v in &vectors {
        let key = EaxKey::new(&v.key).unwrap();
        let ct = eax_encrypt(&key, &EaxInputs::new(&v.nonce, &v.header, &v.msg)).unwrap();
        assert_eq!(ct, v.cipher, "encrypt mismatch");
        let pt = eax_decrypt(&key, &v.nonce, &v.header, &v.cipher, 128).unwrap();
        assert_eq!(pt, v.msg, "decrypt mismatch");
    }
    pass(1, "EAX reference vectors bit-exact", t, 1);
}

// --- 2. EAX properties ----------------------------------------------------

#[test]
fn criterion_02_eax_properties() {
    let t = Instant::now();
    let mut r = rng(0x0202);

    // 10,000 random round trips over varied key/nonce/header/message sizes.
    for i in 0..10_000usize {
        let key_len = if i % 2 == 0 { 16 } else { 32 };
        let mut key_bytes = vec![0u8; key_len];
        r.fill_bytes(&mut key_bytes);
        let key = EaxKey::new(&key_bytes).unwrap();
        let nonce: Vec<u8> = (0..r.random_range(1..=32)).map(|_| r.random()).collect();
        let header: Vec<u8> = (0..r.random_range(0..=48)).map(|_| r.random()).collect();
        let msg: Vec<u8> = (0..r.random_range(0..=256)).map(|_| r.random()).collect();
        let ct = eax_encrypt(&key, &EaxInputs::new(&nonce, &header, &msg)).unwrap();
        assert_eq!(ct.len(), msg.len() + 16, "|CT| != |M| + tau/8");
        assert_eq!(eax_decrypt(&key, &nonce, &header, &ct, 128).unwrap(), msg);
    }

    // Every single-bit corruption of CT, N, or H on a 64-byte message fails.
    let mut key_bytes = [0u8; 16];
    r.fill_bytes(&mut key_bytes);
    let key = EaxKey::new(&key_bytes).unwrap();
    let nonce = [0x41u8; 16];
    let header = [0x42u8; 16];
    let msg = [0x43u8; 64];
    let ct = eax_encrypt(&key, &EaxInputs::new(&nonce, &header, &msg)).unwrap();
    for byte in 0..ct.len() {
        for bit in 0..8 {
            let mut bad = ct.clone();
            bad[byte] ^= 1 << bit;
            assert!(eax_decrypt(&key, &nonce, &header, &bad, 128).is_err());
        }
    }
    for byte in 0..nonce.len() {
        for bit in 0..8 {
            let mut bad = nonce;
            bad[byte] ^= 1 << bit;
            assert!(eax_decrypt(&key, &bad, &header, &ct, 128).is_err());
        }
    }
    for byte in 0..header.len() {
        for bit in 0..8 {
            let mut bad = header;
            bad[byte] ^= 1 << bit;
            assert!(eax_decrypt(&key, &nonce, &bad, &ct, 128).is_err());
        }
    }
    pass(2, "EAX round trips + exhaustive bit corruption", t, 30);
}

// --- 3. ML-KEM-512 conformance -------------------------------------------

#[test]
fn criterion_03_mlkem_conformance() {
    let t = Instant::now();
    for line in include_str!("data/mlkem512_kat.txt").lines().filter(|l| !l.trim().is_empty()) {
        let f: Vec<Vec<u8>> = line.split_whitespace().map(|s| hex::decode(s).unwrap()).collect();
        assert_eq!(f.len(), 7);
        let d: [u8; 32] = f[0].as_slice().try_into().unwrap();
        let z: [u8; 32] = f[1].as_slice().try_into().unwrap();
        let m: [u8; 32] = f[2].as_slice().try_into().unwrap();
        let (ek, dk) = mlkem::keygen(&d, &z);
        assert_eq!(ek, f[3], "ek mismatch");
        assert_eq!(dk, f[4], "dk mismatch");
        let (ct, ss) = mlkem::encapsulate(&ek, &m);
        assert_eq!(ct, f[5], "ct mismatch");
        assert_eq!(ss.as_slice(), f[6].as_slice(), "secret mismatch");
        assert_eq!(mlkem::decapsulate(&dk, &ct).as_slice(), f[6].as_slice());
    }

    // 10,000 seeded encaps/decaps round trips across 20 keypairs.
    let mut r = rng(0x0303);
    for _ in 0..20 {
        let mut d = [0u8; 32];
        let mut z = [0u8; 32];
        r.fill_bytes(&mut d);
        r.fill_bytes(&mut z);
        let (ek, dk) = mlkem::keygen(&d, &z);
        for _ in 0..500 {
            let mut m = [0u8; 32];
            r.fill_bytes(&mut m);
            let (ct, ss) = mlkem::encapsulate(&ek, &m);
            assert_eq!(mlkem::decapsulate(&dk, &ct), ss);
        }
    }
    pass(3, "ML-KEM-512 KAT byte-exact + 10,000 round trips", t, 60);
}

// --- 4. NTT oracle --------------------------------------------------------

#[test]
fn criterion_04_ntt_vs_schoolbook() {
    use skylink::kem::mlkem::ntt::{ntt_forward, ntt_inverse, ntt_multiply};
    use skylink::kem::mlkem::poly::{Poly, N, Q};

    let t = Instant::now();
    let mut r = rng(0x0404);
    for _ in 0..100 {
        let mut a = Poly::zero();
        let mut b = Poly::zero();
        for i in 0..N {
            a.coeffs[i] = r.random_range(0..Q);
            b.coeffs[i] = r.random_range(0..Q);
        }

        // O(n^2) negacyclic convolution mod X^N + 1, coefficients mod q.
        let mut acc = [0i64; 256];
        for i in 0..N {
            for j in 0..N {
                let prod = i64::from(a.coeffs[i]) * i64::from(b.coeffs[j]);
                let k = i + j;
                if k < N {
                    acc[k] += prod;
                } else {
                    acc[k - N] -= prod;
                }
            }
        }
        let expected: Vec<u16> =
            acc.iter().map(|&v| (v.rem_euclid(i64::from(Q))) as u16).collect();

        let fast = ntt_inverse(&ntt_multiply(&ntt_forward(&a), &ntt_forward(&b)));
        assert_eq!(fast.coeffs.as_slice(), expected.as_slice());
    }
    pass(4, "NTT multiplication equals schoolbook oracle", t, 10);
}

// --- 5. Handshake / channel fault harnesses -------------------------------

/// Read side that XORs a mask into one byte at a chosen absolute offset.
struct BitFlip<S> {
    inner: S,
    offset: usize,
    mask: u8,
    seen: usize,
}

impl<S: Read> Read for BitFlip<S> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        if self.seen <= self.offset && self.offset < self.seen + n {
            buf[self.offset - self.seen] ^= self.mask;
        }
        self.seen += n;
        Ok(n)
    }
}

impl<S: Write> Write for BitFlip<S> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.inner.write(buf)
    }
    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

#[test]
fn criterion_05_handshake_fault_harnesses() {
    let t = Instant::now();

    // Clean handshakes complete for both schemes.
    for scheme in KemScheme::ALL {
        let (mut a, mut b) = UnixStream::pair().unwrap();
        let server =
            thread::spawn(move || handshake_server(&mut b, &KemScheme::ALL, &mut rng(1)).unwrap());
        let client = handshake_client(&mut a, &[scheme], &mut rng(2)).unwrap();
        let server = server.join().unwrap();
        assert_eq!(client.key_bytes(), server.key_bytes());
    }

    // 500 transcript-tamper faults: flip one bit inside the SERVER_HELLO
    // random field (stream offsets 11..27 on the client's inbound side), so
    // parsing succeeds but the two transcripts diverge. Every fault must be
    // reported as HandshakeTampered by at least one side.
    let mut tamper_detected = 0usize;
    for i in 0..500usize {
        let offset = 11 + (i % 16);
        let mask = 1u8 << (i % 8);
        let scheme = KemScheme::ALL[i % 2];
        let (a, mut b) = UnixStream::pair().unwrap();
        let server = thread::spawn(move || {
            handshake_server(&mut b, &KemScheme::ALL, &mut rng(100 + i as u64))
        });
        let mut tampered = BitFlip { inner: a, offset, mask, seen: 0 };
        let client = handshake_client(&mut tampered, &[scheme], &mut rng(200 + i as u64));
        let server = server.join().unwrap();
        assert!(client.is_err() && server.is_err(), "fault {i} went undetected");
        if matches!(client, Err(ChannelError::HandshakeTampered))
            || matches!(server, Err(ChannelError::HandshakeTampered))
        {
            tamper_detected += 1;
        }
    }
    assert_eq!(tamper_detected, 500, "not all tamper faults reported HandshakeTampered");

    // 500 frame-replay faults plus the 10,000-frame nonce-uniqueness sweep.
    let (mut a, mut b) = UnixStream::pair().unwrap();
    let server =
        thread::spawn(move || handshake_server(&mut b, &KemScheme::ALL, &mut rng(3)).unwrap());
    let mut client = handshake_client(&mut a, &[KemScheme::MlKem512], &mut rng(4)).unwrap();
    let mut server = server.join().unwrap();

    let mut replay_detected = 0usize;
    let mut nonces = std::collections::HashSet::new();
    for i in 0..10_000u64 {
        let frame = client.seal_frame(RecordType::Data, b"", &i.to_be_bytes()).unwrap();
        // (key, nonce) pairs are unique iff counters never repeat in-session.
        assert!(nonces.insert(frame.counter), "nonce reuse at frame {i}");
        assert_eq!(server.open_frame(&frame).unwrap(), i.to_be_bytes());
        if i < 500 {
            if matches!(server.open_frame(&frame), Err(ChannelError::ReplayDetected)) {
                replay_detected += 1;
            }
        }
    }
    assert_eq!(replay_detected, 500, "not all replays reported ReplayDetected");

    pass(5, "handshake tamper/replay harnesses, 1,000 faults, nonce sweep", t, 60);
}

// --- 6. End-to-end transfer -----------------------------------------------

#[test]
fn criterion_06_end_to_end_transfer() {
    let t = Instant::now();
    let storage = tempfile::tempdir().unwrap();
    let src = tempfile::tempdir().unwrap();
    let station = GroundStation::start(StationConfig::new("127.0.0.1:0", storage.path())).unwrap();
    let addr = station.local_addr().to_string();

    let mut handles = Vec::new();
    for (s, scheme) in KemScheme::ALL.into_iter().enumerate() {
        for i in 0..3usize {
            let path = src.path().join(format!("payload-{s}-{i}.bin"));
            let mut bytes = vec![0u8; 10 << 20];
            rng((s * 3 + i) as u64).fill_bytes(&mut bytes);
            std::fs::write(&path, &bytes).unwrap();
            let config = StationConfig::new(addr.clone(), storage.path());
            handles.push(thread::spawn(move || {
                let manifest = TransferManifest::from_file(&path, MediaKind::Video).unwrap();
                let report = run_uav_client(&config, &[manifest.clone()], scheme).unwrap();
                (manifest, report)
            }));
        }
    }
    let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    station.shutdown();

    for (manifest, report) in &results {
        let name = manifest.path.file_name().unwrap();
        let stored = storage.path().join(&report.metrics.run_id).join(name);
        let bytes = std::fs::read(&stored).unwrap();
        let digest: [u8; 32] = sha2::Sha256::digest(&bytes).into();
        assert_eq!(digest, manifest.digest, "stored digest mismatch for {name:?}");
    }
    pass(6, "3 concurrent clients x 10 MiB, both schemes, digests equal", t, 60);
}

// --- 7. Metrics schema ----------------------------------------------------

#[test]
fn criterion_07_metrics_schema() {
    let t = Instant::now();
    let out = tempfile::tempdir().unwrap();
    let code = skylink::cli::dispatch([
        "skylink",
        "bench",
        "--runs",
        "3",
        "--seed",
        "7",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "bench exited nonzero");

    let csv_path = out.path().join("metrics.csv");
    let raw = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(raw.lines().next().unwrap(), telemetry::METRICS_HEADER, "header mismatch");

    let records = telemetry::import_metrics_csv(&csv_path).unwrap();
    assert_eq!(records.len(), 6, "expected 3 runs x 2 schemes");
    for scheme in KemScheme::ALL {
        assert_eq!(records.iter().filter(|r| r.scheme == scheme.name()).count(), 3);
    }
    for r in &records {
        assert!(r.handshake_time_ms > 0.0, "handshake_time_ms not positive");
        assert!(r.encryption_time_s > 0.0, "encryption_time_s not positive");
        assert!(r.decryption_time_s > 0.0, "decryption_time_s not positive");
        assert!(r.connection_duration_s > 0.0, "connection_duration_s not positive");
        assert!(r.server_response_time_s > 0.0, "server_response_time_s not positive");
    }

    // Grouped report: the full 7-parameter grid appears once per scheme.
    let report = telemetry::comparison_report(&records);
    for scheme in KemScheme::ALL {
        assert!(report.contains(&format!("[{}", scheme.name())), "scheme missing from report");
    }
    for name in [
        "Handshake Time (ms)",
        "Encryption Time (s)",
        "Decryption Time (s)",
        "Connection Duration (s)",
        "Server Response Time (s)",
        "CPU Usage (%)",
        "Memory Usage (MB)",
    ] {
        assert_eq!(report.matches(name).count(), 2, "parameter {name} not listed per scheme");
    }
    pass(7, "bench CSV header + 7-parameter x 2-scheme grid", t, 120);
}

// --- 8. Dataset presets ---------------------------------------------------

#[test]
fn criterion_08_dataset_presets() {
    let t = Instant::now();
    let expected = [
        (1u32, 27_000usize, 0.60, 9_000usize, 0.70),
        (2, 27_000, 0.60, 9_000, 0.93),
        (3, 200_000, 0.70, 60_000, 0.70),
        (4, 200_000, 0.70, 60_000, 0.93),
    ];
    for (id, train_size, train_cf, test_size, test_cf) in expected {
        let mut config = trafficlab::preset(id).unwrap();
        config.seed = 42;
        let (train, test) = trafficlab::generate(&config);
        assert_eq!(train.len(), train_size, "experiment {id} train size");
        assert_eq!(test.len(), test_size, "experiment {id} test size");
        let ratio = |rows: &[trafficlab::TrafficRecord]| {
            rows.iter().filter(|r| r.label == 0).count() as f64 / rows.len() as f64
        };
        assert!((ratio(&train) - train_cf).abs() <= 0.005, "experiment {id} train ratio");
        assert!((ratio(&test) - test_cf).abs() <= 0.005, "experiment {id} test ratio");
    }

    // Same-seed regeneration is byte-identical on disk.
    let mut config = trafficlab::preset(1).unwrap();
    config.seed = 42;
    let dir = tempfile::tempdir().unwrap();
    let (a_path, b_path) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let (train_a, _) = trafficlab::generate(&config);
    trafficlab::write_dataset_csv(&train_a, &a_path).unwrap();
    let (train_b, _) = trafficlab::generate(&config);
    trafficlab::write_dataset_csv(&train_b, &b_path).unwrap();
    assert_eq!(std::fs::read(&a_path).unwrap(), std::fs::read(&b_path).unwrap());

    pass(8, "preset sizes/ratios exact, same-seed regeneration identical", t, 60);
}

// --- 9. AUC oracle --------------------------------------------------------

#[test]
fn criterion_09_auc_oracle() {
    let t = Instant::now();
    let mut r = rng(0x0909);
    for case in 0..200usize {
        let n = r.random_range(4..=40);
        // Coarse score grid forces plenty of ties.
        let scores: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..6)) / 5.0).collect();
        let mut labels: Vec<u8> = (0..n).map(|_| r.random_range(0..2) as u8).collect();
        if labels.iter().all(|&l| l == labels[0]) {
            labels[0] ^= 1;
        }

        let mut wins = 0.0f64;
        let mut pairs = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if labels[i] == 1 && labels[j] == 0 {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        let oracle = wins / pairs;
        let fast = ids::roc_auc(&scores, &labels).unwrap();
        assert!((fast - oracle).abs() < 1e-9, "case {case}: {fast} vs {oracle}");
    }
    pass(9, "roc_auc matches pairwise oracle on 200 tied datasets", t, 10);
}

// --- 10. IDS calibrated analogues -----------------------------------------

#[test]
fn criterion_10_ids_calibrated_analogues() {
    use ids::ModelKind;

    let t = Instant::now();
    let seeds = [11u64, 22, 33, 44, 55];
    let all = [ModelKind::LogisticRegression, ModelKind::GaussianNb, ModelKind::Gbdt];

    let mut exp1_lr = (0.0f64, 0.0f64);
    let mut exp4: std::collections::BTreeMap<&str, (f64, f64)> = Default::default();
    for &seed in &seeds {
        let r1 = ids::run_experiment(1, &[ModelKind::LogisticRegression], seed, 1.0).unwrap();
        exp1_lr.0 += r1[0].report.accuracy;
        exp1_lr.1 += r1[0].report.auc;

        for result in ids::run_experiment(4, &all, seed, 1.0).unwrap() {
            let entry = exp4.entry(result.kind.name()).or_insert((0.0, 0.0));
            entry.0 += result.report.accuracy;
            entry.1 += result.report.auc;
        }
    }
    let n = seeds.len() as f64;
    let (lr_acc, lr_auc) = (exp1_lr.0 / n, exp1_lr.1 / n);
    assert!(lr_acc >= 0.85, "experiment 1 LR accuracy {lr_acc:.4} < 0.85");
    assert!(lr_auc >= 0.90, "experiment 1 LR AUC {lr_auc:.4} < 0.90");

    let (gbdt_acc, gbdt_auc) = {
        let v = exp4["gbdt"];
        (v.0 / n, v.1 / n)
    };
    assert!(gbdt_acc >= 0.95, "experiment 4 GBDT accuracy {gbdt_acc:.4} < 0.95");
    assert!(gbdt_auc >= 0.90, "experiment 4 GBDT AUC {gbdt_auc:.4} < 0.90");

    // Class-imbalance sanity rule: beat the all-client baseline on Exp 4.
    for (name, (acc_sum, auc_sum)) in &exp4 {
        assert!(acc_sum / n > 0.93, "experiment 4 {name} does not beat 0.93 accuracy");
        assert!(auc_sum / n > 0.5, "experiment 4 {name} does not beat 0.5 AUC");
    }

    pass(10, "seed-averaged IDS scores clear calibrated thresholds", t, 600);
}

// --- 11. Degenerate handling ----------------------------------------------

#[test]
fn criterion_11_degenerate_inputs() {
    use ids::IdsError;

    let t = Instant::now();
    let row = |label: u8, x: f64| trafficlab::TrafficRecord {
        timestamp_s: 0.0,
        entity_id: format!("e{label}{x}"),
        message_size_bytes: x as u64,
        file_size_bytes: x as u64,
        connection_duration_s: x,
        data_volume_bytes: x as u64,
        label,
    };
    let mixed: Vec<_> = (0..8).map(|i| row((i % 2) as u8, f64::from(i + 1))).collect();
    let single: Vec<_> = (0..8).map(|i| row(0, f64::from(i + 1))).collect();

    assert!(matches!(ids::prepare(&[]), Err(IdsError::EmptyDataset)));
    assert!(matches!(ids::prepare(&single), Err(IdsError::SingleClassTraining)));

    let train = ids::prepare(&mixed).unwrap();
    let model = ids::train(
        ids::ModelKind::LogisticRegression,
        &train,
        &ids::Hyperparameters::default(),
    )
    .unwrap();
    assert!(matches!(
        ids::prepare_with_stats(&[], &train.stats),
        Err(IdsError::EmptyDataset)
    ));
    let single_eval = ids::prepare_with_stats(&single, &train.stats).unwrap();
    assert!(matches!(ids::evaluate(&model, &single_eval), Err(IdsError::SingleClassEval)));

    assert!(matches!(trafficlab::preset(5), Err(trafficlab::TrafficError::UnknownExperiment(5))));

    pass(11, "degenerate inputs return typed errors", t, 30);
}
