//! Ground-station server and UAV client: chunked, digest-verified file
//! transfer over established secure sessions.

use crate::channel::{
    handshake_client, handshake_server, ChannelError, Frame, Record, RecordType, Session,
};
use crate::kem::KemScheme;
use crate::telemetry::{unix_now, MetricRecord};
use crate::trafficlab::LiveFrame;
use sha2::{Digest, Sha256};
use std::io::Write as _;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};
use thiserror::Error;

pub const DEFAULT_CHUNK_SIZE: usize = 65_536;
pub const MIN_CHUNK_SIZE: usize = 1 << 10;
pub const MAX_CHUNK_SIZE: usize = 1 << 20;

const FILE_HEADER_TAG: u8 = 0x01;
const CHUNK_TAG: u8 = 0x02;
const ACK_OK: u8 = 0x01;
const ACK_REJECTED: u8 = 0x00;

#[derive(Debug, Error)]
pub enum StationError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure { addr: String, source: std::io::Error },
    #[error("cannot connect to {addr}: {source}")]
    ConnectFailure { addr: String, source: std::io::Error },
    #[error("server rejected transfer (digest mismatch)")]
    TransferRejected,
    #[error("connection refused: server at capacity")]
    SessionLimit,
    #[error("protocol violation: {0}")]
    Protocol(&'static str),
    #[error("invalid chunk size {0} (allowed {MIN_CHUNK_SIZE}..={MAX_CHUNK_SIZE})")]
    BadChunkSize(usize),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MediaKind {
    Video,
    Audio,
    Image,
    Telemetry,
}

impl MediaKind {
    pub fn wire_id(self) -> u8 {
        match self {
            MediaKind::Video => 1,
            MediaKind::Audio => 2,
            MediaKind::Image => 3,
            MediaKind::Telemetry => 4,
        }
    }

    pub fn from_wire(id: u8) -> Option<Self> {
        match id {
            1 => Some(MediaKind::Video),
            2 => Some(MediaKind::Audio),
            3 => Some(MediaKind::Image),
            4 => Some(MediaKind::Telemetry),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferManifest {
    pub path: PathBuf,
    pub media_kind: MediaKind,
    pub chunk_size: usize,
    pub digest: [u8; 32],
}

impl TransferManifest {
    pub fn from_file(path: impl Into<PathBuf>, media_kind: MediaKind) -> Result<Self, StationError> {
        let path = path.into();
        let content = std::fs::read(&path)?;
        Ok(TransferManifest {
            path,
            media_kind,
            chunk_size: DEFAULT_CHUNK_SIZE,
            digest: Sha256::digest(&content).into(),
        })
    }

    fn validate(&self) -> Result<(), StationError> {
        if self.chunk_size < MIN_CHUNK_SIZE || self.chunk_size > MAX_CHUNK_SIZE {
            return Err(StationError::BadChunkSize(self.chunk_size));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StationConfig {
    pub address: String,
    pub schemes: Vec<KemScheme>,
    pub storage_dir: PathBuf,
    pub timeout_s: u64,
    pub max_sessions: usize,
    pub environment: String,
}

impl StationConfig {
    pub fn new(address: impl Into<String>, storage_dir: impl Into<PathBuf>) -> Self {
        StationConfig {
            address: address.into(),
            schemes: KemScheme::ALL.to_vec(),
            storage_dir: storage_dir.into(),
            timeout_s: 30,
            max_sessions: 16,
            environment: "loopback".into(),
        }
    }
}

/// Append-only sink shared by all server sessions.
#[derive(Debug, Default)]
pub struct StationSink {
    metrics: Mutex<Vec<MetricRecord>>,
    frames: Mutex<Vec<LiveFrame>>,
}

impl StationSink {
    pub fn push_metric(&self, record: MetricRecord) {
        self.metrics.lock().unwrap().push(record);
    }

    pub fn push_frame(&self, frame: LiveFrame) {
        self.frames.lock().unwrap().push(frame);
    }

    pub fn metrics(&self) -> Vec<MetricRecord> {
        self.metrics.lock().unwrap().clone()
    }

    pub fn frames(&self) -> Vec<LiveFrame> {
        self.frames.lock().unwrap().clone()
    }
}

pub struct GroundStation {
    local_addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    sink: Arc<StationSink>,
    accept_thread: Option<thread::JoinHandle<()>>,
}

impl GroundStation {
    /// Bind and serve in background threads until `shutdown()`.
    pub fn start(config: StationConfig) -> Result<GroundStation, StationError> {
        let listener = TcpListener::bind(&config.address).map_err(|source| {
            StationError::BindFailure { addr: config.address.clone(), source }
        })?;
        let local_addr = listener.local_addr()?;
        listener.set_nonblocking(true)?;
        let shutdown = Arc::new(AtomicBool::new(false));
        let sink = Arc::new(StationSink::default());
        let active = Arc::new(AtomicUsize::new(0));

        let accept_shutdown = Arc::clone(&shutdown);
        let accept_sink = Arc::clone(&sink);
        let accept_thread = thread::spawn(move || {
            let mut workers: Vec<thread::JoinHandle<()>> = Vec::new();
            while !accept_shutdown.load(Ordering::SeqCst) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        if active.load(Ordering::SeqCst) >= config.max_sessions {
                            refuse_connection(stream);
                            continue;
                        }
                        active.fetch_add(1, Ordering::SeqCst);
                        let config = config.clone();
                        let sink = Arc::clone(&accept_sink);
                        let active = Arc::clone(&active);
                        workers.push(thread::spawn(move || {
                            // per-connection errors are isolated by design
                            let _ = serve_connection(stream, &config, &sink);
                            active.fetch_sub(1, Ordering::SeqCst);
                        }));
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        thread::sleep(Duration::from_millis(5));
                    }
                    Err(_) => break,
                }
            }
            for w in workers {
                let _ = w.join();
            }
        });

        Ok(GroundStation { local_addr, shutdown, sink, accept_thread: Some(accept_thread) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub fn sink(&self) -> &StationSink {
        &self.sink
    }

    pub fn shutdown(mut self) -> Arc<StationSink> {
        self.shutdown.store(true, Ordering::SeqCst);
        if let Some(t) = self.accept_thread.take() {
            let _ = t.join();
        }
        Arc::clone(&self.sink)
    }
}

impl Drop for GroundStation {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        if let Some(t) = self.accept_thread.take() {
            let _ = t.join();
        }
    }
}

/// Blocking variant: serve until `shutdown` flips.
pub fn run_ground_station(
    config: StationConfig,
    shutdown: Arc<AtomicBool>,
) -> Result<Arc<StationSink>, StationError> {
    let station = GroundStation::start(config)?;
    while !shutdown.load(Ordering::SeqCst) {
        thread::sleep(Duration::from_millis(20));
    }
    Ok(station.shutdown())
}

fn refuse_connection(mut stream: TcpStream) {
    let _ = Record::new(RecordType::Close, Vec::new()).write_to(&mut stream);
}

struct IncomingFile {
    name: String,
    media_kind: MediaKind,
    expected_size: u64,
    digest: [u8; 32],
    buffer: Vec<u8>,
}

fn serve_connection(
    mut stream: TcpStream,
    config: &StationConfig,
    sink: &StationSink,
) -> Result<(), StationError> {
    stream.set_read_timeout(Some(Duration::from_secs(config.timeout_s)))?;
    stream.set_write_timeout(Some(Duration::from_secs(config.timeout_s)))?;
    let connected_at = Instant::now();

    let hs_start = Instant::now();
    let mut session = handshake_server(&mut stream, &config.schemes, &mut rand::rng())?;
    let handshake_ms = hs_start.elapsed().as_secs_f64() * 1000.0;

    let session_id = hex::encode(&session.transcript_hash()[..8]);
    let session_dir = config.storage_dir.join(&session_id);
    std::fs::create_dir_all(&session_dir)?;
    let receipt_path = session_dir.join("receipts.jsonl");

    let mut record = MetricRecord::new(&session_id, session.scheme().name(), &config.environment);
    record.handshake_time_ms = handshake_ms;
    let mut decryption_s = 0.0;
    let mut current: Option<IncomingFile> = None;

    loop {
        let wire = match Record::read_from(&mut stream) {
            Ok(r) => r,
            Err(ChannelError::Io(_)) | Err(ChannelError::Timeout) => break, // disconnect
            Err(e) => return Err(e.into()),
        };
        if wire.record_type == RecordType::Close && wire.body.is_empty() {
            break;
        }
        let frame = Frame::from_record(&wire)?;
        let open_start = Instant::now();
        let payload = session.open_frame(&frame)?;
        decryption_s += open_start.elapsed().as_secs_f64();

        sink.push_frame(LiveFrame {
            entity_id: session_id.clone(),
            timestamp_s: connected_at.elapsed().as_secs_f64(),
            payload_bytes: payload.len() as u64,
            file_size_bytes: current.as_ref().map_or(0, |f| f.expected_size),
            connection_duration_s: connected_at.elapsed().as_secs_f64(),
        });

        match frame.frame_type {
            RecordType::Close => break,
            RecordType::Data => {
                let tag = *frame.header_bytes.first().ok_or(StationError::Protocol("untagged frame"))?;
                match tag {
                    FILE_HEADER_TAG => {
                        if current.is_some() {
                            return Err(StationError::Protocol("file header mid-transfer"));
                        }
                        current = Some(parse_file_header(&frame.header_bytes)?);
                    }
                    CHUNK_TAG => {
                        let file =
                            current.as_mut().ok_or(StationError::Protocol("chunk before header"))?;
                        file.buffer.extend_from_slice(&payload);
                        if file.buffer.len() as u64 > file.expected_size {
                            return Err(StationError::Protocol("more bytes than declared"));
                        }
                    }
                    _ => return Err(StationError::Protocol("unknown frame tag")),
                }
                // 0-byte files complete right after their header
                if current.as_ref().is_some_and(|f| f.buffer.len() as u64 == f.expected_size) {
                    let file = current.take().unwrap();
                    let ok = finish_file(&file, &session_dir, &receipt_path)?;
                    let status = if ok { ACK_OK } else { ACK_REJECTED };
                    let ack = session.seal_frame(RecordType::Ack, &[], &[status])?;
                    stream.write_all(&ack.encode())?;
                }
            }
            _ => return Err(StationError::Protocol("unexpected frame type")),
        }
    }
    // partial transfer (if any) is discarded with `current`

    record.decryption_time_s = decryption_s;
    record.connection_duration_s = connected_at.elapsed().as_secs_f64();
    record.timestamp = unix_now();
    sink.push_metric(record);
    Ok(())
}

fn parse_file_header(header: &[u8]) -> Result<IncomingFile, StationError> {
    let bad = StationError::Protocol("malformed file header");
    // tag | name_len u16 | name | kind | size u64 | chunk u32 | digest 32
    if header.len() < 3 {
        return Err(bad);
    }
    let name_len = u16::from_be_bytes([header[1], header[2]]) as usize;
    let rest = &header[3..];
    if rest.len() != name_len + 1 + 8 + 4 + 32 {
        return Err(bad);
    }
    let name = String::from_utf8(rest[..name_len].to_vec())
        .map_err(|_| StationError::Protocol("non-utf8 filename"))?;
    if name.contains('/') || name.contains("..") {
        return Err(StationError::Protocol("unsafe filename"));
    }
    let mut off = name_len;
    let media_kind =
        MediaKind::from_wire(rest[off]).ok_or(StationError::Protocol("unknown media kind"))?;
    off += 1;
    let expected_size = u64::from_be_bytes(rest[off..off + 8].try_into().unwrap());
    off += 8;
    let chunk_size = u32::from_be_bytes(rest[off..off + 4].try_into().unwrap()) as usize;
    if !(MIN_CHUNK_SIZE..=MAX_CHUNK_SIZE).contains(&chunk_size) {
        return Err(StationError::BadChunkSize(chunk_size));
    }
    off += 4;
    let digest: [u8; 32] = rest[off..off + 32].try_into().unwrap();
    Ok(IncomingFile { name, media_kind, expected_size, digest, buffer: Vec::new() })
}

fn encode_file_header(name: &str, manifest: &TransferManifest, size: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(48 + name.len());
    out.push(FILE_HEADER_TAG);
    out.extend_from_slice(&(name.len() as u16).to_be_bytes());
    out.extend_from_slice(name.as_bytes());
    out.push(manifest.media_kind.wire_id());
    out.extend_from_slice(&size.to_be_bytes());
    out.extend_from_slice(&(manifest.chunk_size as u32).to_be_bytes());
    out.extend_from_slice(&manifest.digest);
    out
}

fn finish_file(
    file: &IncomingFile,
    session_dir: &Path,
    receipt_path: &Path,
) -> Result<bool, StationError> {
    let started_at = unix_now();
    let actual: [u8; 32] = Sha256::digest(&file.buffer).into();
    if actual != file.digest {
        return Ok(false);
    }
    std::fs::write(session_dir.join(&file.name), &file.buffer)?;
    let receipt = serde_json::json!({
        "file": file.name,
        "kind": file.media_kind,
        "bytes": file.expected_size,
        "digest": hex::encode(file.digest),
        "started_at": started_at,
        "finished_at": unix_now(),
    });
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(receipt_path)?;
    writeln!(f, "{receipt}")?;
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FileTransfer {
    pub name: String,
    pub bytes: u64,
    pub elapsed_s: f64,
    pub response_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub scheme: KemScheme,
    pub files: Vec<FileTransfer>,
    pub metrics: MetricRecord,
}

/// Connect, transfer every manifest, and close. Client-side timings feed the
/// returned MetricRecord (decryption time stays zero: the client only seals).
pub fn run_uav_client(
    config: &StationConfig,
    manifests: &[TransferManifest],
    scheme: KemScheme,
) -> Result<TransferReport, StationError> {
    for m in manifests {
        m.validate()?;
    }
    let addr: SocketAddr = config
        .address
        .parse()
        .map_err(|e| StationError::ConnectFailure {
            addr: config.address.clone(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidInput, format!("{e}")),
        })?;
    let timeout = Duration::from_secs(config.timeout_s);
    let mut stream = TcpStream::connect_timeout(&addr, timeout)
        .map_err(|source| StationError::ConnectFailure { addr: config.address.clone(), source })?;
    stream.set_read_timeout(Some(timeout))?;
    stream.set_write_timeout(Some(timeout))?;

    let connected_at = Instant::now();
    let hs_start = Instant::now();
    let mut session = handshake_client(&mut stream, &[scheme], &mut rand::rng())?;
    let handshake_ms = hs_start.elapsed().as_secs_f64() * 1000.0;

    let mut record = MetricRecord::new(
        hex::encode(&session.transcript_hash()[..8]),
        scheme.name(),
        &config.environment,
    );
    record.handshake_time_ms = handshake_ms;

    let mut files = Vec::with_capacity(manifests.len());
    let mut encryption_s = 0.0;
    let mut response_s = 0.0;
    for manifest in manifests {
        let content = std::fs::read(&manifest.path)?;
        let name = manifest
            .path
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or(StationError::Protocol("manifest path has no filename"))?;
        let file_start = Instant::now();

        let header = encode_file_header(name, manifest, content.len() as u64);
        let mut seal = |session: &mut Session, hdr: &[u8], payload: &[u8]| {
            let t = Instant::now();
            let frame = session.seal_frame(RecordType::Data, hdr, payload);
            encryption_s += t.elapsed().as_secs_f64();
            frame
        };
        stream.write_all(&seal(&mut session, &header, &[])?.encode())?;
        for chunk in content.chunks(manifest.chunk_size) {
            stream.write_all(&seal(&mut session, &[CHUNK_TAG], chunk)?.encode())?;
        }
        stream.flush()?;

        let ack_record = Record::read_from(&mut stream)?;
        let ack = Frame::from_record(&ack_record)?;
        if ack.frame_type != RecordType::Ack {
            return Err(StationError::Protocol("expected ACK"));
        }
        let status = session.open_frame(&ack)?;
        if status.as_slice() != [ACK_OK] {
            return Err(StationError::TransferRejected);
        }
        let elapsed = file_start.elapsed().as_secs_f64();
        response_s += elapsed;
        files.push(FileTransfer {
            name: name.to_string(),
            bytes: content.len() as u64,
            elapsed_s: elapsed,
            response_time_s: elapsed,
        });
    }

    let close = session.seal_frame(RecordType::Close, &[], &[])?;
    stream.write_all(&close.encode())?;

    record.encryption_time_s = encryption_s;
    record.server_response_time_s = response_s;
    record.connection_duration_s = connected_at.elapsed().as_secs_f64();
    record.timestamp = unix_now();
    Ok(TransferReport { scheme, files, metrics: record })
}

/// In-process loopback round trip; returns the stage name on failure.
pub fn transfer_roundtrip_check(path: &Path, scheme: KemScheme) -> Result<(), String> {
    let storage = tempfile::tempdir().map_err(|e| format!("tempdir: {e}"))?;
    let server_config = StationConfig::new("127.0.0.1:0", storage.path());
    let station = GroundStation::start(server_config).map_err(|e| format!("start: {e}"))?;

    let manifest = TransferManifest::from_file(path, MediaKind::Telemetry)
        .map_err(|e| format!("manifest: {e}"))?;
    let mut client_config = StationConfig::new(station.local_addr().to_string(), storage.path());
    client_config.timeout_s = 30;
    run_uav_client(&client_config, &[manifest.clone()], scheme)
        .map_err(|e| format!("transfer: {e}"))?;

    // find the stored copy and compare digests
    let name = path.file_name().unwrap().to_str().unwrap();
    let sink = station.shutdown();
    drop(sink);
    let mut found = false;
    for entry in std::fs::read_dir(storage.path()).map_err(|e| format!("readdir: {e}"))? {
        let dir = entry.map_err(|e| format!("readdir: {e}"))?.path();
        let candidate = dir.join(name);
        if candidate.is_file() {
            let bytes = std::fs::read(&candidate).map_err(|e| format!("read: {e}"))?;
            let digest: [u8; 32] = Sha256::digest(&bytes).into();
            if digest != manifest.digest {
                return Err("verify: stored digest differs".into());
            }
            found = true;
        }
    }
    if !found {
        return Err("verify: stored file missing".into());
    }
    Ok(())
}
