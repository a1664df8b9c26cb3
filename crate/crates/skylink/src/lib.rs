//! Secure UAV-to-ground-station communication stack.
//!
//! AES-EAX authenticated encryption keyed by a pluggable KEM (X25519 ECDH or
//! ML-KEM-512) over a framed client/server protocol, plus benchmark metric
//! capture and a synthetic-traffic intrusion-detection pipeline.

pub mod channel;
pub mod cli;
pub mod eax;
pub mod ids;
pub mod kem;
pub mod station;
pub mod telemetry;
pub mod trafficlab;
