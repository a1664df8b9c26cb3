//! Handshake and record protocol binding the KEM to AES-EAX: negotiate a
//! scheme, encapsulate, derive directional session keys, seal and open frames.

mod handshake;
pub mod wire;

pub use handshake::{handshake_client, handshake_server};
pub use wire::{Record, RecordType};

use crate::eax::{eax_decrypt, eax_encrypt, EaxError, EaxInputs, EaxKey};
use crate::kem::{KemScheme, SharedSecret};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MAX_PAYLOAD_LEN: usize = 1 << 24;
pub const TAU_BITS: usize = 128;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("no mutually supported KEM scheme")]
    SchemeRejected,
    #[error("handshake transcript tampered or keys disagree")]
    HandshakeTampered,
    #[error("malformed hello: {0}")]
    MalformedHello(&'static str),
    #[error("malformed frame: {0}")]
    MalformedFrame(&'static str),
    #[error("frame counter not newer than last seen (replay)")]
    ReplayDetected,
    #[error("frame failed authentication")]
    AuthenticationFailed,
    #[error("session closed")]
    SessionClosed,
    #[error("send counter exhausted")]
    CounterExhausted,
    #[error("nonce reuse attempt blocked")]
    NonceReuse,
    #[error("payload exceeds {MAX_PAYLOAD_LEN} bytes")]
    PayloadTooLarge,
    #[error("peer timed out")]
    Timeout,
    #[error("unexpected record type")]
    UnexpectedRecord,
    #[error(transparent)]
    Io(std::io::Error),
}

impl From<std::io::Error> for ChannelError {
    fn from(err: std::io::Error) -> Self {
        match err.kind() {
            std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut => ChannelError::Timeout,
            _ => ChannelError::Io(err),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Client,
    Server,
}

impl Role {
    fn direction_byte(self) -> u8 {
        match self {
            Role::Client => 0x01, // client-to-server
            Role::Server => 0x02,
        }
    }
}

/// Running hash over all handshake bytes, in the order sent/received.
#[derive(Clone)]
pub struct HandshakeTranscript {
    hasher: Sha256,
}

impl HandshakeTranscript {
    pub fn new() -> Self {
        HandshakeTranscript { hasher: Sha256::new() }
    }

    pub fn absorb(&mut self, record_bytes: &[u8]) {
        self.hasher.update(record_bytes);
    }

    pub fn hash(&self) -> [u8; 32] {
        self.hasher.clone().finalize().into()
    }
}

impl Default for HandshakeTranscript {
    fn default() -> Self {
        Self::new()
    }
}

/// key_c2s = SHA-256(secret || transcript_hash || 0x01)[..16],
/// key_s2c = SHA-256(secret || transcript_hash || 0x02)[..16].
pub fn derive_session_keys(
    secret: &SharedSecret,
    transcript_hash: &[u8; 32],
) -> ([u8; 16], [u8; 16]) {
    let derive = |label: u8| -> [u8; 16] {
        let mut h = Sha256::new();
        h.update(secret.0);
        h.update(transcript_hash);
        h.update([label]);
        h.finalize()[..16].try_into().unwrap()
    };
    (derive(0x01), derive(0x02))
}

/// A sealed frame as carried on the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub frame_type: RecordType,
    pub counter: u64,
    pub header_bytes: Vec<u8>,
    pub body: Vec<u8>,
}

impl Frame {
    pub fn encode(&self) -> Vec<u8> {
        Record::new(self.frame_type, self.encode_body()).encode()
    }

    pub fn encode_body(&self) -> Vec<u8> {
        let mut body = Vec::with_capacity(10 + self.header_bytes.len() + self.body.len());
        body.extend_from_slice(&self.counter.to_be_bytes());
        wire::put_u16(&mut body, self.header_bytes.len() as u16);
        body.extend_from_slice(&self.header_bytes);
        body.extend_from_slice(&self.body);
        body
    }

    pub fn decode(bytes: &[u8]) -> Result<Frame, ChannelError> {
        let record = Record::decode(bytes)?;
        Frame::from_record(&record)
    }

    pub fn from_record(record: &Record) -> Result<Frame, ChannelError> {
        let body = &record.body;
        let mut off = 0usize;
        let counter = wire::get_u64(body, &mut off)?;
        let hdr_len = wire::get_u16(body, &mut off)? as usize;
        let header_bytes = wire::get_bytes(body, &mut off, hdr_len)?.to_vec();
        let eax_body = body[off..].to_vec();
        if eax_body.len() < TAU_BITS / 8 {
            return Err(ChannelError::MalformedFrame("body shorter than tag"));
        }
        Ok(Frame { frame_type: record.record_type, counter, header_bytes, body: eax_body })
    }
}

/// An established secure session.
pub struct Session {
    scheme: KemScheme,
    role: Role,
    key_c2s: EaxKey,
    key_s2c: EaxKey,
    key_bytes: ([u8; 16], [u8; 16]),
    send_counter: u64,
    recv_counter: u64,
    last_sealed: Option<u64>,
    transcript_hash: [u8; 32],
    closed: bool,
}

impl Session {
    pub(crate) fn new(
        scheme: KemScheme,
        role: Role,
        key_c2s: [u8; 16],
        key_s2c: [u8; 16],
        transcript_hash: [u8; 32],
    ) -> Self {
        Session {
            scheme,
            role,
            key_c2s: EaxKey::new(&key_c2s).unwrap(),
            key_s2c: EaxKey::new(&key_s2c).unwrap(),
            key_bytes: (key_c2s, key_s2c),
            send_counter: 0,
            recv_counter: 0,
            last_sealed: None,
            transcript_hash,
            closed: false,
        }
    }

    pub fn scheme(&self) -> KemScheme {
        self.scheme
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn transcript_hash(&self) -> &[u8; 32] {
        &self.transcript_hash
    }

    pub fn key_bytes(&self) -> ([u8; 16], [u8; 16]) {
        self.key_bytes
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn close(&mut self) {
        self.closed = true;
    }

    fn send_key(&self) -> &EaxKey {
        match self.role {
            Role::Client => &self.key_c2s,
            Role::Server => &self.key_s2c,
        }
    }

    fn recv_key(&self) -> &EaxKey {
        match self.role {
            Role::Client => &self.key_s2c,
            Role::Server => &self.key_c2s,
        }
    }

    fn nonce(direction: u8, counter: u64) -> [u8; 16] {
        let mut nonce = [0u8; 16];
        nonce[0] = direction;
        nonce[8..].copy_from_slice(&counter.to_be_bytes());
        nonce
    }

    fn eax_header(frame_type: RecordType, counter: u64, header_bytes: &[u8]) -> Vec<u8> {
        let mut hdr = Vec::with_capacity(9 + header_bytes.len());
        hdr.push(frame_type as u8);
        hdr.extend_from_slice(&counter.to_be_bytes());
        hdr.extend_from_slice(header_bytes);
        hdr
    }

    /// Seal a payload into a frame. The counter is checked against the last
    /// sealed value before any encryption happens.
    pub fn seal_frame(
        &mut self,
        frame_type: RecordType,
        header_bytes: &[u8],
        payload: &[u8],
    ) -> Result<Frame, ChannelError> {
        if self.closed {
            return Err(ChannelError::SessionClosed);
        }
        if payload.len() > MAX_PAYLOAD_LEN {
            return Err(ChannelError::PayloadTooLarge);
        }
        let counter = self.send_counter;
        if let Some(last) = self.last_sealed {
            if counter <= last {
                return Err(ChannelError::NonceReuse);
            }
        }
        if counter == u64::MAX {
            self.closed = true;
            return Err(ChannelError::CounterExhausted);
        }

        let nonce = Self::nonce(self.role.direction_byte(), counter);
        let header = Self::eax_header(frame_type, counter, header_bytes);
        let mut inputs = EaxInputs::new(&nonce, &header, payload);
        inputs.tau_bits = TAU_BITS;
        let body = eax_encrypt(self.send_key(), &inputs).expect("valid EAX inputs");

        self.last_sealed = Some(counter);
        self.send_counter = counter + 1;
        Ok(Frame { frame_type, counter, header_bytes: header_bytes.to_vec(), body })
    }

    /// Open a received frame. Accepts only counters strictly greater than the
    /// last accepted one and a valid tag.
    pub fn open_frame(&mut self, frame: &Frame) -> Result<Vec<u8>, ChannelError> {
        if self.closed {
            return Err(ChannelError::SessionClosed);
        }
        if let Some(last) = self.last_opened() {
            if frame.counter <= last {
                return Err(ChannelError::ReplayDetected);
            }
        }
        let peer = match self.role {
            Role::Client => Role::Server,
            Role::Server => Role::Client,
        };
        let nonce = Self::nonce(peer.direction_byte(), frame.counter);
        let header = Self::eax_header(frame.frame_type, frame.counter, &frame.header_bytes);
        match eax_decrypt(self.recv_key(), &nonce, &header, &frame.body, TAU_BITS) {
            Ok(payload) => {
                self.recv_counter = frame.counter + 1;
                Ok(payload)
            }
            Err(EaxError::Invalid) => Err(ChannelError::AuthenticationFailed),
            Err(_) => Err(ChannelError::MalformedFrame("bad EAX parameters")),
        }
    }

    fn last_opened(&self) -> Option<u64> {
        self.recv_counter.checked_sub(1)
    }

    /// Build a session from fixed keys, bypassing the handshake. Bench and
    /// harness use only.
    #[doc(hidden)]
    pub fn new_for_bench(
        key_c2s: [u8; 16],
        key_s2c: [u8; 16],
        transcript_hash: [u8; 32],
        client: bool,
    ) -> Self {
        let role = if client { Role::Client } else { Role::Server };
        Session::new(KemScheme::EcdhKem, role, key_c2s, key_s2c, transcript_hash)
    }

    /// Rewind the send counter. Only useful to demonstrate that the
    /// nonce-reuse guard refuses to seal; a rewound counter is never accepted.
    #[doc(hidden)]
    pub fn force_send_counter(&mut self, counter: u64) {
        self.send_counter = counter;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> (Session, Session) {
        let th = [7u8; 32];
        let client = Session::new(KemScheme::EcdhKem, Role::Client, [1; 16], [2; 16], th);
        let server = Session::new(KemScheme::EcdhKem, Role::Server, [1; 16], [2; 16], th);
        (client, server)
    }

    #[test]
    fn seal_open_roundtrip() {
        let (mut c, mut s) = pair();
        let frame = c.seal_frame(RecordType::Data, b"hdr", b"payload").unwrap();
        assert_eq!(s.open_frame(&frame).unwrap(), b"payload");
    }

    #[test]
    fn consecutive_counters_and_distinct_nonces() {
        let (mut c, _) = pair();
        let f1 = c.seal_frame(RecordType::Data, b"", b"a").unwrap();
        let f2 = c.seal_frame(RecordType::Data, b"", b"b").unwrap();
        assert_eq!(f2.counter, f1.counter + 1);
        assert_ne!(
            Session::nonce(0x01, f1.counter),
            Session::nonce(0x01, f2.counter)
        );
    }

    #[test]
    fn replay_rejected() {
        let (mut c, mut s) = pair();
        let frame = c.seal_frame(RecordType::Data, b"", b"x").unwrap();
        s.open_frame(&frame).unwrap();
        assert!(matches!(s.open_frame(&frame), Err(ChannelError::ReplayDetected)));
    }

    #[test]
    fn forced_counter_reuse_blocked_before_encryption() {
        let (mut c, _) = pair();
        c.seal_frame(RecordType::Data, b"", b"x").unwrap();
        c.force_send_counter(0);
        assert!(matches!(
            c.seal_frame(RecordType::Data, b"", b"y"),
            Err(ChannelError::NonceReuse)
        ));
    }

    #[test]
    fn corrupted_body_fails_authentication() {
        let (mut c, mut s) = pair();
        let mut frame = c.seal_frame(RecordType::Data, b"h", b"payload").unwrap();
        frame.body[3] ^= 0x40;
        assert!(matches!(s.open_frame(&frame), Err(ChannelError::AuthenticationFailed)));
    }

    #[test]
    fn frame_codec_roundtrip() {
        let frame = Frame {
            frame_type: RecordType::Data,
            counter: 42,
            header_bytes: b"meta".to_vec(),
            body: vec![0u8; 20],
        };
        assert_eq!(Frame::decode(&frame.encode()).unwrap(), frame);
    }

    #[test]
    fn derive_keys_directional_and_sensitive() {
        let secret = SharedSecret([9u8; 32]);
        let th = [1u8; 32];
        let (c2s, s2c) = derive_session_keys(&secret, &th);
        assert_ne!(c2s, s2c);
        let mut th2 = th;
        th2[0] ^= 1;
        let (c2s2, s2c2) = derive_session_keys(&secret, &th2);
        assert_ne!(c2s, c2s2);
        assert_ne!(s2c, s2c2);
    }

    #[test]
    fn payload_cap_enforced() {
        let (mut c, _) = pair();
        let big = vec![0u8; MAX_PAYLOAD_LEN + 1];
        assert!(matches!(
            c.seal_frame(RecordType::Data, b"", &big),
            Err(ChannelError::PayloadTooLarge)
        ));
    }
}
