//! Scheme negotiation and key establishment over any byte stream.
//!
//! Flow: CLIENT_HELLO (offered schemes + random) -> SERVER_HELLO (chosen
//! scheme + random + public key) -> KEM_CIPHERTEXT -> FINISHED from each side
//! carrying the transcript hash under the freshly derived keys.

use super::wire::{self, Record, RecordType};
use super::{derive_session_keys, ChannelError, Frame, HandshakeTranscript, Role, Session};
use crate::kem::{kem_decapsulate, kem_encapsulate, kem_keygen, KemScheme};
use rand::Rng;
use std::io::{Read, Write};

const RANDOM_LEN: usize = 16;

fn send_record<W: Write>(
    stream: &mut W,
    transcript: &mut HandshakeTranscript,
    record: &Record,
) -> Result<(), ChannelError> {
    let bytes = record.encode();
    transcript.absorb(&bytes);
    stream.write_all(&bytes)?;
    stream.flush()?;
    Ok(())
}

fn recv_record<R: Read>(
    stream: &mut R,
    transcript: &mut HandshakeTranscript,
    expected: RecordType,
) -> Result<Record, ChannelError> {
    let record = Record::read_from(stream)?;
    if record.record_type != expected {
        return Err(ChannelError::UnexpectedRecord);
    }
    transcript.absorb(&record.encode());
    Ok(record)
}

fn seal_finished(session: &mut Session) -> Result<Frame, ChannelError> {
    let th = *session.transcript_hash();
    session.seal_frame(RecordType::Finished, &[], &th)
}

fn verify_finished(session: &mut Session, record: &Record) -> Result<(), ChannelError> {
    let frame = Frame::from_record(record).map_err(|_| ChannelError::HandshakeTampered)?;
    if frame.frame_type != RecordType::Finished {
        return Err(ChannelError::UnexpectedRecord);
    }
    let payload = session.open_frame(&frame).map_err(|_| ChannelError::HandshakeTampered)?;
    if payload != session.transcript_hash() {
        return Err(ChannelError::HandshakeTampered);
    }
    Ok(())
}

pub fn handshake_client<S: Read + Write>(
    stream: &mut S,
    offered: &[KemScheme],
    rng: &mut dyn Rng,
) -> Result<Session, ChannelError> {
    if offered.is_empty() {
        return Err(ChannelError::SchemeRejected);
    }
    let mut transcript = HandshakeTranscript::new();

    let mut hello = Vec::with_capacity(1 + offered.len() + RANDOM_LEN);
    hello.push(offered.len() as u8);
    for scheme in offered {
        hello.push(scheme.wire_id());
    }
    let mut random = [0u8; RANDOM_LEN];
    rng.fill_bytes(&mut random);
    hello.extend_from_slice(&random);
    send_record(stream, &mut transcript, &Record::new(RecordType::ClientHello, hello))?;

    let server_hello = recv_record(stream, &mut transcript, RecordType::ServerHello)?;
    let body = &server_hello.body;
    let mut off = 0usize;
    let scheme_id = *wire::get_bytes(body, &mut off, 1)
        .map_err(|_| ChannelError::MalformedHello("truncated server hello"))?
        .first()
        .unwrap();
    let scheme = KemScheme::from_wire(scheme_id)
        .ok_or(ChannelError::MalformedHello("unknown scheme id"))?;
    if !offered.contains(&scheme) {
        return Err(ChannelError::SchemeRejected);
    }
    wire::get_bytes(body, &mut off, RANDOM_LEN)
        .map_err(|_| ChannelError::MalformedHello("truncated server random"))?;
    let pk_len = wire::get_u16(body, &mut off)
        .map_err(|_| ChannelError::MalformedHello("truncated key length"))? as usize;
    let public_key = wire::get_bytes(body, &mut off, pk_len)
        .map_err(|_| ChannelError::MalformedHello("truncated public key"))?
        .to_vec();

    let (ct, secret) = kem_encapsulate(scheme, &public_key, rng)
        .map_err(|_| ChannelError::MalformedHello("unusable public key"))?;
    let mut ct_body = Vec::with_capacity(2 + ct.bytes.len());
    wire::put_u16(&mut ct_body, ct.bytes.len() as u16);
    ct_body.extend_from_slice(&ct.bytes);
    send_record(stream, &mut transcript, &Record::new(RecordType::KemCiphertext, ct_body))?;

    let th = transcript.hash();
    let (key_c2s, key_s2c) = derive_session_keys(&secret, &th);
    let mut session = Session::new(scheme, Role::Client, key_c2s, key_s2c, th);

    let finished = seal_finished(&mut session)?;
    let bytes = Record::new(RecordType::Finished, finished.encode_body()).encode();
    stream.write_all(&bytes)?;
    stream.flush()?;

    let server_finished = Record::read_from(stream)?;
    verify_finished(&mut session, &server_finished)?;
    Ok(session)
}

pub fn handshake_server<S: Read + Write>(
    stream: &mut S,
    allowed: &[KemScheme],
    rng: &mut dyn Rng,
) -> Result<Session, ChannelError> {
    let mut transcript = HandshakeTranscript::new();

    let hello = recv_record(stream, &mut transcript, RecordType::ClientHello)?;
    let body = &hello.body;
    let mut off = 0usize;
    let n = *wire::get_bytes(body, &mut off, 1)
        .map_err(|_| ChannelError::MalformedHello("empty client hello"))?
        .first()
        .unwrap() as usize;
    if n == 0 {
        return Err(ChannelError::MalformedHello("no schemes offered"));
    }
    let ids = wire::get_bytes(body, &mut off, n)
        .map_err(|_| ChannelError::MalformedHello("truncated scheme list"))?
        .to_vec();
    wire::get_bytes(body, &mut off, RANDOM_LEN)
        .map_err(|_| ChannelError::MalformedHello("truncated client random"))?;

    // First offered scheme that we also allow wins.
    let scheme = ids
        .iter()
        .filter_map(|id| KemScheme::from_wire(*id))
        .find(|s| allowed.contains(s));
    let scheme = match scheme {
        Some(s) => s,
        None => {
            let _ = Record::new(RecordType::Close, Vec::new()).write_to(stream);
            return Err(ChannelError::SchemeRejected);
        }
    };

    let keypair = kem_keygen(scheme, rng);
    let mut sh = Vec::with_capacity(1 + RANDOM_LEN + 2 + keypair.public_key.len());
    sh.push(scheme.wire_id());
    let mut random = [0u8; RANDOM_LEN];
    rng.fill_bytes(&mut random);
    sh.extend_from_slice(&random);
    wire::put_u16(&mut sh, keypair.public_key.len() as u16);
    sh.extend_from_slice(&keypair.public_key);
    send_record(stream, &mut transcript, &Record::new(RecordType::ServerHello, sh))?;

    let ct_record = recv_record(stream, &mut transcript, RecordType::KemCiphertext)?;
    let body = &ct_record.body;
    let mut off = 0usize;
    let ct_len = wire::get_u16(body, &mut off)
        .map_err(|_| ChannelError::MalformedFrame("truncated ciphertext length"))? as usize;
    let ct = wire::get_bytes(body, &mut off, ct_len)
        .map_err(|_| ChannelError::MalformedFrame("truncated ciphertext"))?;
    let secret = kem_decapsulate(scheme, &keypair.secret_key, ct)
        .map_err(|_| ChannelError::MalformedFrame("undecapsulatable ciphertext"))?;

    let th = transcript.hash();
    let (key_c2s, key_s2c) = derive_session_keys(&secret, &th);
    let mut session = Session::new(scheme, Role::Server, key_c2s, key_s2c, th);

    let client_finished = Record::read_from(stream)?;
    verify_finished(&mut session, &client_finished)?;

    let finished = seal_finished(&mut session)?;
    let bytes = Record::new(RecordType::Finished, finished.encode_body()).encode();
    stream.write_all(&bytes)?;
    stream.flush()?;
    Ok(session)
}
