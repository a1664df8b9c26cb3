//! Bit-exact wire format.
//!
//! All integers big-endian: magic "SUC1" (4) || version u8=0x01 || type u8 ||
//! length u32 || body. Max frame length 16 MiB.

use super::ChannelError;
use std::io::{Read, Write};

pub const MAGIC: [u8; 4] = *b"SUC1";
pub const VERSION: u8 = 0x01;
pub const MAX_BODY_LEN: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum RecordType {
    ClientHello = 0x01,
    ServerHello = 0x02,
    KemCiphertext = 0x03,
    Finished = 0x04,
    Data = 0x10,
    Ack = 0x11,
    Close = 0x1f,
}

impl RecordType {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x01 => Some(RecordType::ClientHello),
            0x02 => Some(RecordType::ServerHello),
            0x03 => Some(RecordType::KemCiphertext),
            0x04 => Some(RecordType::Finished),
            0x10 => Some(RecordType::Data),
            0x11 => Some(RecordType::Ack),
            0x1f => Some(RecordType::Close),
            _ => None,
        }
    }
}

/// One wire record: header plus raw body bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub record_type: RecordType,
    pub body: Vec<u8>,
}

impl Record {
    pub fn new(record_type: RecordType, body: Vec<u8>) -> Self {
        Record { record_type, body }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(10 + self.body.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.record_type as u8);
        out.extend_from_slice(&(self.body.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.body);
        out
    }

    /// Decode from a full byte buffer; rejects bad magic, unknown version or
    /// type, oversize declared length, and trailing bytes.
    pub fn decode(bytes: &[u8]) -> Result<Record, ChannelError> {
        if bytes.len() < 10 {
            return Err(ChannelError::MalformedFrame("short record"));
        }
        let (hdr, rest) = bytes.split_at(10);
        if hdr[..4] != MAGIC {
            return Err(ChannelError::MalformedFrame("bad magic"));
        }
        if hdr[4] != VERSION {
            return Err(ChannelError::MalformedFrame("unknown version"));
        }
        let record_type = RecordType::from_byte(hdr[5])
            .ok_or(ChannelError::MalformedFrame("unknown record type"))?;
        let len = u32::from_be_bytes(hdr[6..10].try_into().unwrap()) as usize;
        if len > MAX_BODY_LEN {
            return Err(ChannelError::MalformedFrame("length exceeds 16 MiB cap"));
        }
        if rest.len() != len {
            return Err(ChannelError::MalformedFrame("length mismatch"));
        }
        Ok(Record { record_type, body: rest.to_vec() })
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<(), ChannelError> {
        w.write_all(&self.encode())?;
        w.flush()?;
        Ok(())
    }

    /// Read one record from a stream. The length is validated against the
    /// 16 MiB cap before the body is allocated.
    pub fn read_from(r: &mut impl Read) -> Result<Record, ChannelError> {
        let mut hdr = [0u8; 10];
        r.read_exact(&mut hdr)?;
        if hdr[..4] != MAGIC {
            return Err(ChannelError::MalformedFrame("bad magic"));
        }
        if hdr[4] != VERSION {
            return Err(ChannelError::MalformedFrame("unknown version"));
        }
        let record_type = RecordType::from_byte(hdr[5])
            .ok_or(ChannelError::MalformedFrame("unknown record type"))?;
        let len = u32::from_be_bytes(hdr[6..10].try_into().unwrap()) as usize;
        if len > MAX_BODY_LEN {
            return Err(ChannelError::MalformedFrame("length exceeds 16 MiB cap"));
        }
        let mut body = vec![0u8; len];
        r.read_exact(&mut body)?;
        Ok(Record { record_type, body })
    }
}

pub(crate) fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_be_bytes());
}

pub(crate) fn get_u16(bytes: &[u8], off: &mut usize) -> Result<u16, ChannelError> {
    let v = bytes
        .get(*off..*off + 2)
        .ok_or(ChannelError::MalformedFrame("truncated u16"))?;
    *off += 2;
    Ok(u16::from_be_bytes(v.try_into().unwrap()))
}

pub(crate) fn get_u64(bytes: &[u8], off: &mut usize) -> Result<u64, ChannelError> {
    let v = bytes
        .get(*off..*off + 8)
        .ok_or(ChannelError::MalformedFrame("truncated u64"))?;
    *off += 8;
    Ok(u64::from_be_bytes(v.try_into().unwrap()))
}

pub(crate) fn get_bytes<'a>(
    bytes: &'a [u8],
    off: &mut usize,
    len: usize,
) -> Result<&'a [u8], ChannelError> {
    let v = bytes
        .get(*off..*off + len)
        .ok_or(ChannelError::MalformedFrame("truncated field"))?;
    *off += len;
    Ok(v)
}
