//! EAX authenticated encryption over AES.
//!
//! Two-pass AEAD: OMAC over the nonce, header, and ciphertext, CTR for the
//! payload, tag = XOR of the three MACs truncated to tau bits.

mod omac;
pub mod vectors;

use aes::cipher::{Array, BlockCipherEncrypt, KeyInit};
use aes::{Aes128, Aes256};
use subtle::ConstantTimeEq;
use thiserror::Error;

pub use omac::omac_t;

pub const BLOCK_LEN: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EaxError {
    #[error("AES key must be 16 or 32 bytes, got {0}")]
    BadKeyLength(usize),
    #[error("tag length must be a multiple of 8 bits in (0, 128], got {0}")]
    BadTagLength(usize),
    #[error("nonce must be non-empty")]
    EmptyNonce,
    #[error("ciphertext failed authentication")]
    Invalid,
}

/// AES key for EAX, either AES-128 or AES-256.
#[derive(Clone)]
pub enum EaxKey {
    Aes128(Box<Aes128>),
    Aes256(Box<Aes256>),
}

impl std::fmt::Debug for EaxKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // never print key material
        match self {
            EaxKey::Aes128(_) => f.write_str("EaxKey::Aes128(..)"),
            EaxKey::Aes256(_) => f.write_str("EaxKey::Aes256(..)"),
        }
    }
}


impl EaxKey {
    pub fn new(key_bytes: &[u8]) -> Result<Self, EaxError> {
        match key_bytes.len() {
            16 => Ok(EaxKey::Aes128(Box::new(
                Aes128::new(&Array::try_from(key_bytes).unwrap()),
            ))),
            32 => Ok(EaxKey::Aes256(Box::new(
                Aes256::new(&Array::try_from(key_bytes).unwrap()),
            ))),
            n => Err(EaxError::BadKeyLength(n)),
        }
    }

    pub(crate) fn encrypt_block(&self, block: &mut [u8; BLOCK_LEN]) {
        let arr = <&mut Array<u8, _>>::try_from(&mut block[..]).unwrap();
        match self {
            EaxKey::Aes128(c) => c.encrypt_block(arr),
            EaxKey::Aes256(c) => c.encrypt_block(arr),
        }
    }
}

/// Inputs to a single EAX encryption: nonce N, header H, message M, tag bits tau.
pub struct EaxInputs<'a> {
    pub nonce: &'a [u8],
    pub header: &'a [u8],
    pub message: &'a [u8],
    pub tau_bits: usize,
}

impl<'a> EaxInputs<'a> {
    pub fn new(nonce: &'a [u8], header: &'a [u8], message: &'a [u8]) -> Self {
        EaxInputs { nonce, header, message, tau_bits: 128 }
    }

    fn validate(&self) -> Result<usize, EaxError> {
        if self.nonce.is_empty() {
            return Err(EaxError::EmptyNonce);
        }
        tau_bytes(self.tau_bits)
    }
}

fn tau_bytes(tau_bits: usize) -> Result<usize, EaxError> {
    if tau_bits == 0 || tau_bits > 128 || tau_bits % 8 != 0 {
        return Err(EaxError::BadTagLength(tau_bits));
    }
    Ok(tau_bits / 8)
}

/// XOR `data` with the CTR keystream starting at `initial_counter`.
/// The counter is the full 128-bit block, incremented big-endian.
pub fn ctr_keystream(key: &EaxKey, initial_counter: &[u8; BLOCK_LEN], data: &[u8]) -> Vec<u8> {
    let mut counter = *initial_counter;
    let mut out = Vec::with_capacity(data.len());
    for chunk in data.chunks(BLOCK_LEN) {
        let mut ks = counter;
        key.encrypt_block(&mut ks);
        out.extend(chunk.iter().zip(ks.iter()).map(|(d, k)| d ^ k));
        increment_be(&mut counter);
    }
    out
}

fn increment_be(block: &mut [u8; BLOCK_LEN]) {
    for b in block.iter_mut().rev() {
        *b = b.wrapping_add(1);
        if *b != 0 {
            break;
        }
    }
}

/// EAX.Encrypt: returns CT = C || T with |T| = tau bits.
pub fn eax_encrypt(key: &EaxKey, inputs: &EaxInputs) -> Result<Vec<u8>, EaxError> {
    let tau = inputs.validate()?;
    let n_mac = omac_t(key, 0, inputs.nonce);
    let h_mac = omac_t(key, 1, inputs.header);
    let cipher = ctr_keystream(key, &n_mac, inputs.message);
    let c_mac = omac_t(key, 2, &cipher);

    let mut out = cipher;
    for i in 0..tau {
        out.push(n_mac[i] ^ c_mac[i] ^ h_mac[i]);
    }
    Ok(out)
}

/// EAX.Decrypt: verifies the tag before releasing any plaintext.
pub fn eax_decrypt(
    key: &EaxKey,
    nonce: &[u8],
    header: &[u8],
    ct: &[u8],
    tau_bits: usize,
) -> Result<Vec<u8>, EaxError> {
    let tau = tau_bytes(tau_bits)?;
    if nonce.is_empty() {
        return Err(EaxError::EmptyNonce);
    }
    if ct.len() < tau {
        return Err(EaxError::Invalid);
    }
    let (cipher, tag) = ct.split_at(ct.len() - tau);

    let n_mac = omac_t(key, 0, nonce);
    let h_mac = omac_t(key, 1, header);
    let c_mac = omac_t(key, 2, cipher);
    let mut expected = [0u8; BLOCK_LEN];
    for i in 0..BLOCK_LEN {
        expected[i] = n_mac[i] ^ c_mac[i] ^ h_mac[i];
    }
    if expected[..tau].ct_eq(tag).unwrap_u8() != 1 {
        return Err(EaxError::Invalid);
    }
    Ok(ctr_keystream(key, &n_mac, cipher))
}
