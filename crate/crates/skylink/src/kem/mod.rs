//! Key-encapsulation abstraction over two interchangeable schemes:
//! a Curve25519 Diffie-Hellman KEM and ML-KEM-512.

pub mod ecdh;
pub mod mlkem;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum KemScheme {
    EcdhKem,
    MlKem512,
}

impl KemScheme {
    pub const ALL: [KemScheme; 2] = [KemScheme::EcdhKem, KemScheme::MlKem512];

    pub fn wire_id(self) -> u8 {
        match self {
            KemScheme::EcdhKem => 0x01,
            KemScheme::MlKem512 => 0x02,
        }
    }

    pub fn from_wire(id: u8) -> Option<Self> {
        match id {
            0x01 => Some(KemScheme::EcdhKem),
            0x02 => Some(KemScheme::MlKem512),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KemScheme::EcdhKem => "ecdh",
            KemScheme::MlKem512 => "ml-kem-512",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "ecdh" | "ecc" => Some(KemScheme::EcdhKem),
            "ml-kem-512" | "kyber" => Some(KemScheme::MlKem512),
            _ => None,
        }
    }

    pub fn public_key_len(self) -> usize {
        match self {
            KemScheme::EcdhKem => ecdh::PK_LEN,
            KemScheme::MlKem512 => mlkem::EK_LEN,
        }
    }

    pub fn secret_key_len(self) -> usize {
        match self {
            KemScheme::EcdhKem => ecdh::SK_LEN,
            KemScheme::MlKem512 => mlkem::DK_LEN,
        }
    }

    pub fn ciphertext_len(self) -> usize {
        match self {
            KemScheme::EcdhKem => ecdh::CT_LEN,
            KemScheme::MlKem512 => mlkem::CT_LEN,
        }
    }
}

impl std::fmt::Display for KemScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KemError {
    #[error("malformed public key")]
    MalformedPublicKey,
    #[error("malformed secret key")]
    MalformedSecretKey,
    #[error("malformed ciphertext")]
    MalformedCiphertext,
}

#[derive(Clone)]
pub struct KemKeyPair {
    pub scheme: KemScheme,
    pub public_key: Vec<u8>,
    pub secret_key: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KemCiphertext {
    pub scheme: KemScheme,
    pub bytes: Vec<u8>,
}

/// 32-byte shared secret. Debug never shows the bytes.
#[derive(Clone, PartialEq, Eq)]
pub struct SharedSecret(pub [u8; 32]);

impl std::fmt::Debug for SharedSecret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SharedSecret(..)")
    }
}

pub fn kem_keygen(scheme: KemScheme, rng: &mut dyn Rng) -> KemKeyPair {
    match scheme {
        KemScheme::EcdhKem => {
            let (pk, sk) = ecdh::keygen(rng);
            KemKeyPair { scheme, public_key: pk.to_vec(), secret_key: sk.to_vec() }
        }
        KemScheme::MlKem512 => {
            let mut d = [0u8; 32];
            let mut z = [0u8; 32];
            rng.fill_bytes(&mut d);
            rng.fill_bytes(&mut z);
            let (ek, dk) = mlkem::keygen(&d, &z);
            KemKeyPair { scheme, public_key: ek, secret_key: dk }
        }
    }
}

pub fn kem_encapsulate(
    scheme: KemScheme,
    public_key: &[u8],
    rng: &mut dyn Rng,
) -> Result<(KemCiphertext, SharedSecret), KemError> {
    match scheme {
        KemScheme::EcdhKem => {
            let (ct, secret) = ecdh::encapsulate(public_key, rng)?;
            Ok((KemCiphertext { scheme, bytes: ct.to_vec() }, SharedSecret(secret)))
        }
        KemScheme::MlKem512 => {
            if public_key.len() != mlkem::EK_LEN || !mlkem::ek_is_canonical(public_key) {
                return Err(KemError::MalformedPublicKey);
            }
            let mut m = [0u8; 32];
            rng.fill_bytes(&mut m);
            let (ct, secret) = mlkem::encapsulate(public_key, &m);
            Ok((KemCiphertext { scheme, bytes: ct }, SharedSecret(secret)))
        }
    }
}

pub fn kem_decapsulate(
    scheme: KemScheme,
    secret_key: &[u8],
    ciphertext: &[u8],
) -> Result<SharedSecret, KemError> {
    match scheme {
        KemScheme::EcdhKem => Ok(SharedSecret(ecdh::decapsulate(secret_key, ciphertext)?)),
        KemScheme::MlKem512 => {
            if secret_key.len() != mlkem::DK_LEN {
                return Err(KemError::MalformedSecretKey);
            }
            if ciphertext.len() != mlkem::CT_LEN {
                return Err(KemError::MalformedCiphertext);
            }
            Ok(SharedSecret(mlkem::decapsulate(secret_key, ciphertext)))
        }
    }
}
