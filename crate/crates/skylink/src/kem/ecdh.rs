//! Diffie-Hellman KEM over Curve25519.
//!
//! Encapsulation sends a fresh ephemeral public key; the shared secret is
//! SHA-256(dh || eph_pk || pk) to bind both public values.

use super::KemError;
use rand::Rng;
use sha2::{Digest, Sha256};
use x25519_dalek::{x25519, X25519_BASEPOINT_BYTES};

pub const PK_LEN: usize = 32;
pub const SK_LEN: usize = 32;
pub const CT_LEN: usize = 32;

pub fn keygen(rng: &mut dyn Rng) -> ([u8; PK_LEN], [u8; SK_LEN]) {
    let mut sk = [0u8; SK_LEN];
    rng.fill_bytes(&mut sk);
    let pk = x25519(sk, X25519_BASEPOINT_BYTES);
    (pk, sk)
}

fn kdf(dh: &[u8; 32], eph_pk: &[u8; 32], pk: &[u8; 32]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(dh);
    h.update(eph_pk);
    h.update(pk);
    h.finalize().into()
}

pub fn encapsulate(
    pk: &[u8],
    rng: &mut dyn Rng,
) -> Result<([u8; CT_LEN], [u8; 32]), KemError> {
    let pk: [u8; PK_LEN] = pk.try_into().map_err(|_| KemError::MalformedPublicKey)?;
    let mut eph_sk = [0u8; 32];
    rng.fill_bytes(&mut eph_sk);
    let eph_pk = x25519(eph_sk, X25519_BASEPOINT_BYTES);
    let dh = x25519(eph_sk, pk);
    if dh == [0u8; 32] {
        return Err(KemError::MalformedPublicKey);
    }
    Ok((eph_pk, kdf(&dh, &eph_pk, &pk)))
}

pub fn decapsulate(sk: &[u8], ct: &[u8]) -> Result<[u8; 32], KemError> {
    let sk: [u8; SK_LEN] = sk.try_into().map_err(|_| KemError::MalformedSecretKey)?;
    let ct: [u8; CT_LEN] = ct.try_into().map_err(|_| KemError::MalformedCiphertext)?;
    let pk = x25519(sk, X25519_BASEPOINT_BYTES);
    let dh = x25519(sk, ct);
    Ok(kdf(&dh, &ct, &pk))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (pk, sk) = keygen(&mut rng);
        let (ct, secret) = encapsulate(&pk, &mut rng).unwrap();
        assert_eq!(decapsulate(&sk, &ct).unwrap(), secret);
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let a = keygen(&mut ChaCha8Rng::seed_from_u64(99));
        let b = keygen(&mut ChaCha8Rng::seed_from_u64(99));
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_public_key_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(matches!(
            encapsulate(&[0u8; 31], &mut rng),
            Err(KemError::MalformedPublicKey)
        ));
    }

    #[test]
    fn zero_point_rejected() {
        // the identity public key forces an all-zero shared point
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(
            encapsulate(&[0u8; 32], &mut rng),
            Err(KemError::MalformedPublicKey)
        ));
    }
}
