//! ML-KEM-512 (FIPS 203 parameter set: k=2, eta1=3, eta2=2, du=10, dv=4).

pub mod kpke;
pub mod ntt;
pub mod poly;
pub mod sample;

use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::{Digest, Sha3_256, Sha3_512, Shake256};
use subtle::{ConditionallySelectable, ConstantTimeEq};

pub const K: usize = 2;
pub const ETA1: usize = 3;
pub const ETA2: usize = 2;
pub const DU: usize = 10;
pub const DV: usize = 4;

pub const EK_LEN: usize = kpke::EK_LEN; // 800
pub const DK_LEN: usize = kpke::DK_LEN + kpke::EK_LEN + 64; // 1632
pub const CT_LEN: usize = kpke::CT_LEN; // 768

fn hash_h(data: &[u8]) -> [u8; 32] {
    let mut h = Sha3_256::new();
    Digest::update(&mut h, data);
    h.finalize().into()
}

fn hash_g(parts: &[&[u8]]) -> ([u8; 32], [u8; 32]) {
    let mut g = Sha3_512::new();
    for p in parts {
        Digest::update(&mut g, p);
    }
    let out = g.finalize();
    (out[..32].try_into().unwrap(), out[32..].try_into().unwrap())
}

fn hash_j(z: &[u8], ct: &[u8]) -> [u8; 32] {
    let mut xof = Shake256::default();
    xof.update(z);
    xof.update(ct);
    let mut out = [0u8; 32];
    xof.finalize_xof().read(&mut out);
    out
}

/// ML-KEM.KeyGen_internal(d, z) -> (ek, dk).
pub fn keygen(d: &[u8; 32], z: &[u8; 32]) -> (Vec<u8>, Vec<u8>) {
    let (ek, dk_pke) = kpke::keygen(d);
    let mut dk = Vec::with_capacity(DK_LEN);
    dk.extend_from_slice(&dk_pke);
    dk.extend_from_slice(&ek);
    dk.extend_from_slice(&hash_h(&ek));
    dk.extend_from_slice(z);
    (ek, dk)
}

/// Check that ek re-encodes to itself (coefficients already reduced mod q).
pub fn ek_is_canonical(ek: &[u8]) -> bool {
    if ek.len() != EK_LEN {
        return false;
    }
    for i in 0..K {
        let chunk = &ek[384 * i..384 * (i + 1)];
        let p = poly::byte_decode(chunk, 12);
        if poly::byte_encode(&p, 12) != chunk {
            return false;
        }
    }
    true
}

/// ML-KEM.Encaps_internal(ek, m) -> (ct, shared_secret).
pub fn encapsulate(ek: &[u8], m: &[u8; 32]) -> (Vec<u8>, [u8; 32]) {
    debug_assert_eq!(ek.len(), EK_LEN);
    let (key, r) = hash_g(&[m, &hash_h(ek)]);
    let ct = kpke::encrypt(ek, m, &r);
    (ct, key)
}

/// ML-KEM.Decaps_internal(dk, ct) with implicit rejection.
pub fn decapsulate(dk: &[u8], ct: &[u8]) -> [u8; 32] {
    debug_assert_eq!(dk.len(), DK_LEN);
    debug_assert_eq!(ct.len(), CT_LEN);
    let dk_pke = &dk[..kpke::DK_LEN];
    let ek = &dk[kpke::DK_LEN..kpke::DK_LEN + EK_LEN];
    let h = &dk[kpke::DK_LEN + EK_LEN..kpke::DK_LEN + EK_LEN + 32];
    let z = &dk[kpke::DK_LEN + EK_LEN + 32..];

    let m_prime = kpke::decrypt(dk_pke, ct);
    let (key_prime, r_prime) = {
        let mut g = Sha3_512::new();
        Digest::update(&mut g, m_prime);
        Digest::update(&mut g, h);
        let out = g.finalize();
        let k: [u8; 32] = out[..32].try_into().unwrap();
        let r: [u8; 32] = out[32..].try_into().unwrap();
        (k, r)
    };
    let key_reject = hash_j(z, ct);
    let ct_prime = kpke::encrypt(ek, &m_prime, &r_prime);

    let ok = ct.ct_eq(&ct_prime);
    let mut key = [0u8; 32];
    for i in 0..32 {
        key[i] = u8::conditional_select(&key_reject[i], &key_prime[i], ok);
    }
    key
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sizes_match_the_512_parameter_set() {
        let (ek, dk) = keygen(&[1u8; 32], &[2u8; 32]);
        assert_eq!(ek.len(), 800);
        assert_eq!(dk.len(), 1632);
        let (ct, k) = encapsulate(&ek, &[3u8; 32]);
        assert_eq!(ct.len(), 768);
        assert_eq!(k.len(), 32);
    }

    #[test]
    fn roundtrip_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let mut d = [0u8; 32];
            let mut z = [0u8; 32];
            let mut m = [0u8; 32];
            rng.fill_bytes(&mut d);
            rng.fill_bytes(&mut z);
            rng.fill_bytes(&mut m);
            let (ek, dk) = keygen(&d, &z);
            let (ct, k_enc) = encapsulate(&ek, &m);
            assert_eq!(decapsulate(&dk, &ct), k_enc);
        }
    }

    #[test]
    fn implicit_rejection_is_deterministic_and_differs() {
        let (ek, dk) = keygen(&[7u8; 32], &[8u8; 32]);
        let (mut ct, k_honest) = encapsulate(&ek, &[9u8; 32]);
        ct[100] ^= 0x01;
        let k1 = decapsulate(&dk, &ct);
        let k2 = decapsulate(&dk, &ct);
        assert_eq!(k1, k2);
        assert_ne!(k1, k_honest);
    }
}
