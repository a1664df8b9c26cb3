//! The lattice public-key encryption scheme underlying ML-KEM-512.

use super::ntt::{ntt_forward, ntt_inverse, ntt_multiply};
use super::poly::{byte_decode, byte_encode, compress_coeff, decompress_coeff, Poly, N};
use super::sample::{sample_cbd, sample_ntt};
use super::{DU, DV, ETA1, ETA2, K};
use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::{Digest, Sha3_512, Shake256};

pub const EK_LEN: usize = 384 * K + 32; // 800
pub const DK_LEN: usize = 384 * K; // 768
pub const CT_LEN: usize = 32 * (DU * K + DV); // 768

/// PRF_eta(s, b) = SHAKE256(s || b, 64*eta bytes).
fn prf(s: &[u8; 32], b: u8, eta: usize) -> Vec<u8> {
    let mut xof = Shake256::default();
    xof.update(s);
    xof.update(&[b]);
    let mut out = vec![0u8; 64 * eta];
    xof.finalize_xof().read(&mut out);
    out
}

fn matrix_a(rho: &[u8; 32]) -> [[Poly; K]; K] {
    let mut a = [[Poly::zero(); K]; K];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = sample_ntt(rho, j as u8, i as u8);
        }
    }
    a
}

fn vec_ntt(v: &[Poly; K]) -> [Poly; K] {
    [ntt_forward(&v[0]), ntt_forward(&v[1])]
}

fn vec_dot(a: &[Poly; K], b: &[Poly; K]) -> Poly {
    let mut acc = Poly::zero();
    for i in 0..K {
        acc = acc.add(&ntt_multiply(&a[i], &b[i]));
    }
    acc
}

/// K-PKE.KeyGen(d) -> (ek, dk).
pub fn keygen(d: &[u8; 32]) -> (Vec<u8>, Vec<u8>) {
    let mut g = Sha3_512::new();
    Digest::update(&mut g, d);
    Digest::update(&mut g, [K as u8]);
    let gd = g.finalize();
    let rho: [u8; 32] = gd[..32].try_into().unwrap();
    let sigma: [u8; 32] = gd[32..].try_into().unwrap();

    let a = matrix_a(&rho);
    let mut n = 0u8;
    let mut s = [Poly::zero(); K];
    for p in s.iter_mut() {
        *p = sample_cbd(&prf(&sigma, n, ETA1), ETA1);
        n += 1;
    }
    let mut e = [Poly::zero(); K];
    for p in e.iter_mut() {
        *p = sample_cbd(&prf(&sigma, n, ETA1), ETA1);
        n += 1;
    }

    let s_hat = vec_ntt(&s);
    let e_hat = vec_ntt(&e);
    let mut t_hat = [Poly::zero(); K];
    for i in 0..K {
        let mut acc = Poly::zero();
        for j in 0..K {
            acc = acc.add(&ntt_multiply(&a[i][j], &s_hat[j]));
        }
        t_hat[i] = acc.add(&e_hat[i]);
    }

    let mut ek = Vec::with_capacity(EK_LEN);
    for p in &t_hat {
        ek.extend_from_slice(&byte_encode(p, 12));
    }
    ek.extend_from_slice(&rho);
    let mut dk = Vec::with_capacity(DK_LEN);
    for p in &s_hat {
        dk.extend_from_slice(&byte_encode(p, 12));
    }
    (ek, dk)
}

/// K-PKE.Encrypt(ek, m, r) -> 768-byte ciphertext.
pub fn encrypt(ek: &[u8], m: &[u8; 32], r: &[u8; 32]) -> Vec<u8> {
    debug_assert_eq!(ek.len(), EK_LEN);
    let mut t_hat = [Poly::zero(); K];
    for i in 0..K {
        t_hat[i] = byte_decode(&ek[384 * i..384 * (i + 1)], 12);
    }
    let rho: [u8; 32] = ek[384 * K..].try_into().unwrap();
    let a = matrix_a(&rho);

    let mut n = 0u8;
    let mut y = [Poly::zero(); K];
    for p in y.iter_mut() {
        *p = sample_cbd(&prf(r, n, ETA1), ETA1);
        n += 1;
    }
    let mut e1 = [Poly::zero(); K];
    for p in e1.iter_mut() {
        *p = sample_cbd(&prf(r, n, ETA2), ETA2);
        n += 1;
    }
    let e2 = sample_cbd(&prf(r, n, ETA2), ETA2);

    let y_hat = vec_ntt(&y);
    // u = NTT^-1(A^T * y_hat) + e1
    let mut u = [Poly::zero(); K];
    for i in 0..K {
        let mut acc = Poly::zero();
        for j in 0..K {
            acc = acc.add(&ntt_multiply(&a[j][i], &y_hat[j]));
        }
        u[i] = ntt_inverse(&acc).add(&e1[i]);
    }

    let mut mu = byte_decode(m, 1);
    for c in mu.coeffs.iter_mut() {
        *c = decompress_coeff(*c, 1);
    }
    let v = ntt_inverse(&vec_dot(&t_hat, &y_hat)).add(&e2).add(&mu);

    let mut ct = Vec::with_capacity(CT_LEN);
    for p in &u {
        let mut comp = Poly::zero();
        for i in 0..N {
            comp.coeffs[i] = compress_coeff(p.coeffs[i], DU as u32);
        }
        ct.extend_from_slice(&byte_encode(&comp, DU as u32));
    }
    let mut comp_v = Poly::zero();
    for i in 0..N {
        comp_v.coeffs[i] = compress_coeff(v.coeffs[i], DV as u32);
    }
    ct.extend_from_slice(&byte_encode(&comp_v, DV as u32));
    ct
}

/// K-PKE.Decrypt(dk, ct) -> 32-byte message.
pub fn decrypt(dk: &[u8], ct: &[u8]) -> [u8; 32] {
    debug_assert_eq!(dk.len(), DK_LEN);
    debug_assert_eq!(ct.len(), CT_LEN);
    let mut u = [Poly::zero(); K];
    for i in 0..K {
        let mut p = byte_decode(&ct[32 * DU * i..32 * DU * (i + 1)], DU as u32);
        for c in p.coeffs.iter_mut() {
            *c = decompress_coeff(*c, DU as u32);
        }
        u[i] = p;
    }
    let mut v = byte_decode(&ct[32 * DU * K..], DV as u32);
    for c in v.coeffs.iter_mut() {
        *c = decompress_coeff(*c, DV as u32);
    }

    let mut s_hat = [Poly::zero(); K];
    for i in 0..K {
        s_hat[i] = byte_decode(&dk[384 * i..384 * (i + 1)], 12);
    }

    let u_hat = vec_ntt(&u);
    let w = v.sub(&ntt_inverse(&vec_dot(&s_hat, &u_hat)));

    let mut msg_poly = Poly::zero();
    for i in 0..N {
        msg_poly.coeffs[i] = compress_coeff(w.coeffs[i], 1);
    }
    byte_encode(&msg_poly, 1).try_into().unwrap()
}
