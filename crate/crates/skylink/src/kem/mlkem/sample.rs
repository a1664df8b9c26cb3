//! Rejection sampling of NTT-domain polynomials and the centered
//! binomial distribution.

use super::poly::{Poly, N, Q};
use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::Shake128;

/// SampleNTT: uniform NTT-domain polynomial from SHAKE128(seed || j || i).
pub fn sample_ntt(seed: &[u8; 32], j: u8, i: u8) -> Poly {
    let mut xof = Shake128::default();
    xof.update(seed);
    xof.update(&[j, i]);
    let mut reader = xof.finalize_xof();

    let mut poly = Poly::zero();
    let mut filled = 0;
    let mut buf = [0u8; 3];
    while filled < N {
        reader.read(&mut buf);
        let d1 = u16::from(buf[0]) | (u16::from(buf[1] & 0x0f) << 8);
        let d2 = u16::from(buf[1] >> 4) | (u16::from(buf[2]) << 4);
        if d1 < Q {
            poly.coeffs[filled] = d1;
            filled += 1;
        }
        if d2 < Q && filled < N {
            poly.coeffs[filled] = d2;
            filled += 1;
        }
    }
    poly
}

/// SamplePolyCBD_eta: coefficients in [-eta, eta] mod q from a 64*eta byte stream.
pub fn sample_cbd(stream: &[u8], eta: usize) -> Poly {
    assert_eq!(stream.len(), 64 * eta);
    let bit = |idx: usize| u16::from((stream[idx >> 3] >> (idx & 7)) & 1);
    let mut poly = Poly::zero();
    for (i, c) in poly.coeffs.iter_mut().enumerate() {
        let mut x = 0u16;
        let mut y = 0u16;
        for b in 0..eta {
            x += bit(2 * i * eta + b);
            y += bit(2 * i * eta + eta + b);
        }
        *c = (x + Q - y) % Q;
    }
    poly
}
