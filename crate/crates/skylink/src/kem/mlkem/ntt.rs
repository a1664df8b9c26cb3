//! Negacyclic number-theoretic transform over Z_3329 with the standard
//! bit-reversed zeta ordering.

use super::poly::{Poly, N, Q};

const ZETA: u64 = 17;

const fn bitrev7(x: u8) -> u8 {
    let mut out = 0u8;
    let mut i = 0;
    while i < 7 {
        out |= ((x >> i) & 1) << (6 - i);
        i += 1;
    }
    out
}

const fn pow_mod(base: u64, mut exp: u64) -> u16 {
    let mut acc = 1u64;
    let mut b = base % Q as u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % Q as u64;
        }
        b = b * b % Q as u64;
        exp >>= 1;
    }
    acc as u16
}

// zetas[i] = 17^bitrev7(i) mod q
const ZETAS: [u16; 128] = {
    let mut t = [0u16; 128];
    let mut i = 0;
    while i < 128 {
        t[i] = pow_mod(ZETA, bitrev7(i as u8) as u64);
        i += 1;
    }
    t
};

// gammas[i] = 17^(2*bitrev7(i)+1) mod q, used by the basecase multiply
const GAMMAS: [u16; 128] = {
    let mut t = [0u16; 128];
    let mut i = 0;
    while i < 128 {
        t[i] = pow_mod(ZETA, 2 * bitrev7(i as u8) as u64 + 1);
        i += 1;
    }
    t
};

const N_INV: u16 = 3303; // 128^-1 mod q

fn mul_mod(a: u16, b: u16) -> u16 {
    ((u32::from(a) * u32::from(b)) % u32::from(Q)) as u16
}

/// Forward NTT: standard-domain polynomial to NTT domain.
pub fn ntt_forward(poly: &Poly) -> Poly {
    let mut f = poly.coeffs;
    let mut i = 1;
    let mut len = 128;
    while len >= 2 {
        let mut start = 0;
        while start < N {
            let zeta = ZETAS[i];
            i += 1;
            for j in start..start + len {
                let t = mul_mod(zeta, f[j + len]);
                f[j + len] = (f[j] + Q - t) % Q;
                f[j] = (f[j] + t) % Q;
            }
            start += 2 * len;
        }
        len /= 2;
    }
    Poly { coeffs: f }
}

/// Inverse NTT, composing with `ntt_forward` to the identity.
pub fn ntt_inverse(poly: &Poly) -> Poly {
    let mut f = poly.coeffs;
    let mut i = 127;
    let mut len = 2;
    while len <= 128 {
        let mut start = 0;
        while start < N {
            let zeta = ZETAS[i];
            i -= 1;
            for j in start..start + len {
                let t = f[j];
                f[j] = (t + f[j + len]) % Q;
                f[j + len] = mul_mod(zeta, (f[j + len] + Q - t) % Q);
            }
            start += 2 * len;
        }
        len *= 2;
    }
    for c in f.iter_mut() {
        *c = mul_mod(*c, N_INV);
    }
    Poly { coeffs: f }
}

/// Pointwise product of two NTT-domain polynomials (128 degree-1 basecases).
pub fn ntt_multiply(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::zero();
    for i in 0..128 {
        let (a0, a1) = (a.coeffs[2 * i], a.coeffs[2 * i + 1]);
        let (b0, b1) = (b.coeffs[2 * i], b.coeffs[2 * i + 1]);
        out.coeffs[2 * i] = (mul_mod(a0, b0) + mul_mod(mul_mod(a1, b1), GAMMAS[i])) % Q;
        out.coeffs[2 * i + 1] = (mul_mod(a0, b1) + mul_mod(a1, b0)) % Q;
    }
    out
}
