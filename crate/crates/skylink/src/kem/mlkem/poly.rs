//! Degree-255 polynomials over Z_q, q = 3329, plus coefficient
//! compression and the 12-bit serialization.

pub const N: usize = 256;
pub const Q: u16 = 3329;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Poly {
    pub coeffs: [u16; N],
}

impl Default for Poly {
    fn default() -> Self {
        Poly { coeffs: [0; N] }
    }
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for i in 0..N {
            out.coeffs[i] = (self.coeffs[i] + other.coeffs[i]) % Q;
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for i in 0..N {
            out.coeffs[i] = (self.coeffs[i] + Q - other.coeffs[i]) % Q;
        }
        out
    }
}

/// compress_d(x) = round(2^d * x / q) mod 2^d, round half up.
/// Exact via floor((2*2^d*x + q) / (2q)); ties cannot occur since q is odd.
pub fn compress_coeff(x: u16, d: u32) -> u16 {
    debug_assert!(x < Q);
    debug_assert!(d <= 12);
    let num = (u64::from(x) << (d + 1)) + u64::from(Q);
    ((num / (2 * u64::from(Q))) as u16) & ((1u16 << d) - 1)
}

/// decompress_d(y) = round(q * y / 2^d).
pub fn decompress_coeff(y: u16, d: u32) -> u16 {
    debug_assert!(u32::from(y) < (1u32 << d));
    (((u32::from(y) * u32::from(Q)) + (1 << (d - 1))) >> d) as u16
}

/// ByteEncode_d: pack each coefficient into d bits, little-endian bit order.
pub fn byte_encode(poly: &Poly, d: u32) -> Vec<u8> {
    let mut out = vec![0u8; 32 * d as usize];
    let mut bit = 0usize;
    for &c in poly.coeffs.iter() {
        for b in 0..d {
            if (c >> b) & 1 == 1 {
                out[bit >> 3] |= 1 << (bit & 7);
            }
            bit += 1;
        }
    }
    out
}

/// ByteDecode_d: inverse of byte_encode; d = 12 reduces mod q.
pub fn byte_decode(bytes: &[u8], d: u32) -> Poly {
    debug_assert_eq!(bytes.len(), 32 * d as usize);
    let mut poly = Poly::zero();
    let mut bit = 0usize;
    for c in poly.coeffs.iter_mut() {
        let mut v = 0u16;
        for b in 0..d {
            v |= u16::from((bytes[bit >> 3] >> (bit & 7)) & 1) << b;
            bit += 1;
        }
        *c = if d == 12 { v % Q } else { v };
    }
    poly
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compress_zero_is_zero() {
        for d in [1, 4, 10] {
            assert_eq!(compress_coeff(0, d), 0);
            assert_eq!(decompress_coeff(0, d), 0);
        }
    }

    #[test]
    fn compress_midpoint_rounds_up() {
        // round(2 * 1665 / 3329) = round(1.0003) = 1
        assert_eq!(compress_coeff(1665, 1), 1);
        // round(2 * 1664 / 3329) = round(0.99969...) = 1
        assert_eq!(compress_coeff(1664, 1), 1);
        assert_eq!(compress_coeff(832, 1), 0);
    }

    #[test]
    fn roundtrip_error_bound_exhaustive() {
        for d in [1u32, 4, 10] {
            let bound = ((u32::from(Q) + (1 << d)) / (1 << (d + 1))) as i32;
            for x in 0..Q {
                let y = compress_coeff(x, d);
                assert!(u32::from(y) < (1 << d));
                let back = decompress_coeff(y, d) as i32;
                let mut diff = (back - i32::from(x)).rem_euclid(i32::from(Q));
                if diff > i32::from(Q) / 2 {
                    diff -= i32::from(Q);
                }
                assert!(diff.abs() <= bound, "x={x} d={d} diff={diff} bound={bound}");
            }
        }
    }

    #[test]
    fn byte_codec_roundtrip_12() {
        let mut p = Poly::zero();
        for (i, c) in p.coeffs.iter_mut().enumerate() {
            *c = (i as u16 * 13) % Q;
        }
        let bytes = byte_encode(&p, 12);
        assert_eq!(bytes.len(), 384);
        assert_eq!(byte_decode(&bytes, 12), p);
    }
}
