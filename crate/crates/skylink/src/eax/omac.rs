//! OMAC (CMAC) with the EAX tweak prefix.

use super::{EaxKey, BLOCK_LEN};

/// GF(2^128) doubling with the standard 0x87 reduction constant.
fn dbl(block: &[u8; BLOCK_LEN]) -> [u8; BLOCK_LEN] {
    let mut out = [0u8; BLOCK_LEN];
    let mut carry = 0u8;
    for i in (0..BLOCK_LEN).rev() {
        out[i] = (block[i] << 1) | carry;
        carry = block[i] >> 7;
    }
    if carry == 1 {
        out[BLOCK_LEN - 1] ^= 0x87;
    }
    out
}

/// OMAC^t_K(M) = CMAC_K([t]_128 || M) for tweak t in {0,1,2}.
///
/// Subkeys derive from E_K(0^128) by doubling; the final block is XORed with
/// K1 when complete, otherwise padded 10* and XORed with K2.
pub fn omac_t(key: &EaxKey, tweak: u8, msg: &[u8]) -> [u8; BLOCK_LEN] {
    debug_assert!(tweak <= 2);
    let mut l = [0u8; BLOCK_LEN];
    key.encrypt_block(&mut l);
    let k1 = dbl(&l);
    let k2 = dbl(&k1);

    let mut prefixed = Vec::with_capacity(BLOCK_LEN + msg.len());
    prefixed.extend_from_slice(&[0u8; BLOCK_LEN - 1]);
    prefixed.push(tweak);
    prefixed.extend_from_slice(msg);

    let n_blocks = prefixed.len().div_ceil(BLOCK_LEN);
    let mut state = [0u8; BLOCK_LEN];
    for (idx, chunk) in prefixed.chunks(BLOCK_LEN).enumerate() {
        let last = idx == n_blocks - 1;
        let mut block = [0u8; BLOCK_LEN];
        block[..chunk.len()].copy_from_slice(chunk);
        if last {
            if chunk.len() == BLOCK_LEN {
                xor_in(&mut block, &k1);
            } else {
                block[chunk.len()] = 0x80;
                xor_in(&mut block, &k2);
            }
        }
        xor_in(&mut state, &block);
        key.encrypt_block(&mut state);
    }
    state
}

fn xor_in(dst: &mut [u8; BLOCK_LEN], src: &[u8; BLOCK_LEN]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}
