//! Counter-based randomness.
//!
//! Every random choice is a pure function of a key, never of a shared
//! generator's position, so results do not depend on iteration order or
//! thread count. Tie-breaks hash `(seed, step, vertex)`; initial fields use
//! one ChaCha stream per vertex.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DOMAIN_TIE: u64 = 0x243F_6A88_85A3_08D3;
const DOMAIN_DERIVE: u64 = 0x1319_8A2E_0370_7344;

/// SplitMix64 finalizer. Bijective on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64 random bits for the tie-break of `vertex` at `step`.
#[inline]
pub fn tie_bits(seed: u64, step: u64, vertex: u64) -> u64 {
    let h = mix64(seed ^ DOMAIN_TIE);
    let h = mix64(h ^ step);
    mix64(h ^ vertex.rotate_left(32))
}

/// Maps 64 uniform bits to `0..n` by multiply-shift.
#[inline]
pub fn below(bits: u64, n: u32) -> u32 {
    debug_assert!(n > 0);
    ((bits as u128 * n as u128) >> 64) as u32
}

/// Independent child seed, e.g. for Monte Carlo trial `index`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ DOMAIN_DERIVE) ^ index)
}

/// The per-vertex sampling stream for initial fields.
pub fn vertex_stream(seed: u64, vertex: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(vertex);
    rng
}

/// A stream reserved for whole-field choices such as pattern shifts.
pub fn global_stream(seed: u64) -> ChaCha8Rng {
    vertex_stream(seed, u64::MAX)
}
