//! Seeded random number streams.
//!
//! All randomness in the crate flows through [`seeded`] and [`subseed`] so
//! that every run is reproducible from a single master seed, independent of
//! platform and of the `rand` default generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG for a given seed.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent stream from a master seed, a domain tag, and an index.
///
/// Different tags (or indices) yield decorrelated streams; the same inputs
/// always yield the same seed.
pub fn subseed(seed: u64, tag: &str, k: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64; // FNV-1a over the tag
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    splitmix(seed ^ h).wrapping_add(splitmix(k.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
