//! Deterministic per-item random streams.
//!
//! Every sample draws from its own ChaCha8 stream keyed by
//! `(master_seed, domain, index)`, so results never depend on the order in
//! which parallel workers pick up items.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SampleRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with two counters into a derived seed.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ a) ^ b.rotate_left(32))
}

pub fn stream(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

// stream domains
pub const DOMAIN_SYNTH: u64 = 0x5359_4e54;
pub const DOMAIN_ROTATE: u64 = 0x524f_5441;
