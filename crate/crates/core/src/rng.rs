//! Seed plumbing.
//!
//! Every random stream in the crate is a ChaCha20 generator from
//! `rand_chacha`. A single top-level seed fans out into per-purpose seeds
//! through SplitMix64, so the simulated dataset does not depend on how many
//! bootstrap resamples are drawn (and vice versa).

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Recorded in report metadata.
pub const RNG_ALGORITHM: &str =
    "ChaCha20 (rand_chacha 0.9, seed_from_u64); per-purpose seeds = SplitMix64(seed ^ tag); bootstrap resample b uses stream b";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Simulation,
    Bootstrap,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Simulation => 0x5349_4d55_4c41_5445, // "SIMULATE"
            Purpose::Bootstrap => 0x424f_4f54_5354_5250,  // "BOOTSTRP"
        }
    }
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, purpose: Purpose) -> u64 {
    splitmix64(seed ^ purpose.tag())
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
