//! Named, seed-derived random streams.
//!
//! Every consumer of randomness gets its own ChaCha8 stream keyed by the
//! master seed and selected by a `(tag, index)` pair, so results do not
//! depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream tags used across the crate.
pub mod tag {
    pub const INIT_STATE: &str = "init-state";
    pub const ACTION: &str = "action";
    pub const LANDSCAPE_CELL: &str = "landscape-cell";
    pub const POLICY_INIT: &str = "policy-init";
    pub const FILTER: &str = "filter";
    pub const TRIAL: &str = "trial";
    pub const FINAL_EVAL: &str = "final-eval";
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Derives a child seed from a parent seed and a `(tag, index)` label.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ fnv1a(tag)) ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn stream(seed: u64, tag: &str, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, index))
}
