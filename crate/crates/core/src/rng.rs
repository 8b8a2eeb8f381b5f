//! Deterministic per-atom random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream `index` of the generator keyed by `seed`. Streams never overlap,
/// so results do not depend on how atoms are spread over threads.
pub fn atom_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

/// Independent stream family for a named purpose within one run.
pub fn derived_seed(seed: u64, purpose: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
