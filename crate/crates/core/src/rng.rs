//! Deterministic random-stream plumbing.
//!
//! Simulations are reproducible by construction: every randomized unit of
//! work (one auction under one grid point and one replicate) owns a private
//! stream derived from the master seed with a stable 64-bit mix. Streams are
//! therefore independent of execution order and of how work is split across
//! threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG used throughout the simulator. ChaCha8 is fast, has solid
/// statistical quality for simulation, and is stable across platforms.
pub type SimRng = ChaCha8Rng;

/// splitmix64 finalizer; stable across platforms and releases.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a substream seed from a master seed and a path of indices
/// (for example `[grid_point, replicate, auction_ordinal]`).
pub fn substream_seed(master_seed: u64, path: &[u64]) -> u64 {
    let mut state = splitmix64(master_seed);
    for &part in path {
        state = splitmix64(state ^ part.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    }
    state
}

/// A fresh RNG seeded directly from `seed`.
pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// A fresh RNG for the substream identified by `path` under `master_seed`.
pub fn substream_rng(master_seed: u64, path: &[u64]) -> SimRng {
    rng_from_seed(substream_seed(master_seed, path))
}
