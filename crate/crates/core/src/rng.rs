//! Seeded random streams.
//!
//! Every run owns a ChaCha8 stream. Independent runs share a base seed and
//! differ by stream id, so fanning runs out over threads never changes what
//! each run draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SolverRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SolverRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `index` of the generator seeded with `base`.
pub fn stream(base: u64, index: u64) -> SolverRng {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(index);
    rng
}

/// Child generator seeded from the next draw of `parent`.
pub fn fork<R: Rng + ?Sized>(parent: &mut R) -> SolverRng {
    ChaCha8Rng::seed_from_u64(parent.gen())
}
