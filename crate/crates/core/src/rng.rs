//! Seeded random streams.
//!
//! Every random draw in a simulation comes from one 64-bit seed. Symbols and
//! noise use separate ChaCha20 streams of that seed, so changing the noise
//! draw count never perturbs the symbols and vice versa.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Symbols = 0,
    Noise = 1,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Seed of Monte-Carlo trial `trial` derived from a base seed.
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    base.wrapping_add(trial as u64)
}
