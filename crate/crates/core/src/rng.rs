//! Per-replicate random streams.
//!
//! Replicate `r` of an experiment with base seed `s` draws from the ChaCha8
//! generator seeded with `s` on stream `r`. A replicate can therefore be
//! regenerated on its own, and results do not depend on how replicates are
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;

pub type SimRng = ChaCha8Rng;

pub fn replicate_rng(base_seed: u64, replicate: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(replicate);
    rng
}

/// Runs `count` independent replicates in parallel; results come back in
/// replicate order.
pub fn run_replicates<T, F>(base_seed: u64, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut SimRng, usize) -> Result<T> + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(base_seed, r as u64);
            f(&mut rng, r)
        })
        .collect()
}
