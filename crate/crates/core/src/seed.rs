//! Seed derivation and RNG streams.
//!
//! Every random draw in a run comes from a `ChaCha8Rng` keyed by the run
//! seed. Stream 0 belongs to the world (leader selection); agent `k` owns
//! stream `k + 1`. Run seeds are derived from a master seed by drawing from
//! stream `run_index` of a generator keyed by the master seed, so any
//! schedule of runs reproduces the same results.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Name recorded in output metadata.
pub const RNG_ALGORITHM: &str =
    "ChaCha8 (rand_chacha 0.9); run seed = stream(run index) of ChaCha8(master); \
     world stream 0, agent k stream k+1";

/// Seed for run `index` of a batch keyed by `master`.
pub fn child_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

pub fn world_rng(run_seed: u64) -> ChaCha8Rng {
    stream_rng(run_seed, 0)
}

pub fn agent_rng(run_seed: u64, agent_id: usize) -> ChaCha8Rng {
    stream_rng(run_seed, agent_id as u64 + 1)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
