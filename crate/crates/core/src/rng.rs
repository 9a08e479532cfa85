//! Seed derivation for reproducible, partitionable random streams.
//!
//! A campaign has one master seed. Every (purpose, point, chunk) triple gets
//! its own ChaCha stream, so results depend only on the seed and the chunk
//! layout, never on how chunks are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream purposes within one trial chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Data = 1,
    Channel = 2,
    Noise = 3,
    Search = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a list of tags into a 64-bit seed.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(master), |acc, &t| {
        splitmix64(acc ^ splitmix64(t))
    })
}

pub fn substream(master: u64, stream: Stream, tags: &[u64]) -> ChaCha8Rng {
    let mut all = Vec::with_capacity(tags.len() + 1);
    all.push(stream as u64);
    all.extend_from_slice(tags);
    ChaCha8Rng::seed_from_u64(derive_seed(master, &all))
}
