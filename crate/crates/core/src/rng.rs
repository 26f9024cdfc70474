//! Counter-based random substreams.
//!
//! Every stochastic computation draws from a ChaCha8 stream whose key is
//! derived from `(seed, domain, key)` and whose stream id is a work-item
//! index. Work items are fixed-size chunks of sample indices, so results do
//! not depend on how rayon schedules them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of consecutive sample indices that share one substream.
pub const CHUNK: usize = 1024;

/// Tags separating the substreams used by different computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Popdyn = 1,
    Branching = 2,
    Moments = 3,
    Alpha = 4,
    Support = 5,
    SupportPool = 6,
    Residual = 7,
    Test = 99,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Streams { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent generator for work item `index` of computation `(domain, key)`.
    pub fn substream(&self, domain: Domain, key: u64, index: u64) -> ChaCha8Rng {
        let mut state = splitmix64(self.seed ^ splitmix64(domain as u64));
        state = splitmix64(state ^ splitmix64(key.wrapping_add(0x6a09_e667_f3bc_c909)));
        let mut bytes = [0u8; 32];
        for chunk in bytes.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(bytes);
        rng.set_stream(index);
        rng
    }
}
