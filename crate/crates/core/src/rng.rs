//! Deterministic random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by a
//! `(seed, stream)` pair. Streams for sub-tasks (a segment, a classifier fit,
//! a tree) are derived by hashing identifiers into the stream id, so results
//! never depend on the order in which parallel work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The project-wide generator.
pub type DetRng = ChaCha8Rng;

/// Returns the stream `stream_id` of the generator seeded with `seed`.
pub fn make_rng_stream(seed: u64, stream_id: u64) -> DetRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Address of a random stream; cheap to copy and derive from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub stream: u64,
}

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    /// Child key identified by `parts`; distinct parts give distinct streams
    /// with overwhelming probability.
    pub fn derive(self, parts: &[u64]) -> Self {
        let mut h = splitmix64(self.stream ^ 0x6a09_e667_f3bc_c908);
        for &p in parts {
            h = splitmix64(h ^ splitmix64(p.wrapping_add(0x9e37_79b9_7f4a_7c15)));
        }
        Self {
            seed: self.seed,
            stream: h,
        }
    }

    pub fn rng(self) -> DetRng {
        make_rng_stream(self.seed, self.stream)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
