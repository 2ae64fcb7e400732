//! Seeded, splittable random streams.
//!
//! Every random draw in the crate comes from a [`RngSeed`]: a master seed
//! plus a stream id. The pair selects a ChaCha8 key and stream, so any two
//! distinct pairs give independent sequences and no generator state is ever
//! shared between work units.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// A child stream identified by `tag`. Deriving along the same path of
    /// tags always yields the same seed.
    pub fn derive(&self, tag: u64) -> RngSeed {
        RngSeed {
            seed: self.seed,
            stream: splitmix64(self.stream ^ splitmix64(tag.wrapping_add(0x632B_E59B_D9B4_E019))),
        }
    }

    pub fn derive_path(&self, tags: &[u64]) -> RngSeed {
        tags.iter().fold(*self, |s, &t| s.derive(t))
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
