//! Deterministic random-stream derivation.
//!
//! The world owns a single 64-bit seed. Every stochastic draw (message loss,
//! motion noise, sensor noise, placement) pulls from a substream keyed by
//! purpose, tick, and the robot ids involved. Substreams are independent of
//! iteration order and of the total robot count, so adding a robot never
//! perturbs the draws of unrelated robots.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags keep substreams for different draw kinds disjoint.
#[derive(Debug, Clone, Copy)]
pub enum StreamKind {
    MessageLoss = 1,
    MotionNoise = 2,
    SensorNoise = 3,
    Placement = 4,
    Heading = 5,
}

/// splitmix64 finalizer; standard integer mix with full avalanche.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed source for derived substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamSeed(pub u64);

impl StreamSeed {
    /// Derive an independent generator for the given key parts.
    pub fn stream(self, kind: StreamKind, parts: &[u64]) -> ChaCha8Rng {
        let mut state = splitmix64(self.0 ^ (kind as u64).wrapping_mul(0xa076_1d64_78bd_642f));
        for &p in parts {
            state = splitmix64(state ^ p);
        }
        ChaCha8Rng::seed_from_u64(state)
    }
}
