//! Seeded random streams.
//!
//! Every stream is a xoshiro256** generator whose 256-bit state is expanded
//! from a 64-bit seed with splitmix64. Child seeds are derived as
//! `splitmix64(parent ^ tag)` so adding a new consumer never shifts the
//! streams of existing ones.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256StarStar};

pub type SimRng = Xoshiro256StarStar;

/// Tags for the per-module seed derivation.
pub mod tag {
    pub const SCENE: u64 = 0x5343_454e_4500_0001;
    pub const NOISE: u64 = 0x4e4f_4953_4500_0002;
    pub const PROJECTION: u64 = 0x5052_4f4a_0000_0003;
    pub const DETECTOR: u64 = 0x4445_5445_4354_0004;
    pub const SCHEDULER: u64 = 0x5343_4845_4400_0005;
    pub const PREDICTOR: u64 = 0x5052_4544_0000_0006;
    pub const OBJECT: u64 = 0x4f42_4a45_4354_0007;
}

/// One splitmix64 output for state `x`.
pub fn splitmix64(x: u64) -> u64 {
    SplitMix64::seed_from_u64(x).next_u64()
}

pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    splitmix64(parent ^ tag)
}

pub fn stream(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Counter-based substream: independent of how many other substreams were drawn.
pub fn substream(seed: u64, counter: u64) -> SimRng {
    SimRng::seed_from_u64(splitmix64(seed ^ splitmix64(counter.wrapping_add(0x9e37_79b9))))
}
