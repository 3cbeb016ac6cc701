//! Seed derivation for reproducible random streams.
//!
//! Every random draw in a run descends from a single master seed. A child
//! seed is `mix(parent, stream, index)`, where `mix` applies the SplitMix64
//! finalizer to the parent combined with a stream tag and a counter. Window
//! `t` of a sweep always receives the same seed no matter which thread runs
//! it or in what order, so parallel runs are bit-identical to serial ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every stochastic component.
pub type SimRng = ChaCha8Rng;

/// Stream tags for the top-level consumers of the master seed.
pub mod stream {
    pub const TOPOLOGY: u64 = 0x746f_706f;
    pub const WINDOW: u64 = 0x7769_6e64;
    pub const PROFILE: u64 = 0x7072_6f66;
    pub const DISTANCE: u64 = 0x6469_7374;
    pub const MULTIPAIR: u64 = 0x6d75_6c74;
    pub const HOPFIT: u64 = 0x686f_7066;
}

/// Sub-streams inside one window.
pub mod window {
    pub const PAIRS: u64 = 1;
    pub const CAPACITY: u64 = 2;
    pub const SELECTION: u64 = 3;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of child `index` on `stream` below `parent`.
pub fn derive(parent: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent ^ splitmix64(stream)).wrapping_add(index))
}

pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
