//! Seed expansion.
//!
//! Every command owns a single 64-bit root seed. Each logical consumer of
//! randomness (ground-truth factors, masks, probe points, ...) asks for a
//! named substream, so adding a new consumer never perturbs existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Generator used for every random draw in the crate.
pub type StreamRng = ChaCha20Rng;

/// A root seed from which named, independent substreams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    root: u64,
}

impl SeedStream {
    pub const fn new(root: u64) -> Self {
        Self { root }
    }

    pub const fn root(&self) -> u64 {
        self.root
    }

    /// Seed of the substream called `name`.
    pub fn seed(&self, name: &str) -> u64 {
        splitmix64(self.root ^ splitmix64(fnv1a(name.as_bytes())))
    }

    /// Child stream, useful for indexed consumers (one per trial, per cell, ...).
    pub fn child(&self, name: &str, index: u64) -> SeedStream {
        SeedStream::new(splitmix64(self.seed(name) ^ splitmix64(index.wrapping_add(0x9e37))))
    }

    pub fn rng(&self, name: &str) -> StreamRng {
        StreamRng::seed_from_u64(self.seed(name))
    }
}

/// Generator for a bare seed, for callers that manage seeds themselves.
pub fn rng_from_seed(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325_u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
