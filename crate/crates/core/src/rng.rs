//! Deterministic seed streams.
//!
//! Every random quantity in an experiment is drawn from a generator whose
//! seed is a pure function of the master seed and a path of labels, e.g.
//! `master -> "stable_clock" -> "N=1000" -> replica 17 -> "walk"`. The mixing
//! function is the SplitMix64 finalizer:
//!
//! ```text
//! root            = mix64(master ^ 0x6A09E667F3BCC908)
//! derive(k, name) = mix64(k ^ mix64(fnv1a64(name)))
//! index(k, i)     = mix64(k + (i + 1) * 0x9E3779B97F4A7C15)
//! ```
//!
//! Replica streams therefore never depend on scheduling or worker count.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Generator used for all simulation streams.
pub type StreamRng = Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// A node in the seed derivation tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedStream {
    key: u64,
}

impl SeedStream {
    pub fn new(master: u64) -> Self {
        Self {
            key: mix64(master ^ 0x6A09_E667_F3BC_C908),
        }
    }

    /// Child stream identified by a label.
    pub fn derive(&self, label: &str) -> Self {
        Self {
            key: mix64(self.key ^ mix64(fnv1a64(label.as_bytes()))),
        }
    }

    /// Child stream identified by an index (replica number, repetition, ...).
    pub fn index(&self, i: u64) -> Self {
        Self {
            key: mix64(self.key.wrapping_add(i.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))),
        }
    }

    /// The 64-bit seed of this node.
    pub fn seed(&self) -> u64 {
        self.key
    }

    pub fn rng(&self) -> StreamRng {
        StreamRng::seed_from_u64(self.key)
    }
}
