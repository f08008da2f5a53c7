//! Seeded random streams with named, hierarchical substreams.
//!
//! Every random decision in the crate is drawn from a [`SeedStream`] derived
//! from a single root seed by a path of `(label, index)` pairs, e.g.
//! `root / ("trial", 3) / ("step", 17)`. The derivation is a pure function of
//! the path, so any substream can be replayed without replaying its siblings.
//! Generators are ChaCha8 (counter based), keyed by the derived 64-bit value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Concrete generator type handed to sampling routines.
pub type StreamRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedStream {
    key: u64,
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// FNV-1a, stable across platforms and compiler versions
fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream { key: mix(seed) }
    }

    /// Derive the named child substream `(label, index)`.
    pub fn child(&self, label: &str, index: u64) -> SeedStream {
        let h = mix(self.key ^ label_hash(label));
        SeedStream {
            key: mix(h ^ mix(index.wrapping_add(0x632B_E59B_D9B4_E019))),
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn rng(&self) -> StreamRng {
        ChaCha8Rng::seed_from_u64(self.key)
    }
}

impl From<u64> for SeedStream {
    fn from(seed: u64) -> Self {
        SeedStream::new(seed)
    }
}
