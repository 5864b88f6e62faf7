//! Counter-based random streams.
//!
//! Every random quantity in a trial is a pure function of the trial seed and a
//! small tuple of keys (stream tag, vehicle slot, leg index, ...). Nothing is
//! drawn from a shared sequential generator, so the values one vehicle sees do
//! not depend on how many other vehicles exist or in which order they ask.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags. Changing any of these changes every generated trial.
pub(crate) const STREAM_SITES: u64 = 0x5173_0001;
pub(crate) const STREAM_KMEANS: u64 = 0x5173_0002;
pub(crate) const STREAM_WIND: u64 = 0x5173_0003;
pub(crate) const STREAM_LEG: u64 = 0x5173_0004;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a seed and a key tuple into one 64-bit value.
pub fn derive_key(seed: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(mix64(seed), |acc, &k| mix64(acc ^ mix64(k)))
}

/// Uniform draw in `[0, 1)` addressed by `(seed, keys)`.
pub fn keyed_unit(seed: u64, keys: &[u64]) -> f64 {
    ((derive_key(seed, keys) >> 11) as f64) * (1.0 / ((1u64 << 53) as f64))
}

/// A sequential generator for a whole sub-stream (layout generation, k-means
/// seeding) where order-dependence inside the stream is fine.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_key(seed, &[stream]))
}

/// 64-bit FNV-1a, used for config and layout fingerprints.
#[derive(Debug, Clone)]
pub struct Fnv64(u64);

impl Default for Fnv64 {
    fn default() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }
}

impl Fnv64 {
    pub fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
    }

    pub fn write_f64(&mut self, v: f64) {
        self.write_u64(v.to_bits());
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}
