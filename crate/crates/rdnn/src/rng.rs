//! Deterministic seed derivation.
//!
//! All randomness in the crate flows from user-supplied `u64` seeds through
//! the helpers here, so identical inputs always reproduce identical outputs
//! regardless of thread scheduling. Substreams are derived by mixing the base
//! seed with a hashed tag, which keeps parallel generation order-independent.

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

/// Finalizer from the splitmix64 generator; a cheap, well-mixed u64 hash.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed and a sequence of stream tags.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(base), |acc, &tag| splitmix64(acc ^ splitmix64(tag)))
}

/// RNG for one subject's substream: `seed ^ hash(subject index)`.
///
/// Row contents depend only on `(seed, subject)`, so subjects can be drawn
/// concurrently and reordering subjects permutes rows exactly.
pub fn subject_rng(seed: u64, subject: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ splitmix64(subject as u64))
}

/// RNG for a named substream of `seed`.
pub fn stream_rng(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &[tag]))
}

/// Stream tags, one per independent source of randomness.
pub mod tags {
    /// Outlier subject selection.
    pub const CONTAM_SELECT: u64 = 0x01;
    /// Outlier magnitude draws.
    pub const CONTAM_MAGNITUDE: u64 = 0x02;
    /// Network weight initialization.
    pub const INIT: u64 = 0x03;
    /// Mini-batch shuffling and dropout masks.
    pub const TRAIN: u64 = 0x04;
    /// Per-quantile fit seeds.
    pub const QUANTILE: u64 = 0x05;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn splitmix_is_stable() {
        // Reference values from the published splitmix64 sequence.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_ne!(splitmix64(1), splitmix64(2));
    }

    #[test]
    fn subject_streams_are_disjoint_and_deterministic() {
        let mut a = subject_rng(7, 0);
        let mut a2 = subject_rng(7, 0);
        let mut b = subject_rng(7, 1);
        assert_eq!(a.next_u64(), a2.next_u64());
        assert_ne!(subject_rng(7, 0).next_u64(), b.next_u64());
    }

    #[test]
    fn derive_seed_depends_on_every_tag() {
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
        assert_ne!(derive_seed(1, &[2]), derive_seed(2, &[2]));
    }
}
