//! Seeded randomness.
//!
//! Every random stream in the crate is a [`Xoshiro256PlusPlus`] generator
//! whose 256-bit state is expanded from a single `u64` by SplitMix64
//! (`SeedableRng::seed_from_u64`). The algorithm is fixed, so a given seed
//! produces the same stream on every platform.
//!
//! Purpose-specific streams are derived from one root seed with
//! [`derive_seed`]: the purpose label is hashed with 64-bit FNV-1a, mixed
//! with the index, and both are passed through the SplitMix64 finalizer
//! before being xored into the root. Changing the fold-plan seed never moves
//! the dropout or shuffling streams, and vice versa.

use rand::SeedableRng;
pub use rand_xoshiro::Xoshiro256PlusPlus;

/// The generator used throughout the crate.
pub type Rng = Xoshiro256PlusPlus;

/// Creates the generator for `seed`.
pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Derives the sub-seed for `purpose` (and an index within it, such as a
/// fold number) from `root`.
pub fn derive_seed(root: u64, purpose: &str, index: u64) -> u64 {
    splitmix64(root ^ splitmix64(fnv1a(purpose) ^ splitmix64(index)))
}

/// Well-known purpose labels used by the pipeline.
pub mod purpose {
    pub const FOLDS: &str = "folds";
    pub const INIT: &str = "init";
    pub const SHUFFLE: &str = "shuffle";
    pub const DROPOUT: &str = "dropout";
    pub const SPLIT: &str = "split";
    pub const LABEL_PERMUTATION: &str = "label-permutation";
}
