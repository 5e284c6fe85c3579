//! Keyed random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by a
//! seed plus a key path, e.g. `(seed, LABELS, i)` for the complementary label
//! of instance `i`. Results therefore never depend on evaluation order or on
//! the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Domain tags keeping the key spaces of different consumers disjoint.
pub mod domain {
    pub const COMPLEMENTARY: u64 = 1;
    pub const LONGTAIL: u64 = 2;
    pub const PCA: u64 = 3;
    pub const KMEANS: u64 = 4;
    pub const MIX: u64 = 5;
    pub const INIT: u64 = 6;
    pub const SHUFFLE: u64 = 7;
    pub const SPLIT: u64 = 8;
    pub const GRAD: u64 = 9;
    pub const NOISE: u64 = 10;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Returns the stream addressed by `seed` and `key`.
///
/// All key components but the last select the ChaCha key; the last selects
/// the ChaCha stream id, so consecutive indices are cheap to address.
pub fn stream(seed: u64, key: &[u64]) -> StreamRng {
    let (prefix, last) = match key.split_last() {
        Some((last, prefix)) => (prefix, *last),
        None => (&[][..], 0),
    };
    let mut h = splitmix64(seed);
    for &k in prefix {
        h = splitmix64(h ^ k);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(h);
    rng.set_stream(last);
    rng
}
