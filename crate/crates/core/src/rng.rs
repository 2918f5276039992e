//! Deterministic random substreams.
//!
//! Every Monte Carlo path is driven by its own generator whose seed is a
//! pure function of a master seed and a short key (interval index, path
//! index, replication number, ...). Paths therefore do not depend on the
//! order in which they are produced, which keeps parallel runs identical to
//! serial ones and lets callers reuse the exact same draws across parameter
//! values (common random numbers).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PathRng = ChaCha8Rng;

/// Domain tags so that streams used for different purposes never collide.
pub mod tag {
    pub const BRIDGE: u64 = 0x4252_4944_4745;
    pub const SIMULATE: u64 = 0x5349_4d55;
    pub const ROGERS: u64 = 0x524f_4745_5253;
    pub const SML: u64 = 0x534d_4c;
    pub const OU_BRIDGE: u64 = 0x4f55_4252;
    pub const DIAGNOSTIC: u64 = 0x4449_4147;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed and a key into a 64-bit stream seed.
pub fn derive_seed(master: u64, key: &[u64]) -> u64 {
    key.iter()
        .fold(splitmix64(master), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

pub fn substream(master: u64, key: &[u64]) -> PathRng {
    PathRng::seed_from_u64(derive_seed(master, key))
}
