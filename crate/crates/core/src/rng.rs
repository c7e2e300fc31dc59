//! Seed derivation. Every random stream is a ChaCha8 generator keyed by a
//! seed mixed from `(master, replicate, purpose)` with SplitMix64, so streams
//! are reproducible independently of each other and of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Scenario,
    Measurement,
    Filter,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Scenario => 0x5ce0,
            Purpose::Measurement => 0x3ea5,
            Purpose::Filter => 0xf117,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, replicate: u64, purpose: Purpose) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ replicate) ^ purpose.tag())
}

/// Stream index for an ordered tuple of identifiers, e.g. a filter and a
/// threshold within one replicate.
pub fn stream_id(parts: &[u64]) -> u64 {
    parts.iter().fold(0x243f_6a88_85a3_08d3, |acc, &p| splitmix64(acc ^ p))
}

/// Generator for one `(master, replicate, purpose)` triple on stream `stream`.
pub fn stream_rng(master: u64, replicate: u64, purpose: Purpose, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master, replicate, purpose));
    rng.set_stream(stream);
    rng
}
