//! Seed derivation for independent random substreams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed of substream `stream` of `seed`, via the SplitMix64 finalizer.
pub fn substream_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(seed, stream))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ() {
        let seeds: std::collections::HashSet<u64> =
            (0..10_000).map(|i| substream_seed(7, i)).collect();
        assert_eq!(seeds.len(), 10_000);
        assert_ne!(substream_seed(1, 0), substream_seed(2, 0));
    }
}
