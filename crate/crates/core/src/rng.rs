//! Seeded random number generation.
//!
//! Every randomized routine in this library takes an explicit `u64` seed and
//! draws from a ChaCha20 stream, so identical seeds reproduce identical
//! output byte for byte. Independent streams for repeated trials come from
//! [`stream`], which keeps the seed fixed and varies the ChaCha stream id.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Name of the generator, recorded in experiment output headers.
pub const RNG_ALGORITHM: &str = "chacha20";

/// Generator for the given seed, stream 0.
pub fn seeded(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Generator for trial `stream` of the given seed.
pub fn stream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_same_draws() {
        let a: Vec<f64> = seeded(7).sample_iter(rand::distributions::Standard).take(32).collect();
        let b: Vec<f64> = seeded(7).sample_iter(rand::distributions::Standard).take(32).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn streams_are_distinct() {
        let a: f64 = stream(7, 0).gen();
        let b: f64 = stream(7, 1).gen();
        assert_ne!(a, b);
    }
}
