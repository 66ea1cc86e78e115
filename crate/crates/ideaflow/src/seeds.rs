//! Seed derivation for reproducible runs.
//!
//! All randomness flows from one root seed through named sub-streams
//! (`graph`, `exploration`, `evolution`, `backends`). Adding a consumer to one
//! stage cannot silently shift the draws seen by another.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

/// FNV-1a over the given parts, with a length byte between parts so that
/// `["ab", "c"]` and `["a", "bc"]` hash differently.
pub fn stable_hash64(parts: &[&str]) -> u64 {
    let mut h = FNV_OFFSET;
    for part in parts {
        for b in part.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(FNV_PRIME);
        }
        h ^= 0xff;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Derive the seed for a named sub-stream of `root`.
pub fn substream_seed(root: u64, name: &str) -> u64 {
    stable_hash64(&[&format!("{root:016x}"), name])
}

/// Seeded generator for a named sub-stream. ChaCha keeps the stream stable
/// across platforms and releases.
pub fn substream(root: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(root, name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn substreams_are_independent_and_stable() {
        let mut a1 = substream(7, "exploration");
        let mut a2 = substream(7, "exploration");
        let mut b = substream(7, "evolution");
        let xs1: Vec<u64> = (0..8).map(|_| a1.random()).collect();
        let xs2: Vec<u64> = (0..8).map(|_| a2.random()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.random()).collect();
        assert_eq!(xs1, xs2);
        assert_ne!(xs1, ys);
    }

    #[test]
    fn part_boundaries_matter() {
        assert_ne!(stable_hash64(&["ab", "c"]), stable_hash64(&["a", "bc"]));
    }
}
