//! Seeded random streams.
//!
//! All randomness flows through [`SimRng`], a ChaCha8 generator. Its output
//! for a given seed is stable across `rand_chacha` 0.3.x releases, which makes
//! the draw order part of the scenario file contract: positions first, then
//! fading, in fixed index order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator identifier written into serialized scenarios and metadata.
pub const RNG_NAME: &str = "chacha8/rand_chacha-0.3";

pub type SimRng = ChaCha8Rng;

/// Stream index used for topology generation.
pub const TOPOLOGY_STREAM: u64 = 0;
/// Stream index used by the random power-allocation baseline.
pub const RANDOM_BASELINE_STREAM: u64 = 1;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// An independent stream of the generator keyed by `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of Monte Carlo run `run_index` under `master_seed`.
///
/// `mix64(master_seed ^ mix64(run_index))`. Depends only on the pair, so runs
/// can be fanned out to workers in any order.
pub fn child_seed(master_seed: u64, run_index: u64) -> u64 {
    mix64(master_seed ^ mix64(run_index))
}

/// Serde adapter for 64-bit seeds in text formats whose integers are signed
/// 64-bit (TOML): values above `i64::MAX` are written as decimal strings.
/// Both forms are accepted on input.
pub mod seed_format {
    use std::fmt;

    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        struct SeedVisitor;

        impl Visitor<'_> for SeedVisitor {
            type Value = u64;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a non-negative 64-bit integer or its decimal string")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<u64, E> {
                Ok(v)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<u64, E> {
                u64::try_from(v).map_err(|_| E::custom(format!("seed must be non-negative, got {v}")))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<u64, E> {
                v.parse().map_err(|_| E::custom(format!("invalid seed {v:?}")))
            }
        }

        d.deserialize_any(SeedVisitor)
    }
}
