//! Deterministic randomness contract.
//!
//! All stochastic operations take an explicit [`RngSeed`]. The same seed and
//! the same call sequence produce identical output on every platform; no
//! ambient entropy is ever consulted.
//!
//! Replicated computations (envelope simulations, survey subregions,
//! per-user channel draws) derive per-replicate child seeds with
//! [`derive_seed`], a fixed splitmix64-based mix of the master seed and the
//! replicate index. Results are therefore independent of evaluation order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A 64-bit seed for deterministic sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Build the stream RNG for this seed.
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Child seed for replicate `index`.
    pub fn child(self, index: u64) -> RngSeed {
        RngSeed(derive_seed(self.0, index))
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed(seed)
    }
}

/// Fixed seed-derivation rule: `splitmix64(master ^ (index + 1) * GOLDEN)`.
///
/// The `+ 1` keeps index 0 from passing the master seed through unmixed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ (index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
