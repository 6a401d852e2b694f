//! Seeded random number generation.
//!
//! Every random draw in the crate comes from ChaCha8, a counter-based stream
//! cipher generator whose output depends only on the 64-bit seed, never on the
//! platform or word size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
