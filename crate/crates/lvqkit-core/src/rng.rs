//! Seeded random numbers. Everything randomized in this crate takes an
//! explicit seed and draws from a ChaCha stream, so results are identical
//! across runs and platforms.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub(crate) fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from [0, 1) with 53-bit resolution.
#[inline]
pub(crate) fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw from the open interval (-half, half).
#[inline]
pub(crate) fn open_centered(rng: &mut impl RngCore, half: f64) -> f64 {
    // Rejects the single u = 0 draw so the support stays open at -half.
    loop {
        let u = unit_f64(rng);
        if u != 0.0 {
            return (u - 0.5) * 2.0 * half;
        }
    }
}
