//! Deterministic seed derivation and random primitives.
//!
//! Every randomized operation takes an explicit `u64` seed. Sub-streams
//! (per setting, per replicate, per grid cell) derive their own seed with
//! [`derive_seed`], so results never depend on execution order or on how
//! work is split across workers.

use rand::{Rng, SeedableRng};

use crate::scalar;
use crate::Complex64;

pub(crate) type SeededRng = rand_chacha::ChaCha12Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `index` from a parent seed.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ index)
}

pub(crate) fn rng_from_seed(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

/// Standard complex Gaussian (unit total variance) via Box–Muller.
pub(crate) fn standard_complex_gaussian(rng: &mut SeededRng) -> Complex64 {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let radius = scalar::sqrt(-2.0 * scalar::ln(1.0 - u1));
    let angle = core::f64::consts::TAU * u2;
    // Each quadrature has variance 1/2 so that E|z|^2 = 1.
    Complex64::new(
        radius * scalar::cos(angle) * core::f64::consts::FRAC_1_SQRT_2,
        radius * scalar::sin(angle) * core::f64::consts::FRAC_1_SQRT_2,
    )
}
