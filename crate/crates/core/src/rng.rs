//! Seeded, platform-independent random generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::{lit, Scalar};
use crate::space::Vector;

/// Counter-based ChaCha stream keyed by `seed`.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian<T: Scalar>(rng: &mut impl Rng, dim: usize) -> Vector<T> {
    (0..dim)
        .map(|_| lit::<T>(rng.sample::<f64, _>(StandardNormal)))
        .collect()
}

pub fn uniform<T: Scalar>(rng: &mut impl Rng, dim: usize, lo: f64, hi: f64) -> Vector<T> {
    (0..dim).map(|_| lit::<T>(rng.random_range(lo..hi))).collect()
}

/// Gaussian probe with a random magnitude spanning several decades, so
/// falsification probes see both tiny and large differences.
pub fn probe<T: Scalar>(rng: &mut impl Rng, dim: usize) -> Vector<T> {
    let decade: f64 = rng.random_range(-2.0..2.0);
    gaussian::<T>(rng, dim).scale(lit(10f64.powf(decade)))
}
