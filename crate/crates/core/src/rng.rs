//! Seeded, stream-addressable random numbers.
//!
//! Every random draw in the toolkit is keyed by `(seed, stream)` and then by
//! its position within the stream. ChaCha is a counter-based cipher, so a
//! stream can be opened independently by any worker and the values it yields
//! do not depend on how work is partitioned.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

/// Opens the generator for `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw from `[0, 1)`.
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

/// Index drawn from the categorical distribution `weights` (assumed to sum
/// to 1). Falls back to the last positive-weight index on round-off.
pub fn categorical<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let u = uniform(rng);
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Draw from the symmetric Dirichlet with unit concentration, i.e. a point
/// uniformly distributed on the probability simplex of dimension `k`.
pub fn dirichlet_unit<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..k)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            // Exp1 can in principle return 0; keep full support.
            e.max(f64::MIN_POSITIVE)
        })
        .collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / total).collect()
}
