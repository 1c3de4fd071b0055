use rand::distr::{Distribution, Uniform};
use rand::Rng;

use super::Real;

/// Half-width of the Glorot/Xavier uniform law.
pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// `len` draws from `U(-b, b)` with `b = sqrt(6 / (fan_in + fan_out))`.
/// Draws are made in `f64` so both precisions see the same stream.
pub fn xavier_init<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    fan_in: usize,
    fan_out: usize,
    len: usize,
) -> Vec<T> {
    assert!(fan_in > 0 && fan_out > 0, "Xavier fans must be positive");
    let b = xavier_bound(fan_in, fan_out);
    let dist = Uniform::new_inclusive(-b, b).expect("finite bound");
    (0..len).map(|_| T::lit(dist.sample(rng))).collect()
}
