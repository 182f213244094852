//! Deterministic sampling helpers.
//!
//! Every random stream is a ChaCha8 keystream keyed by the user seed and
//! selected by a stream index, so parallel workers draw identical values
//! regardless of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cone::Cone;

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Standard normal by Box-Muller.
pub fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Smallest `s` (to bisection accuracy) with `v + s·1` in the closure of `cone`.
pub fn entry_shift(cone: &Cone, v: &[f64]) -> f64 {
    let amax = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut hi = amax + 1.0;
    let mut lo = -hi;
    let shifted = |s: f64| v.iter().map(|x| x + s).collect::<Vec<_>>();
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if cone.member_with_tol(&shifted(mid), 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// A random point of the open cone: a Gaussian vector pushed along `1`
/// past the boundary by a log-uniform depth in `[1e-3, 3]` times its scale.
/// Returned coordinates are unsorted.
pub fn sample_in_cone(cone: &Cone, rng: &mut impl Rng) -> Vec<f64> {
    let n = cone.dim();
    loop {
        let v: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
        let scale = 1.0 + v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let s = entry_shift(cone, &v);
        let depth = scale * 10f64.powf(rng.random_range(-3.0..0.5));
        let lam: Vec<f64> = v.iter().map(|x| x + s + depth).collect();
        if cone.member_with_tol(&lam, cone.tol()) {
            return lam;
        }
    }
}

pub fn sample_positive(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| 10f64.powf(rng.random_range(-2.0..1.0))).collect()
}
