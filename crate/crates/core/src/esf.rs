//! Elementary symmetric polynomials.
//!
//! Evaluated by the one-variable-at-a-time recurrence
//! `e_j(x_1..x_m) = e_j(x_1..x_{m-1}) + x_m e_{j-1}(x_1..x_{m-1})`
//! with double-double accumulation, which keeps the sign of `e_j` reliable
//! close to the boundary of the Gårding cones.

use crate::dd::Dd;

fn esf_dd(values: impl Iterator<Item = f64>, kmax: usize) -> Vec<Dd> {
    let mut e = vec![Dd::ZERO; kmax + 1];
    e[0] = Dd::ONE;
    let mut m = 0usize;
    for x in values {
        m += 1;
        let top = m.min(kmax);
        for j in (1..=top).rev() {
            e[j] = e[j] + e[j - 1].mul_f64(x);
        }
    }
    e
}

/// `[e_0, e_1, ..., e_kmax]` of `values`. Degrees above `values.len()` are zero.
pub fn elementary_symmetric(values: &[f64], kmax: usize) -> Vec<f64> {
    esf_dd(values.iter().copied(), kmax)
        .into_iter()
        .map(Dd::to_f64)
        .collect()
}

/// `e_k(values)`.
pub fn sigma(values: &[f64], k: usize) -> f64 {
    elementary_symmetric(values, k)[k]
}

/// `[e_0, ..., e_kmax]` of `values` with entry `skip` removed, i.e. `σ_j(λ|i)`.
pub fn elementary_symmetric_without(values: &[f64], skip: usize, kmax: usize) -> Vec<f64> {
    let it = values
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != skip)
        .map(|(_, x)| *x);
    esf_dd(it, kmax).into_iter().map(Dd::to_f64).collect()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}
