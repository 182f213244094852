//! Eigenvalue localization for bordered Hermitian matrices
//!
//! ```text
//! ⎡ d_1              a_1     ⎤
//! ⎢      ⋱           ⋮       ⎥
//! ⎢          d_{n−1} a_{n−1} ⎥
//! ⎣ ā_1  ⋯  ā_{n−1}  a       ⎦
//! ```
//!
//! Once the corner `a` exceeds a quadratic growth threshold in the border,
//! the first `n−1` eigenvalues sit within `ε` of the diagonal entries and the
//! top one within `[a, a+(n−1)ε)`. Two thresholds are provided: the sharp
//! one with the `(2n−3)/ε` constant and the weaker one whose conclusion
//! only matches each eigenvalue to some diagonal entry.
//!
//! Claims are checked against a dense Hermitian eigensolver; claims whose
//! margin is below `1e-9` are re-decided by an inertia count of the
//! arrowhead matrix in double-double arithmetic.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::sampling::stream;

const FALLBACK_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BorderedHermitian {
    pub d: Vec<f64>,
    pub a: Vec<Complex64>,
    pub corner: f64,
}

impl BorderedHermitian {
    pub fn new(d: Vec<f64>, a: Vec<Complex64>, corner: f64) -> Result<Self> {
        if d.len() != a.len() {
            return Err(Error::DimensionMismatch {
                expected: d.len(),
                actual: a.len(),
            });
        }
        if d.is_empty() {
            return Err(Error::InvalidArgument("bordered matrix needs n >= 2".into()));
        }
        Ok(BorderedHermitian { d, a, corner })
    }

    pub fn n(&self) -> usize {
        self.d.len() + 1
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let n = self.n();
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for (i, (d, a)) in self.d.iter().zip(&self.a).enumerate() {
            m[(i, i)] = Complex64::new(*d, 0.0);
            m[(i, n - 1)] = *a;
            m[(n - 1, i)] = a.conj();
        }
        m[(n - 1, n - 1)] = Complex64::new(self.corner, 0.0);
        m
    }

    /// Ascending eigenvalues from the dense Hermitian eigensolver.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.to_matrix());
        let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Number of eigenvalues strictly below `x`, strictly above `x`, by
    /// Sylvester inertia of `A − x` in double-double. `None` when a diagonal
    /// pivot vanishes exactly.
    pub fn inertia(&self, x: f64) -> Option<(usize, usize)> {
        let xd = Dd::from_f64(x);
        let mut below = 0;
        let mut above = 0;
        let mut schur = Dd::from_f64(self.corner) - xd;
        for (d, a) in self.d.iter().zip(&self.a) {
            let p = Dd::from_f64(*d) - xd;
            match p.signum() {
                s if s < 0.0 => below += 1,
                s if s > 0.0 => above += 1,
                _ => return None,
            }
            let a2 = Dd::from_f64(a.re) * Dd::from_f64(a.re) + Dd::from_f64(a.im) * Dd::from_f64(a.im);
            schur = schur - a2 / p;
        }
        match schur.signum() {
            s if s < 0.0 => below += 1,
            s if s > 0.0 => above += 1,
            _ => {}
        }
        Some((below, above))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    Ok(())
}

/// Sharp growth threshold
/// `(2n−3)/ε·Σ|a_i|² + (n−1)Σ|d_i| + (n−2)ε/(2n−3)`; for `n = 2` the
/// exact 2×2 form `|a_1|²/ε + d_1`.
pub fn growth_threshold(d: &[f64], a: &[Complex64], eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if d.len() != a.len() || d.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: d.len(),
            actual: a.len(),
        });
    }
    let n = d.len() + 1;
    let a2: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    if n == 2 {
        return Ok(a2 / eps + d[0]);
    }
    let c = (2 * n - 3) as f64;
    let dabs: f64 = d.iter().map(|x| x.abs()).sum();
    Ok(c / eps * a2 + (n - 1) as f64 * dabs + (n - 2) as f64 * eps / c)
}

/// Weaker threshold `Σ|a_i|²/ε + Σ[d_i + (n−2)|d_i|] + (n−2)ε`.
pub fn refined_threshold(d: &[f64], a: &[Complex64], eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if d.len() != a.len() || d.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: d.len(),
            actual: a.len(),
        });
    }
    let n = d.len() + 1;
    let a2: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let dsum: f64 = d.iter().map(|x| x + (n - 2) as f64 * x.abs()).sum();
    Ok(a2 / eps + dsum + (n - 2) as f64 * eps)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    /// Whether `lo` belongs to the interval.
    pub closed_lo: bool,
}

impl Interval {
    fn open(center: f64, radius: f64) -> Self {
        Interval {
            lo: center - radius,
            hi: center + radius,
            closed_lo: false,
        }
    }

    /// Signed distance to the complement; positive inside.
    pub fn margin(&self, x: f64) -> f64 {
        (x - self.lo).min(self.hi - x)
    }

    pub fn contains(&self, x: f64) -> bool {
        let m = self.margin(x);
        m > 0.0 || (self.closed_lo && x == self.lo && self.hi > x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationResult {
    /// One interval per ascending eigenvalue `λ_1..λ_{n−1}`.
    pub alpha_intervals: Vec<Interval>,
    pub top_interval: Option<Interval>,
    /// `permutation[α]` is the index of the diagonal entry matched to the
    /// `α`-th smallest eigenvalue.
    pub permutation: Vec<usize>,
    pub satisfied: bool,
    pub threshold: f64,
}

impl LocalizationResult {
    fn refused(threshold: f64) -> Self {
        LocalizationResult {
            alpha_intervals: Vec::new(),
            top_interval: None,
            permutation: Vec::new(),
            satisfied: false,
            threshold,
        }
    }
}

fn sorted_order(d: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..d.len()).collect();
    idx.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
    idx
}

/// Intervals from the sharp threshold, matched in sorted-`d` order.
pub fn localize(m: &BorderedHermitian, eps: f64) -> Result<LocalizationResult> {
    let threshold = growth_threshold(&m.d, &m.a, eps)?;
    if m.corner < threshold {
        return Ok(LocalizationResult::refused(threshold));
    }
    let perm = sorted_order(&m.d);
    let n = m.n();
    Ok(LocalizationResult {
        alpha_intervals: perm.iter().map(|&i| Interval::open(m.d[i], eps)).collect(),
        top_interval: Some(Interval {
            lo: m.corner,
            hi: m.corner + (n - 1) as f64 * eps,
            closed_lo: true,
        }),
        permutation: perm,
        satisfied: true,
        threshold,
    })
}

/// Intervals from the weaker threshold: every `λ_α` is matched to its nearest
/// diagonal entry and the top bound widens by `|Σ(d_α − d_{i_α})|`.
pub fn localize_refined(m: &BorderedHermitian, eps: f64) -> Result<LocalizationResult> {
    let threshold = refined_threshold(&m.d, &m.a, eps)?;
    if m.corner < threshold {
        return Ok(LocalizationResult::refused(threshold));
    }
    let n = m.n();
    let lam = m.eigenvalues();
    let perm: Vec<usize> = lam[..n - 1]
        .iter()
        .map(|l| {
            (0..m.d.len())
                .min_by(|&i, &j| (m.d[i] - l).abs().total_cmp(&(m.d[j] - l).abs()).then(i.cmp(&j)))
                .expect("n >= 2")
        })
        .collect();
    let shift: f64 = m.d.iter().sum::<f64>() - perm.iter().map(|&i| m.d[i]).sum::<f64>();
    Ok(LocalizationResult {
        alpha_intervals: perm.iter().map(|&i| Interval::open(m.d[i], eps)).collect(),
        top_interval: Some(Interval {
            lo: m.corner,
            hi: m.corner + (n - 1) as f64 * eps + shift.abs(),
            closed_lo: true,
        }),
        permutation: perm,
        satisfied: true,
        threshold,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimCheck {
    pub violations: usize,
    /// Smallest signed margin over all claims (negative means violated).
    pub worst_margin: f64,
    /// Claims re-decided by the inertia counter.
    pub fallbacks: usize,
}

/// Whether the `α`-th smallest eigenvalue (1-based) lies in `iv`, decided by
/// inertia counts.
fn rank_in_interval(m: &BorderedHermitian, alpha: usize, iv: &Interval) -> Option<bool> {
    let (below_hi, _) = m.inertia(iv.hi)?;
    let (_, above_lo) = m.inertia(iv.lo)?;
    let n = m.n();
    // λ_α < hi  ⇔ #{λ < hi} ≥ α ;  λ_α > lo ⇔ #{λ > lo} ≥ n − α + 1
    let upper = below_hi >= alpha;
    let lower = if iv.closed_lo {
        let (below_lo, _) = m.inertia(iv.lo)?;
        below_lo < alpha
    } else {
        above_lo > n - alpha
    };
    Some(upper && lower)
}

/// Verifies a satisfied result against the eigenvalues of `m`.
pub fn check_claims(m: &BorderedHermitian, res: &LocalizationResult) -> ClaimCheck {
    let mut out = ClaimCheck {
        violations: 0,
        worst_margin: f64::INFINITY,
        fallbacks: 0,
    };
    if !res.satisfied {
        return out;
    }
    let lam = m.eigenvalues();
    let n = m.n();
    let top = res.top_interval.expect("satisfied results carry a top interval");
    let claims = res
        .alpha_intervals
        .iter()
        .enumerate()
        .map(|(i, iv)| (i + 1, *iv))
        .chain(std::iter::once((n, top)));
    for (rank, iv) in claims {
        let x = lam[rank - 1];
        let margin = iv.margin(x);
        let mut ok = iv.contains(x);
        if margin.abs() < FALLBACK_MARGIN {
            if let Some(v) = rank_in_interval(m, rank, &iv) {
                ok = v;
                out.fallbacks += 1;
            }
        }
        if !ok {
            out.violations += 1;
        }
        let shown = if ok { margin.max(0.0) } else { margin.min(-f64::MIN_POSITIVE) };
        out.worst_margin = out.worst_margin.min(shown);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub n: usize,
    pub threshold: f64,
    pub corner: f64,
    pub worst_margin: f64,
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub n: usize,
    pub eps: f64,
    pub trials: usize,
    pub satisfied: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub fallbacks: usize,
    pub rows: Vec<TrialRow>,
}

/// Which threshold/conclusion pair a verification run exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Sharp,
    Refined,
}

/// Random instance with `d_i ∈ [−2,2]` and `|a_i| ≤ 2`.
pub fn random_instance(n: usize, rng: &mut impl Rng) -> (Vec<f64>, Vec<Complex64>) {
    let d = (0..n - 1).map(|_| rng.random_range(-2.0..=2.0)).collect();
    let a = (0..n - 1)
        .map(|_| {
            let r = 2.0 * rng.random::<f64>().sqrt();
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(r, th)
        })
        .collect();
    (d, a)
}

/// Randomized harness: corner set to `threshold + margin·U(0,1)`, claims
/// checked against exact eigenvalues.
pub fn verify_against_eigensolver(
    n: usize,
    eps: f64,
    trials: usize,
    margin: f64,
    seed: u64,
    variant: Variant,
) -> Result<VerifyReport> {
    check_eps(eps)?;
    if n < 2 {
        return Err(Error::InvalidArgument("n must be at least 2".into()));
    }
    let rows: Vec<(TrialRow, usize)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(TrialRow, usize)> {
            let mut rng = stream(seed, t as u64);
            let (d, a) = random_instance(n, &mut rng);
            let threshold = match variant {
                Variant::Sharp => growth_threshold(&d, &a, eps)?,
                Variant::Refined => refined_threshold(&d, &a, eps)?,
            };
            let corner = threshold + margin * rng.random::<f64>().abs();
            let m = BorderedHermitian::new(d, a, corner)?;
            let res = match variant {
                Variant::Sharp => localize(&m, eps)?,
                Variant::Refined => localize_refined(&m, eps)?,
            };
            let c = check_claims(&m, &res);
            Ok((
                TrialRow {
                    trial: t,
                    n,
                    threshold,
                    corner,
                    worst_margin: c.worst_margin,
                    violation: c.violations > 0,
                },
                c.fallbacks,
            ))
        })
        .collect::<Result<_>>()?;
    let satisfied = rows.iter().filter(|r| r.0.corner >= r.0.threshold).count();
    let violations = rows.iter().filter(|r| r.0.violation).count();
    let worst_margin = rows.iter().fold(f64::INFINITY, |a, r| a.min(r.0.worst_margin));
    let fallbacks = rows.iter().map(|r| r.1).sum();
    Ok(VerifyReport {
        n,
        eps,
        trials,
        satisfied,
        violations,
        worst_margin,
        fallbacks,
        rows: rows.into_iter().map(|r| r.0).collect(),
    })
}

pub const CSV_HEADER: &str = "trial,n,threshold,corner,worst_margin,violation";

impl TrialRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{:.17e},{:.17e},{:.17e},{}",
            self.trial, self.n, self.threshold, self.corner, self.worst_margin, self.violation as u8
        )
    }
}
