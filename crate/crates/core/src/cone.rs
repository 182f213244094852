//! Symmetric convex cones in `R^n` containing the positive orthant.
//!
//! Two families are representable: the Gårding cones `Γ_k` and linear images
//! of a base cone under the map
//! `λ_i = (Σ_j μ_j − (n − ϱ) μ_i) / ϱ`, whose inverse is the projection
//! [`project_p`]. Membership of a linear image is decided by projecting back
//! into the base cone.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::esf::elementary_symmetric;

/// Default relative tolerance for open-cone membership.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Upper end of the doubling schedules used by the existential probes.
pub const PROBE_CAP: f64 = 1152921504606846976.0; // 2^60

const VARRHO_MAX_ITERS: usize = 200;
const VARRHO_ABS_TOL: f64 = 1e-12;

/// Eigenvalue n-tuple, always stored in ascending order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    /// Sorts ascending; ties keep their input order.
    pub fn from_unsorted(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| a.total_cmp(b));
        Spectrum(values)
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Spectrum {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Spectrum {
    fn from(v: Vec<f64>) -> Self {
        Spectrum::from_unsorted(v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Garding { k: usize, n: usize },
    LinearImage { base: Box<Cone>, rho: f64 },
}

/// An open symmetric convex cone with a membership tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConeRepr", into = "ConeRepr")]
pub struct Cone {
    shape: Shape,
    tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeType {
    Type1,
    Type2,
}

impl fmt::Display for ConeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeType::Type1 => write!(f, "Type1"),
            ConeType::Type2 => write!(f, "Type2"),
        }
    }
}

/// Outcome of an existential doubling probe.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub member: bool,
    /// Parameter value at which membership was first observed.
    pub witness: Option<f64>,
    /// True when the schedule reached [`PROBE_CAP`] without success.
    pub hit_cap: bool,
}

impl Cone {
    pub fn garding(k: usize, n: usize) -> Result<Self> {
        if n == 0 || k == 0 || k > n {
            return Err(Error::InvalidArgument(format!(
                "Gårding cone needs 1 <= k <= n, got k={k}, n={n}"
            )));
        }
        Ok(Cone {
            shape: Shape::Garding { k, n },
            tol: DEFAULT_TOL,
        })
    }

    /// The positive orthant `Γ_n`.
    pub fn orthant(n: usize) -> Result<Self> {
        Cone::garding(n, n)
    }

    /// The half-space `Γ_1 = {Σλ_i > 0}`.
    pub fn half_space(n: usize) -> Result<Self> {
        Cone::garding(1, n)
    }

    /// Image of `base` under the forward map with parameter `rho`, without
    /// the admissibility checks of [`Cone::transform`].
    pub fn linear_image(base: Cone, rho: f64) -> Result<Self> {
        let n = base.dim() as f64;
        if !rho.is_finite() || rho == 0.0 {
            return Err(Error::InadmissibleParameter(format!(
                "rho must be finite and nonzero, got {rho}"
            )));
        }
        if rho == n {
            return Err(Error::SingularMap { rho });
        }
        let tol = base.tol;
        Ok(Cone {
            shape: Shape::LinearImage {
                base: Box::new(base),
                rho,
            },
            tol,
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        assert!(tol >= 0.0, "tolerance must be nonnegative");
        self.tol = tol;
        self
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::Garding { n, .. } => *n,
            Shape::LinearImage { base, .. } => base.dim(),
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Open-cone membership up to the cone's relative tolerance.
    pub fn contains(&self, lam: &[f64]) -> Result<bool> {
        self.check_dim(lam.len())?;
        Ok(self.member_with_tol(lam, self.tol))
    }

    /// Membership with an explicit tolerance; `tol = 0` is the exact sign test.
    pub(crate) fn member_with_tol(&self, lam: &[f64], tol: f64) -> bool {
        match &self.shape {
            Shape::Garding { k, .. } => garding_margin(lam, *k) > tol,
            Shape::LinearImage { base, rho } => {
                let mu = project_slice(lam, *rho);
                base.member_with_tol(&mu, tol)
            }
        }
    }

    /// Scale-free slack `min_j σ_j(μ)/‖μ‖^j` over the degrees that define the
    /// (base) Gårding cone, evaluated after projecting linear images back.
    /// Membership holds iff the margin exceeds the tolerance.
    pub fn margin(&self, lam: &[f64]) -> f64 {
        match &self.shape {
            Shape::Garding { k, .. } => garding_margin(lam, *k),
            Shape::LinearImage { base, rho } => base.margin(&project_slice(lam, *rho)),
        }
    }

    /// First violated degree `j` with its `σ_j` value, if any.
    pub fn first_violation(&self, lam: &[f64]) -> Option<(usize, f64)> {
        match &self.shape {
            Shape::Garding { k, .. } => {
                let e = elementary_symmetric(lam, *k);
                let norm = euclid(lam);
                (1..=*k).find_map(|j| {
                    if e[j] > self.tol * norm.powi(j as i32) {
                        None
                    } else {
                        Some((j, e[j]))
                    }
                })
            }
            Shape::LinearImage { base, rho } => base.first_violation(&project_slice(lam, *rho)),
        }
    }

    /// `κ_Γ`: the largest number of leading zeros in a `{0,1}` vector that
    /// still lies in the open cone.
    pub fn kappa(&self) -> usize {
        let n = self.dim();
        let mut best = 0;
        for m in 0..n {
            let mut v = vec![1.0; n];
            v[..m].iter_mut().for_each(|x| *x = 0.0);
            if self.member_with_tol(&v, self.tol) {
                best = m;
            }
        }
        best
    }

    /// `ϱ_Γ` with `(1,…,1,1−ϱ_Γ) ∈ ∂Γ`. Closed form `n/k` on Gårding cones.
    pub fn varrho(&self) -> f64 {
        match &self.shape {
            Shape::Garding { k, n } => {
                let exact = *n as f64 / *k as f64;
                debug_assert!((self.varrho_bisection() - exact).abs() <= 1e-9);
                exact
            }
            Shape::LinearImage { .. } => self.varrho_bisection(),
        }
    }

    /// Bisection for `ϱ_Γ` on `[1, n]` using the exact sign test.
    pub fn varrho_bisection(&self) -> f64 {
        let n = self.dim();
        let ray = |t: f64| {
            let mut v = vec![1.0; n];
            v[n - 1] = 1.0 - t;
            self.member_with_tol(&v, 0.0)
        };
        let (mut lo, mut hi) = (1.0f64, n as f64);
        if !ray(lo) {
            // the orthant lies inside every representable cone, so this only
            // happens through rounding at the orthant itself
            return lo;
        }
        if ray(hi) {
            return hi;
        }
        for _ in 0..VARRHO_MAX_ITERS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if ray(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= VARRHO_ABS_TOL * 1e-3 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn cone_type(&self) -> ConeType {
        if self.kappa() == self.dim() - 1 {
            ConeType::Type2
        } else {
            ConeType::Type1
        }
    }

    /// Membership of `λ'` in `Γ_∞`: some `(λ', R)` with `R > 0` lies in the cone.
    pub fn gamma_infty_probe(&self, lam_prime: &[f64]) -> Result<ProbeOutcome> {
        self.check_dim(lam_prime.len() + 1)?;
        let mut v = lam_prime.to_vec();
        v.push(0.0);
        let last = v.len() - 1;
        Ok(doubling_probe(|r| {
            v[last] = r;
            self.member_with_tol(&v, self.tol)
        }))
    }

    pub fn gamma_infty_contains(&self, lam_prime: &[f64]) -> Result<bool> {
        Ok(self.gamma_infty_probe(lam_prime)?.member)
    }

    /// The cone `Γ̃` obtained from `self` by the forward map with parameter
    /// `rho`. Requires `rho != 0`, `rho <= ϱ_Γ`, and `rho < n` for `Γ_1`.
    pub fn transform(&self, rho: f64) -> Result<Cone> {
        let n = self.dim() as f64;
        let varrho = self.varrho();
        if rho == 0.0 || !rho.is_finite() {
            return Err(Error::InadmissibleParameter(format!(
                "rho must be finite and nonzero, got {rho}"
            )));
        }
        if rho > varrho + VARRHO_ABS_TOL {
            return Err(Error::InadmissibleParameter(format!(
                "rho = {rho} exceeds varrho = {varrho}"
            )));
        }
        if rho >= n {
            return Err(Error::InadmissibleParameter(format!(
                "rho = {rho} must be below n = {n} for the half-space"
            )));
        }
        let image = Cone::linear_image(self.clone(), rho)?;
        // orthant containment on a few probe points
        let dim = self.dim();
        let mut probes = vec![vec![1.0; dim]];
        for i in 0..dim {
            let mut v = vec![1e-3; dim];
            v[i] = 1.0;
            probes.push(v);
        }
        for p in &probes {
            if !image.member_with_tol(p, 0.0) {
                return Err(Error::InadmissibleParameter(format!(
                    "transformed cone misses orthant point {p:?}"
                )));
            }
        }
        Ok(image)
    }
}

/// Doubling schedule `1, 2, 4, …, 2^60`.
fn doubling_probe(mut test: impl FnMut(f64) -> bool) -> ProbeOutcome {
    let mut r = 1.0;
    while r <= PROBE_CAP {
        if test(r) {
            return ProbeOutcome {
                member: true,
                witness: Some(r),
                hit_cap: false,
            };
        }
        r *= 2.0;
    }
    ProbeOutcome {
        member: false,
        witness: None,
        hit_cap: true,
    }
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn garding_margin(lam: &[f64], k: usize) -> f64 {
    let e = elementary_symmetric(lam, k);
    let norm = euclid(lam);
    if norm == 0.0 {
        return 0.0;
    }
    (1..=k)
        .map(|j| e[j] / norm.powi(j as i32))
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn project_slice(lam: &[f64], rho: f64) -> Vec<f64> {
    let n = lam.len() as f64;
    let s: f64 = lam.iter().sum();
    let d = n - rho;
    lam.iter().map(|l| (s - rho * l) / d).collect()
}

/// `P(λ) = (Σλ_j·1 − ϱλ)/(n − ϱ)`, coordinate-wise (not re-sorted).
pub fn project_p(lam: &[f64], rho: f64) -> Result<Vec<f64>> {
    if rho == lam.len() as f64 {
        return Err(Error::SingularMap { rho });
    }
    Ok(project_slice(lam, rho))
}

/// Forward map `λ_i = (Σμ_j − (n − ϱ)μ_i)/ϱ`, inverse of [`project_p`].
pub fn map_forward(mu: &[f64], rho: f64) -> Result<Vec<f64>> {
    if rho == 0.0 {
        return Err(Error::InadmissibleParameter("rho must be nonzero".into()));
    }
    let n = mu.len() as f64;
    let s: f64 = mu.iter().sum();
    Ok(mu.iter().map(|m| (s - (n - rho) * m) / rho).collect())
}

/// `P` applied to a spectrum, returned sorted.
pub fn project_spectrum(lam: &Spectrum, rho: f64) -> Result<Spectrum> {
    Ok(Spectrum::from_unsorted(project_p(lam, rho)?))
}

/// Admissibility of boundary Levi eigenvalues `κ'` for the transformed cone
/// `Γ̃ = transform(cone, ρ)`: some large `t` puts
/// `Σκ_i·1 − ρ(κ',0) + t(1,…,1,1−ρ)` in `cone`.
pub fn boundary_admissible(kappa_prime: &[f64], cone: &Cone, rho: f64) -> Result<bool> {
    Ok(boundary_admissible_probe(kappa_prime, cone, rho)?.member)
}

pub fn boundary_admissible_probe(
    kappa_prime: &[f64],
    cone: &Cone,
    rho: f64,
) -> Result<ProbeOutcome> {
    cone.check_dim(kappa_prime.len() + 1)?;
    if rho != 0.0 && rho < cone.varrho() - VARRHO_ABS_TOL {
        return Ok(ProbeOutcome {
            member: true,
            witness: None,
            hit_cap: false,
        });
    }
    Ok(levi_schedule(kappa_prime, cone, rho))
}

/// The raw `t`-doubling schedule, with no short-circuit.
pub(crate) fn levi_schedule(kappa_prime: &[f64], cone: &Cone, rho: f64) -> ProbeOutcome {
    let n = cone.dim();
    let s: f64 = kappa_prime.iter().sum();
    let mut base = vec![s; n];
    for (b, k) in base.iter_mut().zip(kappa_prime) {
        *b -= rho * k;
    }
    let mut dir = vec![1.0; n];
    dir[n - 1] = 1.0 - rho;
    let mut v = vec![0.0; n];
    doubling_probe(|t| {
        for i in 0..n {
            v[i] = base[i] + t * dir[i];
        }
        cone.member_with_tol(&v, cone.tol)
    })
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ShapeRepr {
    Garding { k: usize, n: usize },
    LinearImage { base: Box<Cone>, rho: f64 },
}

#[derive(Serialize, Deserialize)]
struct ConeRepr {
    #[serde(flatten)]
    shape: ShapeRepr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
}

impl TryFrom<ConeRepr> for Cone {
    type Error = Error;
    fn try_from(r: ConeRepr) -> Result<Self> {
        let cone = match r.shape {
            ShapeRepr::Garding { k, n } => Cone::garding(k, n)?,
            ShapeRepr::LinearImage { base, rho } => Cone::linear_image(*base, rho)?,
        };
        match r.tol {
            Some(t) if t < 0.0 || !t.is_finite() => Err(Error::InvalidArgument(format!(
                "tolerance must be nonnegative, got {t}"
            ))),
            Some(t) => Ok(cone.with_tol(t)),
            None => Ok(cone),
        }
    }
}

impl From<Cone> for ConeRepr {
    fn from(c: Cone) -> Self {
        let tol = (c.tol != DEFAULT_TOL).then_some(c.tol);
        let shape = match c.shape {
            Shape::Garding { k, n } => ShapeRepr::Garding { k, n },
            Shape::LinearImage { base, rho } => ShapeRepr::LinearImage { base, rho },
        };
        ConeRepr { shape, tol }
    }
}
