//! Radial reduction on the annulus `t = |z|² ∈ [t0, 1]` in `ℂⁿ`.
//!
//! For `u = φ(|z|²)` and `χ = c ω` the eigenvalues of `χ + ∂∂̄u` are
//! `c + φ'` (n − 1 times) and `c + φ' + tφ''`. The distance to the outer
//! sphere is `σ = 1 − √t`.

use serde::{Deserialize, Serialize};

use super::{sup_norm, SolveReport, CONTINUATION, MAX_HALVINGS};
use crate::cone::{Cone, Spectrum};
use crate::error::{Error, Result};
use crate::operator::OperatorSpec;

pub const DEFAULT_T0: f64 = 0.04;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100;

/// Fraction of grid points next to the outer boundary used for blow-up
/// diagnostics.
pub const COLLAR_FRACTION: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialBoundary {
    Dirichlet { inner: f64, outer: f64 },
    /// Boundary value `2 log k` at both ends for each `k`.
    Exhaustion { ks: Vec<u32> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProblem {
    pub n: usize,
    /// Uniform grid on `[t0, 1]`.
    pub t: Vec<f64>,
    pub chi_const: f64,
    pub psi: Vec<f64>,
    pub lambda0: f64,
    pub boundary: RadialBoundary,
    pub operator: OperatorSpec,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiSpec {
    Constant(f64),
    Values(Vec<f64>),
}

/// JSON form of a radial problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialSpec {
    pub n: usize,
    pub intervals: usize,
    #[serde(default = "default_t0")]
    pub t0: f64,
    pub chi_const: f64,
    pub psi: PsiSpec,
    pub lambda0: f64,
    pub operator: OperatorSpec,
    pub boundary: RadialBoundary,
    #[serde(default)]
    pub tol: Option<f64>,
}

fn default_t0() -> f64 {
    DEFAULT_T0
}

impl RadialSpec {
    pub fn into_problem(self) -> Result<RadialProblem> {
        let psi = self.psi;
        let mut p = RadialProblem::new(
            self.n,
            self.intervals,
            self.t0,
            self.chi_const,
            |_| 1.0,
            self.lambda0,
            self.operator,
            self.boundary,
        )?;
        p.psi = match psi {
            PsiSpec::Constant(c) => vec![c; p.t.len()],
            PsiSpec::Values(v) if v.len() == p.t.len() => v,
            PsiSpec::Values(v) => {
                return Err(Error::DimensionMismatch {
                    expected: p.t.len(),
                    actual: v.len(),
                })
            }
        };
        if let Some(tol) = self.tol {
            p.tol = tol;
        }
        p.validate()?;
        Ok(p)
    }
}

impl RadialProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        intervals: usize,
        t0: f64,
        chi_const: f64,
        psi: impl Fn(f64) -> f64,
        lambda0: f64,
        operator: OperatorSpec,
        boundary: RadialBoundary,
    ) -> Result<Self> {
        if intervals < 2 {
            return Err(Error::InvalidArgument(format!(
                "radial grid needs at least 3 points, got {}",
                intervals + 1
            )));
        }
        if !(t0 > 0.0 && t0 < 1.0) {
            return Err(Error::InvalidArgument(format!("t0 must lie in (0, 1), got {t0}")));
        }
        let h = (1.0 - t0) / intervals as f64;
        let t: Vec<f64> = (0..=intervals)
            .map(|i| if i == intervals { 1.0 } else { t0 + i as f64 * h })
            .collect();
        let psi = t.iter().map(|&x| psi(x)).collect();
        let p = RadialProblem {
            n,
            t,
            chi_const,
            psi,
            lambda0,
            boundary,
            operator,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.operator.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: self.operator.dim(),
            });
        }
        if !(self.lambda0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda0 must be positive, got {}",
                self.lambda0
            )));
        }
        if let Some(x) = self.psi.iter().find(|x| !(**x > 0.0)) {
            return Err(Error::InvalidArgument(format!("psi must be positive, got {x}")));
        }
        if let RadialBoundary::Exhaustion { ks } = &self.boundary {
            if ks.is_empty() || ks[0] == 0 || ks.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidArgument(format!(
                    "exhaustion levels must be positive and increasing, got {ks:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.t[1] - self.t[0]
    }

    pub fn intervals(&self) -> usize {
        self.t.len() - 1
    }

    /// `σ = 1 − √t` at every grid point.
    pub fn sigma(&self) -> Vec<f64> {
        self.t.iter().map(|t| 1.0 - t.sqrt()).collect()
    }

    /// Affine interpolant of the boundary data.
    pub fn affine(&self, inner: f64, outer: f64) -> Vec<f64> {
        let t0 = self.t[0];
        self.t
            .iter()
            .map(|t| inner + (outer - inner) * (t - t0) / (1.0 - t0))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub t: Vec<f64>,
    pub phi: Vec<f64>,
    pub report: SolveReport,
}

impl RadialSolution {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,phi\n");
        for (t, p) in self.t.iter().zip(&self.phi) {
            s.push_str(&format!("{t},{p}\n"));
        }
        s
    }
}

/// Eigenvalues of `c ω + ∂∂̄φ(|z|²)` at `|z|² = t`, sorted.
pub fn radial_eigenvalues(phi1: f64, phi2: f64, t: f64, c: f64, n: usize) -> Spectrum {
    Spectrum::from_unsorted(unsorted(phi1, phi2, t, c, n))
}

/// The distinguished eigenvalue is last.
fn unsorted(phi1: f64, phi2: f64, t: f64, c: f64, n: usize) -> Vec<f64> {
    let mut lam = vec![c + phi1; n];
    lam[n - 1] += t * phi2;
    lam
}

fn derivs(phi: &[f64], i: usize, h: f64) -> (f64, f64) {
    (
        (phi[i + 1] - phi[i - 1]) / (2.0 * h),
        (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) / (h * h),
    )
}

/// Residual and tridiagonal Jacobian at the interior nodes.
struct Assembly {
    res: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    min_margin: f64,
}

struct Ctx<'a> {
    p: &'a RadialProblem,
    cone: Cone,
}

impl Ctx<'_> {
    fn lam(&self, phi: &[f64], i: usize) -> Vec<f64> {
        let (d1, d2) = derivs(phi, i, self.p.h());
        unsorted(d1, d2, self.p.t[i], self.p.chi_const, self.p.n)
    }

    /// `f(λ)` at every interior node, or `None` if some node is outside the cone.
    fn values(&self, phi: &[f64]) -> Option<(Vec<f64>, f64)> {
        let m = self.p.intervals();
        let mut out = Vec::with_capacity(m - 1);
        let mut margin = f64::INFINITY;
        for i in 1..m {
            let lam = self.lam(phi, i);
            if !self.cone.contains(&lam).ok()? {
                return None;
            }
            margin = margin.min(self.cone.margin(&lam));
            out.push(self.p.operator.value(&lam).ok()?);
        }
        Some((out, margin))
    }

    fn assemble(&self, phi: &[f64], psi: &[f64]) -> Option<Assembly> {
        let p = self.p;
        let m = p.intervals();
        let h = p.h();
        let mut a = Assembly {
            res: Vec::with_capacity(m - 1),
            lower: Vec::with_capacity(m - 1),
            diag: Vec::with_capacity(m - 1),
            upper: Vec::with_capacity(m - 1),
            min_margin: f64::INFINITY,
        };
        for i in 1..m {
            let lam = self.lam(phi, i);
            if !self.cone.contains(&lam).ok()? {
                return None;
            }
            a.min_margin = a.min_margin.min(self.cone.margin(&lam));
            let (f, g) = p.operator.value_and_gradient(&lam).ok()?;
            let d_phi1: f64 = g.iter().sum();
            let d_phi2 = p.t[i] * g[p.n - 1];
            let rhs = psi[i] * (p.lambda0 * phi[i]).exp();
            a.res.push(f - rhs);
            a.lower.push(-d_phi1 / (2.0 * h) + d_phi2 / (h * h));
            a.diag.push(-2.0 * d_phi2 / (h * h) - p.lambda0 * rhs);
            a.upper.push(d_phi1 / (2.0 * h) + d_phi2 / (h * h));
        }
        Some(a)
    }

    fn newton(&self, psi: &[f64], mut phi: Vec<f64>) -> Result<(Vec<f64>, SolveReport)> {
        let p = self.p;
        let mut rep = SolveReport::default();
        let mut asm = self
            .assemble(&phi, psi)
            .ok_or_else(|| Error::Initialization("initial guess is not admissible".into()))?;
        loop {
            let r = sup_norm(&asm.res);
            rep.residual_history.push(r);
            rep.margin_history.push(asm.min_margin);
            rep.residual = r;
            rep.min_margin = asm.min_margin;
            if r <= p.tol {
                return Ok((phi, rep));
            }
            if rep.iterations >= p.max_iter {
                return Err(nonconvergence(&rep, "iteration limit reached"));
            }
            rep.iterations += 1;
            let rhs: Vec<f64> = asm.res.iter().map(|x| -x).collect();
            let step = thomas(&asm.lower, &asm.diag, &asm.upper, &rhs)
                .ok_or_else(|| nonconvergence(&rep, "singular Jacobian"))?;
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                let mut trial = phi.clone();
                for (j, s) in step.iter().enumerate() {
                    trial[j + 1] += alpha * s;
                }
                if let Some(next) = self.assemble(&trial, psi) {
                    if sup_norm(&next.res) < r {
                        accepted = Some((trial, next));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            let Some((trial, next)) = accepted else {
                return Err(nonconvergence(&rep, "line search failed after 50 halvings"));
            };
            rep.damping.push(alpha);
            phi = trial;
            asm = next;
        }
    }

    /// Newton from `init`, falling back to continuation in `ψ`.
    fn solve(&self, init: Vec<f64>) -> Result<(Vec<f64>, SolveReport)> {
        let p = self.p;
        let Some((vals, _)) = self.values(&init) else {
            return Err(Error::Initialization("initial guess is not admissible".into()));
        };
        match self.newton(&p.psi, init.clone()) {
            Ok(ok) => Ok(ok),
            Err(Error::NonConvergence { .. }) => {
                let mut psi0 = p.psi.clone();
                for (j, v) in vals.iter().enumerate() {
                    psi0[j + 1] = v * (-p.lambda0 * init[j + 1]).exp();
                }
                let mut phi = init;
                let mut rep = SolveReport::default();
                for (stage, s) in CONTINUATION.iter().enumerate() {
                    let psi_s: Vec<f64> =
                        psi0.iter().zip(&p.psi).map(|(a, b)| (1.0 - s) * a + s * b).collect();
                    let (next, r) = self.newton(&psi_s, phi)?;
                    rep.absorb(r);
                    rep.continuation_stages = stage + 1;
                    phi = next;
                }
                Ok((phi, rep))
            }
            Err(e) => Err(e),
        }
    }

    fn initial_guess(&self, inner: f64, outer: f64) -> Result<Vec<f64>> {
        let base = self.p.affine(inner, outer);
        if self.values(&base).is_some() {
            return Ok(base);
        }
        let (t0, t) = (self.p.t[0], &self.p.t);
        for j in 0..40 {
            let a = 2f64.powi(j);
            let guess: Vec<f64> = base
                .iter()
                .zip(t)
                .map(|(b, x)| b + a * (x - t0) * (x - 1.0))
                .collect();
            if self.values(&guess).is_some() {
                return Ok(guess);
            }
        }
        Err(Error::Initialization(
            "neither the affine interpolant nor its convex lifts are admissible".into(),
        ))
    }
}

fn nonconvergence(rep: &SolveReport, reason: &str) -> Error {
    Error::NonConvergence {
        iterations: rep.iterations,
        residual: rep.residual,
        reason: reason.into(),
        history: rep.residual_history.clone(),
    }
}

/// Solves a tridiagonal system; `lower[0]` and `upper[last]` are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut denom = diag[0];
    if denom == 0.0 {
        return None;
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..m {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    for i in (0..m - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

fn dirichlet(p: &RadialProblem) -> Result<(f64, f64)> {
    match p.boundary {
        RadialBoundary::Dirichlet { inner, outer } => Ok((inner, outer)),
        RadialBoundary::Exhaustion { .. } => Err(Error::InvalidArgument(
            "expected Dirichlet boundary data".into(),
        )),
    }
}

fn ctx(p: &RadialProblem) -> Ctx<'_> {
    Ctx {
        p,
        cone: p.operator.cone(),
    }
}

/// Admissible Dirichlet solution from the default initial guess.
pub fn solve_radial_dirichlet(p: &RadialProblem) -> Result<RadialSolution> {
    let (inner, outer) = dirichlet(p)?;
    let c = ctx(p);
    let init = c.initial_guess(inner, outer)?;
    finish(p, c.solve(init)?)
}

/// Dirichlet solution from a caller-supplied start; its end values are
/// replaced by the boundary data.
pub fn solve_radial_from(p: &RadialProblem, mut init: Vec<f64>) -> Result<RadialSolution> {
    let (inner, outer) = dirichlet(p)?;
    if init.len() != p.t.len() {
        return Err(Error::DimensionMismatch {
            expected: p.t.len(),
            actual: init.len(),
        });
    }
    let m = p.intervals();
    init[0] = inner;
    init[m] = outer;
    finish(p, ctx(p).solve(init)?)
}

fn finish(p: &RadialProblem, (phi, report): (Vec<f64>, SolveReport)) -> Result<RadialSolution> {
    Ok(RadialSolution {
        t: p.t.clone(),
        phi,
        report,
    })
}

/// Spread of `u + 2 log σ` on the outer collar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryBand {
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
    /// Constant in `u ≥ −2 log σ − C0`.
    pub c0: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionReport {
    pub ks: Vec<u32>,
    pub t: Vec<f64>,
    pub solutions: Vec<Vec<f64>>,
    /// `min (φ_(k') − φ_(k))` for consecutive levels.
    pub min_increase: Vec<f64>,
    pub monotone: bool,
    pub band: BoundaryBand,
    /// Sup over the middle third of `|φ_(k') − φ_(k)|` for consecutive levels.
    pub cauchy: Vec<f64>,
    pub reports: Vec<SolveReport>,
}

/// Monotonicity tolerance for consecutive exhaustion levels.
pub const MONOTONE_TOL: f64 = 1e-9;

/// Solves with boundary value `2 log k` at both ends for every `k`, warm
/// starting each level from the previous one shifted by the change in data.
pub fn solve_radial_exhaustion(p: &RadialProblem, ks: &[u32]) -> Result<ExhaustionReport> {
    if ks.is_empty() || ks[0] == 0 || ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "exhaustion levels must be positive and increasing, got {ks:?}"
        )));
    }
    let c = ctx(p);
    let m = p.intervals();
    let mut solutions: Vec<Vec<f64>> = Vec::with_capacity(ks.len());
    let mut reports = Vec::with_capacity(ks.len());
    for &k in ks {
        let b = 2.0 * (k as f64).ln();
        let init = match solutions.last() {
            Some(prev) => {
                let shift = b - prev[0];
                let mut g: Vec<f64> = prev.iter().map(|x| x + shift).collect();
                g[0] = b;
                g[m] = b;
                g
            }
            None => c.initial_guess(b, b)?,
        };
        let (phi, rep) = c.solve(init)?;
        solutions.push(phi);
        reports.push(rep);
    }
    let min_increase: Vec<f64> = solutions
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min))
        .collect();
    let monotone = min_increase.iter().all(|d| *d >= -MONOTONE_TOL);
    let (lo_i, hi_i) = (m / 3, 2 * m / 3);
    let cauchy = solutions
        .windows(2)
        .map(|w| (lo_i..=hi_i).map(|i| (w[1][i] - w[0][i]).abs()).fold(0.0, f64::max))
        .collect();
    let band = boundary_band(p, solutions.last().expect("nonempty"));
    Ok(ExhaustionReport {
        ks: ks.to_vec(),
        t: p.t.clone(),
        solutions,
        min_increase,
        monotone,
        band,
        cauchy,
        reports,
    })
}

/// Number of grid points in the outer collar, boundary node excluded.
pub fn collar_len(p: &RadialProblem) -> usize {
    ((COLLAR_FRACTION * p.t.len() as f64).ceil() as usize).max(1)
}

/// `u + 2 log σ` over the outer collar.
pub fn boundary_band(p: &RadialProblem, phi: &[f64]) -> BoundaryBand {
    let m = p.intervals();
    let sigma = p.sigma();
    let width = collar_len(p);
    let vals: Vec<f64> = (m - width..m).map(|i| phi[i] + 2.0 * sigma[i].ln()).collect();
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    BoundaryBand {
        lo,
        hi,
        width: hi - lo,
        c0: -lo,
        points: vals.len(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub sigma_min: Vec<f64>,
    /// `L(σ_min) = ∫_{σ_min}^{δ} e^{u/2} dσ`.
    pub length: Vec<f64>,
    /// Least-squares slope of `L` against `log(1/σ_min)`.
    pub slope: f64,
    /// The same slope for `u = −2 log σ` on the same nodes.
    pub reference_slope: f64,
    pub ratio: f64,
}

/// Trapezoid-rule length of the radial ray in `e^u ω` over `σ_min ≤ σ ≤ δ`,
/// fitted against `log(1/σ_min)`.
pub fn completeness_integral(t: &[f64], phi: &[f64], delta: f64) -> Result<CompletenessReport> {
    if t.len() != phi.len() {
        return Err(Error::DimensionMismatch {
            expected: t.len(),
            actual: phi.len(),
        });
    }
    let mut nodes: Vec<(f64, f64)> = t
        .iter()
        .zip(phi)
        .map(|(t, u)| (1.0 - t.sqrt(), *u))
        .filter(|(s, _)| *s > 0.0 && *s <= delta)
        .collect();
    if nodes.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 nodes with 0 < σ ≤ {delta}, found {}",
            nodes.len()
        )));
    }
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lengths = |g: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        let k = nodes.len();
        let mut l = vec![0.0; k];
        for j in (0..k - 1).rev() {
            let (s0, u0) = nodes[j];
            let (s1, u1) = nodes[j + 1];
            l[j] = l[j + 1] + 0.5 * (s1 - s0) * (g(s0, u0) + g(s1, u1));
        }
        l
    };
    let length = lengths(&|_, u| (0.5 * u).exp());
    let reference = lengths(&|s, _| 1.0 / s);
    let x: Vec<f64> = nodes.iter().map(|(s, _)| -s.ln()).collect();
    let slope = ls_slope(&x, &length);
    let reference_slope = ls_slope(&x, &reference);
    Ok(CompletenessReport {
        sigma_min: nodes.iter().map(|n| n.0).collect(),
        length,
        slope,
        reference_slope,
        ratio: slope / reference_slope,
    })
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    pub k: u32,
    pub delta: f64,
    /// Minimum of the barrier defect over the collar; `None` if `w + φ` is
    /// inadmissible somewhere.
    pub min_margin: Option<f64>,
    /// Grid values of `t` where `w + φ` leaves the cone.
    pub inadmissible: Vec<f64>,
    pub points: usize,
}

/// Evaluates `f(λ(χ + ∂∂̄(w + φ_b))) − ψ e^{Λ₀(w + φ_b)}` on the collar
/// `σ < δ` with `w = 2 log(δ²/(δ² + kσ))` and `φ_b` the affine interpolant
/// of the Dirichlet data (zero for exhaustion problems). Derivatives are
/// exact.
pub fn barrier_margin(p: &RadialProblem, k: u32, delta: f64) -> Result<BarrierReport> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let (inner, outer) = match p.boundary {
        RadialBoundary::Dirichlet { inner, outer } => (inner, outer),
        RadialBoundary::Exhaustion { .. } => (0.0, 0.0),
    };
    let t0 = p.t[0];
    let slope = (outer - inner) / (1.0 - t0);
    let cone = p.operator.cone();
    let kk = k as f64;
    let d2 = delta * delta;
    let mut min_margin = f64::INFINITY;
    let mut inadmissible = Vec::new();
    let mut points = 0;
    for (i, &t) in p.t.iter().enumerate() {
        let s = 1.0 - t.sqrt();
        if s >= delta {
            continue;
        }
        points += 1;
        let q = d2 + kk * s;
        let w = 2.0 * (d2 / q).ln();
        let w_s = -2.0 * kk / q;
        let w_ss = 2.0 * kk * kk / (q * q);
        let s_t = -0.5 / t.sqrt();
        let s_tt = 0.25 / (t * t.sqrt());
        let w1 = w_s * s_t;
        let w2 = w_ss * s_t * s_t + w_s * s_tt;
        let phi_b = inner + slope * (t - t0);
        let lam = unsorted(slope + w1, w2, t, p.chi_const, p.n);
        if !cone.contains(&lam)? {
            inadmissible.push(t);
            continue;
        }
        let m = p.operator.value(&lam)? - p.psi[i] * (p.lambda0 * (w + phi_b)).exp();
        min_margin = min_margin.min(m);
    }
    Ok(BarrierReport {
        k,
        delta,
        min_margin: if inadmissible.is_empty() && points > 0 {
            Some(min_margin)
        } else {
            None
        },
        inadmissible,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pencil::{pencil_eigen, HermitianForm, Pencil};
    use crate::sampling::{normal, stream};
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn identity_potential() {
        let s = radial_eigenvalues(1.0, 0.0, 0.3, 2.0, 3);
        assert_eq!(s.values(), &[3.0, 3.0, 3.0]);
    }

    #[test]
    fn matches_full_matrix() {
        let mut rng = stream(3, 0);
        for n in 2..5 {
            for _ in 0..20 {
                let z: Vec<Complex64> =
                    (0..n).map(|_| Complex64::new(normal(&mut rng), normal(&mut rng))).collect();
                let t: f64 = z.iter().map(|x| x.norm_sqr()).sum();
                // φ = t², c = 0.7
                let (p1, p2, c) = (2.0 * t, 2.0, 0.7);
                let m = DMatrix::from_fn(n, n, |i, j| {
                    let d = if i == j { c + p1 } else { 0.0 };
                    Complex64::new(d, 0.0) + z[i].conj() * z[j] * p2
                });
                let eig = pencil_eigen(&Pencil {
                    g: HermitianForm::identity(n),
                    theta: HermitianForm::new(m).unwrap(),
                })
                .unwrap();
                let r = radial_eigenvalues(p1, p2, t, c, n);
                for (a, b) in eig.values.iter().zip(r.iter()) {
                    assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
                }
            }
        }
    }

    fn manufactured(n: usize, intervals: usize) -> (RadialProblem, Vec<f64>) {
        let c = 15.0;
        let f = OperatorSpec::sigma_k_root(n, n).unwrap();
        let exact = |t: f64| (PI * t).sin() + 2.0;
        let f2 = f.clone();
        let psi = move |t: f64| {
            let lam = unsorted(PI * (PI * t).cos(), -PI * PI * (PI * t).sin(), t, c, n);
            f2.value(&lam).unwrap() * (-exact(t)).exp()
        };
        let p = RadialProblem::new(
            n,
            intervals,
            DEFAULT_T0,
            c,
            psi,
            1.0,
            f,
            RadialBoundary::Dirichlet {
                inner: exact(DEFAULT_T0),
                outer: exact(1.0),
            },
        )
        .unwrap();
        let ex = p.t.iter().map(|t| exact(*t)).collect();
        (p, ex)
    }

    fn max_err(n: usize, intervals: usize) -> f64 {
        let (p, ex) = manufactured(n, intervals);
        let sol = solve_radial_dirichlet(&p).unwrap();
        assert!(sol.report.residual <= 1e-10);
        assert!(sol.report.all_admissible() && sol.report.monotone());
        sol.phi.iter().zip(&ex).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn manufactured_second_order() {
        let ratio = max_err(2, 32) / max_err(2, 64);
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn linear_operator_converges_fast() {
        let f = OperatorSpec::sigma_k_root(1, 2).unwrap();
        let p = RadialProblem::new(
            2,
            40,
            DEFAULT_T0,
            1.0,
            |_| 1.0,
            1.0,
            f,
            RadialBoundary::Dirichlet { inner: 0.0, outer: 0.0 },
        )
        .unwrap();
        let sol = solve_radial_dirichlet(&p).unwrap();
        assert!(sol.report.iterations <= 5, "{:?}", sol.report);
    }

    #[test]
    fn distinct_starts_agree() {
        let (p, _) = manufactured(2, 32);
        let a = solve_radial_dirichlet(&p).unwrap();
        let (inner, outer) = (a.phi[0], *a.phi.last().unwrap());
        let t0 = p.t[0];
        let init: Vec<f64> = p
            .affine(inner, outer)
            .iter()
            .zip(&p.t)
            .map(|(b, t)| b + 3.0 * (t - t0) * (t - 1.0))
            .collect();
        let b = solve_radial_from(&p, init).unwrap();
        assert!(b.report.iterations > 0);
        let d = a.phi.iter().zip(&b.phi).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(d < 1e-8, "{d}");
    }

    #[test]
    fn thomas_solves() {
        let (l, d, u) = (vec![0.0, 1.0, 1.0], vec![4.0, 4.0, 4.0], vec![1.0, 1.0, 0.0]);
        let x = thomas(&l, &d, &u, &[5.0, 6.0, 5.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn barrier_off_is_raw_defect() {
        let f = OperatorSpec::sigma_k_root(2, 2).unwrap();
        let p = RadialProblem::new(
            2,
            50,
            DEFAULT_T0,
            3.0,
            |_| 1.0,
            1.0,
            f.clone(),
            RadialBoundary::Dirichlet { inner: 0.0, outer: 0.0 },
        )
        .unwrap();
        let r = barrier_margin(&p, 0, 0.2).unwrap();
        // φ_b = 0: f(3, 3) − 1 = 2
        assert!((r.min_margin.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn barrier_positive_with_large_c() {
        let f = OperatorSpec::sigma_k_root(2, 2).unwrap();
        let p = RadialProblem::new(
            2,
            200,
            DEFAULT_T0,
            10.0,
            |_| 1.0,
            1.0,
            f,
            RadialBoundary::Dirichlet { inner: 0.0, outer: 0.0 },
        )
        .unwrap();
        let m1 = barrier_margin(&p, 1, 0.2).unwrap().min_margin.unwrap();
        assert!(m1 > 0.0);
    }

    #[test]
    fn exact_log_profile_has_unit_slope() {
        let t: Vec<f64> = (0..=400).map(|i| 0.04 + 0.96 * i as f64 / 400.0).collect();
        let phi: Vec<f64> = t.iter().map(|t| -2.0 * (1.0 - t.sqrt()).max(1e-300).ln()).collect();
        let r = completeness_integral(&t, &phi, 0.1).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-12);
        // L is log(δ/σ_min) up to quadrature error
        let l0 = r.length[0];
        let exact = (r.sigma_min.last().unwrap() / r.sigma_min[0]).ln();
        assert!((l0 - exact).abs() < 0.05 * exact, "{l0} vs {exact}");
    }

    #[test]
    fn bounded_profile_has_small_slope() {
        let t: Vec<f64> = (0..=400).map(|i| 0.04 + 0.96 * i as f64 / 400.0).collect();
        let phi = vec![1.0; t.len()];
        let r = completeness_integral(&t, &phi, 0.1).unwrap();
        assert!(r.ratio.abs() < 0.1, "{}", r.ratio);
    }
}
