//! Symmetric concave operators `f` on Gårding-type cones.
//!
//! Built-ins are `σ_k^{1/k}`, the Hessian quotients `(σ_k/σ_l)^{1/(k−l)}`
//! and the operator `f̃ = f ∘ P` induced on a transformed cone. All of them
//! are homogeneous of degree one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::{project_slice, Cone, Spectrum};
use crate::error::{Error, Result};
use crate::esf::{elementary_symmetric, elementary_symmetric_without};
use crate::sampling::{sample_in_cone, stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", try_from = "OperatorRepr", into = "OperatorRepr")]
pub enum OperatorSpec {
    /// `σ_k^{1/k}` on `Γ_k`.
    SigmaKRoot { k: usize, n: usize },
    /// `(σ_k/σ_l)^{1/(k−l)}` on `Γ_k`, `k > l ≥ 0`.
    HessianQuotient { k: usize, l: usize, n: usize },
    /// `f̃(λ) = f(P(λ))` on the transformed cone.
    Induced { base: Box<OperatorSpec>, rho: f64 },
}

impl OperatorSpec {
    pub fn sigma_k_root(k: usize, n: usize) -> Result<Self> {
        Cone::garding(k, n)?;
        Ok(OperatorSpec::SigmaKRoot { k, n })
    }

    pub fn hessian_quotient(k: usize, l: usize, n: usize) -> Result<Self> {
        Cone::garding(k, n)?;
        if l >= k {
            return Err(Error::InvalidArgument(format!(
                "Hessian quotient needs k > l, got k={k}, l={l}"
            )));
        }
        Ok(OperatorSpec::HessianQuotient { k, l, n })
    }

    /// Induced operator on `transform(base.cone(), rho)`; `rho` is checked
    /// against `ϱ_Γ` of the base cone.
    pub fn induced(base: OperatorSpec, rho: f64) -> Result<Self> {
        base.cone().transform(rho)?;
        Ok(OperatorSpec::Induced {
            base: Box::new(base),
            rho,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            OperatorSpec::SigmaKRoot { n, .. } | OperatorSpec::HessianQuotient { n, .. } => *n,
            OperatorSpec::Induced { base, .. } => base.dim(),
        }
    }

    /// Natural domain.
    pub fn cone(&self) -> Cone {
        match self {
            OperatorSpec::SigmaKRoot { k, n } | OperatorSpec::HessianQuotient { k, n, .. } => {
                Cone::garding(*k, *n).expect("validated at construction")
            }
            OperatorSpec::Induced { base, rho } => {
                Cone::linear_image(base.cone(), *rho).expect("validated at construction")
            }
        }
    }

    /// Homogeneity degree ς.
    pub fn homogeneity(&self) -> f64 {
        1.0
    }

    fn check(&self, lam: &[f64]) -> Result<()> {
        if lam.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: lam.len(),
            });
        }
        match self.cone().first_violation(lam) {
            Some((index, value)) => Err(Error::Domain { index, value }),
            None => Ok(()),
        }
    }

    pub fn value(&self, lam: &[f64]) -> Result<f64> {
        self.check(lam)?;
        Ok(self.value_unchecked(lam))
    }

    pub fn gradient(&self, lam: &[f64]) -> Result<Vec<f64>> {
        self.check(lam)?;
        Ok(self.value_and_gradient_unchecked(lam).1)
    }

    pub fn value_and_gradient(&self, lam: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check(lam)?;
        Ok(self.value_and_gradient_unchecked(lam))
    }

    pub(crate) fn value_unchecked(&self, lam: &[f64]) -> f64 {
        match self {
            OperatorSpec::SigmaKRoot { k, .. } => {
                let e = elementary_symmetric(lam, *k);
                e[*k].max(0.0).powf(1.0 / *k as f64)
            }
            OperatorSpec::HessianQuotient { k, l, .. } => {
                let e = elementary_symmetric(lam, *k);
                (e[*k] / e[*l]).max(0.0).powf(1.0 / (k - l) as f64)
            }
            OperatorSpec::Induced { base, rho } => base.value_unchecked(&project_slice(lam, *rho)),
        }
    }

    pub(crate) fn value_and_gradient_unchecked(&self, lam: &[f64]) -> (f64, Vec<f64>) {
        let n = lam.len();
        match self {
            OperatorSpec::SigmaKRoot { k, .. } => {
                let k = *k;
                let sk = elementary_symmetric(lam, k)[k];
                let f = sk.max(0.0).powf(1.0 / k as f64);
                // f_i = f σ_{k-1}(λ|i) / (k σ_k)
                let grad = (0..n)
                    .map(|i| f * elementary_symmetric_without(lam, i, k - 1)[k - 1] / (k as f64 * sk))
                    .collect();
                (f, grad)
            }
            OperatorSpec::HessianQuotient { k, l, .. } => {
                let (k, l) = (*k, *l);
                let e = elementary_symmetric(lam, k);
                let f = (e[k] / e[l]).max(0.0).powf(1.0 / (k - l) as f64);
                let grad = (0..n)
                    .map(|i| {
                        let ei = elementary_symmetric_without(lam, i, k - 1);
                        let lower = if l == 0 { 0.0 } else { ei[l - 1] / e[l] };
                        f / (k - l) as f64 * (ei[k - 1] / e[k] - lower)
                    })
                    .collect();
                (f, grad)
            }
            OperatorSpec::Induced { base, rho } => {
                let mu = project_slice(lam, *rho);
                let (f, g) = base.value_and_gradient_unchecked(&mu);
                let s: f64 = g.iter().sum();
                let d = n as f64 - rho;
                (f, g.iter().map(|gi| (s - rho * gi) / d).collect())
            }
        }
    }

    /// `A_f = n / Σ f_i(1)`.
    pub fn trace_constant(&self) -> f64 {
        let n = self.dim();
        let (_, g) = self.value_and_gradient_unchecked(&vec![1.0; n]);
        n as f64 / g.iter().sum::<f64>()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum OperatorRepr {
    SigmaKRoot { k: usize, n: usize },
    HessianQuotient { k: usize, l: usize, n: usize },
    Induced { base: Box<OperatorSpec>, rho: f64 },
}

impl TryFrom<OperatorRepr> for OperatorSpec {
    type Error = Error;
    fn try_from(r: OperatorRepr) -> Result<Self> {
        match r {
            OperatorRepr::SigmaKRoot { k, n } => OperatorSpec::sigma_k_root(k, n),
            OperatorRepr::HessianQuotient { k, l, n } => OperatorSpec::hessian_quotient(k, l, n),
            OperatorRepr::Induced { base, rho } => OperatorSpec::induced(*base, rho),
        }
    }
}

impl From<OperatorSpec> for OperatorRepr {
    fn from(o: OperatorSpec) -> Self {
        match o {
            OperatorSpec::SigmaKRoot { k, n } => OperatorRepr::SigmaKRoot { k, n },
            OperatorSpec::HessianQuotient { k, l, n } => OperatorRepr::HessianQuotient { k, l, n },
            OperatorSpec::Induced { base, rho } => OperatorRepr::Induced { base, rho },
        }
    }
}

// ---------------------------------------------------------------------------
// Structural audit
// ---------------------------------------------------------------------------

const AUDIT_SLACK: f64 = 1e-10;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub violations: usize,
    /// Most negative normalized slack seen (nonnegative means the check held
    /// everywhere with that much room).
    pub worst_slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub operator: OperatorSpec,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    /// Median slope of `log f(λ + t e_n)` against `log t` for large `t`.
    pub growth_exponent: f64,
    pub unbounded: bool,
    /// `A_f = n / Σ f_i(1)`.
    pub trace_constant: f64,
}

impl AuditReport {
    pub fn total_violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn passed(&self) -> bool {
        self.total_violations() == 0
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const AUDIT_CHECKS: [&str; 10] = [
    "positivity",
    "homogeneity",
    "gradient_positive",
    "sorted_gradient",
    "concavity_midpoint",
    "concavity_tangent",
    "pairing_positive",
    "euler_identity",
    "trace_bound",
    "boundary_decay",
];

struct SampleOutcome {
    slacks: [f64; 10],
    growth: f64,
}

fn audit_sample(f: &OperatorSpec, cone: &Cone, seed: u64, i: u64, f1: f64, af: f64) -> SampleOutcome {
    let mut rng = stream(seed, i);
    let lam = sample_in_cone(cone, &mut rng);
    let mu = sample_in_cone(cone, &mut rng);
    let n = lam.len();
    let (fl, gl) = f.value_and_gradient_unchecked(&lam);
    let fm = f.value_unchecked(&mu);
    let scale = 1.0 + fl.abs() + fm.abs();
    let mut s = [f64::INFINITY; 10];

    s[0] = fl.min(fm) / scale;

    let mut hom = f64::INFINITY;
    for t in [0.5, 2.0, 10.0] {
        let tl: Vec<f64> = lam.iter().map(|x| t * x).collect();
        let ft = f.value_unchecked(&tl);
        hom = hom.min(AUDIT_SLACK - (ft - t * fl).abs() / (t * fl.abs()).max(f64::MIN_POSITIVE));
    }
    s[1] = hom;

    s[2] = gl.iter().fold(f64::INFINITY, |a, g| a.min(*g)) / gl.iter().sum::<f64>();

    let sorted = Spectrum::from_unsorted(lam.clone());
    let (_, gs) = f.value_and_gradient_unchecked(&sorted);
    let gsum: f64 = gs.iter().sum();
    s[3] = gs
        .windows(2)
        .map(|w| (w[0] - w[1]) / gsum + 1e-12)
        .fold(f64::INFINITY, f64::min);

    let mid: Vec<f64> = lam.iter().zip(&mu).map(|(a, b)| 0.5 * (a + b)).collect();
    s[4] = (f.value_unchecked(&mid) - 0.5 * (fl + fm)) / scale + AUDIT_SLACK;

    let tangent = fl + gl.iter().zip(mu.iter().zip(&lam)).map(|(g, (m, l))| g * (m - l)).sum::<f64>();
    let tangent_scale = scale + gl.iter().zip(mu.iter().zip(&lam)).map(|(g, (m, l))| (g * (m - l)).abs()).sum::<f64>();
    s[5] = (tangent - fm) / tangent_scale + AUDIT_SLACK;

    let pair: f64 = gl.iter().zip(&mu).map(|(g, m)| g * m).sum();
    s[6] = pair / (gl.iter().zip(&mu).map(|(g, m)| (g * m).abs()).sum::<f64>());

    let euler: f64 = gl.iter().zip(&lam).map(|(g, l)| g * l).sum();
    let euler_scale = fl.abs() + gl.iter().zip(&lam).map(|(g, l)| (g * l).abs()).sum::<f64>();
    s[7] = AUDIT_SLACK - (euler - fl).abs() / euler_scale;

    let trace: f64 = lam.iter().sum();
    let rhs = n as f64 + af * (fl - f1);
    s[8] = (trace - rhs) / (1.0 + lam.iter().map(|x| x.abs()).sum::<f64>() + af * (fl.abs() + f1)) + AUDIT_SLACK;

    // approach the boundary along -1 from λ: f must decrease toward zero
    let shift = crate::sampling::entry_shift(cone, &lam);
    let depth = -shift;
    let at = |eta: f64| -> f64 {
        let p: Vec<f64> = lam.iter().map(|x| x - depth + eta * depth).collect();
        if cone.member_with_tol(&p, 0.0) {
            f.value_unchecked(&p)
        } else {
            0.0
        }
    };
    let (f_a, f_b) = (at(1e-3), at(1e-9));
    s[9] = if f_b <= f_a && f_a < fl { 1.0 } else { -1.0 };

    // growth along e_n
    let mut prev: Option<(f64, f64)> = None;
    let mut slopes = Vec::new();
    for p in [8, 12, 16, 20] {
        let t = 2f64.powi(p);
        let mut v = lam.clone();
        v[n - 1] += t;
        let ft = f.value_unchecked(&v);
        if let Some((lt, lf)) = prev {
            slopes.push((ft.ln() - lf) / (t.ln() - lt));
        }
        prev = Some((t.ln(), ft.ln()));
    }
    let growth = slopes.last().copied().unwrap_or(0.0);
    SampleOutcome { slacks: s, growth }
}

/// Randomized check of the structural conditions on `f` over `nsamples`
/// points of its cone. Failures are counted, never raised.
pub fn structural_audit(f: &OperatorSpec, nsamples: usize, seed: u64) -> AuditReport {
    let cone = f.cone();
    let n = f.dim();
    let f1 = f.value_unchecked(&vec![1.0; n]);
    let af = f.trace_constant();
    let outcomes: Vec<SampleOutcome> = (0..nsamples as u64)
        .into_par_iter()
        .map(|i| audit_sample(f, &cone, seed, i, f1, af))
        .collect();
    let mut checks: Vec<CheckResult> = AUDIT_CHECKS
        .iter()
        .map(|name| CheckResult {
            name: name.to_string(),
            violations: 0,
            worst_slack: f64::INFINITY,
        })
        .collect();
    let mut growth: Vec<f64> = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        for (c, s) in checks.iter_mut().zip(o.slacks) {
            // strict checks (positivity, pairing) need s > 0, the rest s >= 0
            let ok = match c.name.as_str() {
                "positivity" | "gradient_positive" | "pairing_positive" => s > 0.0,
                _ => s >= 0.0,
            };
            if !ok {
                c.violations += 1;
            }
            c.worst_slack = c.worst_slack.min(s);
        }
        growth.push(o.growth);
    }
    growth.sort_by(f64::total_cmp);
    let growth_exponent = growth.get(growth.len() / 2).copied().unwrap_or(0.0);
    AuditReport {
        operator: f.clone(),
        samples: nsamples,
        seed,
        checks,
        growth_exponent,
        unbounded: growth_exponent > 1e-3,
        trace_constant: af,
    }
}

// ---------------------------------------------------------------------------
// Partial uniform ellipticity
// ---------------------------------------------------------------------------

/// `f_{(1+κ)}(λ) / Σ_j f_j(λ)` with `λ` ascending (so `f_1 ≥ … ≥ f_n`).
pub fn pue_ratio(f: &OperatorSpec, lam: &Spectrum) -> Result<f64> {
    pue_ratio_with_kappa(f, lam, f.cone().kappa())
}

pub fn pue_ratio_with_kappa(f: &OperatorSpec, lam: &Spectrum, kappa: usize) -> Result<f64> {
    let g = f.gradient(lam)?;
    Ok(g[kappa] / g.iter().sum::<f64>())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaBound {
    /// Certified lower bound for `ϑ_Γ`.
    pub theta: f64,
    pub kappa: usize,
    /// Best admissible α (positive entries, first κ negated in the cone test).
    pub alpha: Vec<f64>,
    pub diagnostic: Option<String>,
}

const THETA_GRID: usize = 20;

fn theta_objective(cone: &Cone, kappa: usize, alpha: &[f64]) -> Option<f64> {
    let n = alpha.len();
    if alpha.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
        return None;
    }
    let mut a = alpha.to_vec();
    // α_1 ≥ … ≥ α_κ within the negated block
    a[..kappa].sort_by(|x, y| y.total_cmp(x));
    let mut v = a.clone();
    v[..kappa].iter_mut().for_each(|x| *x = -*x);
    if !cone.member_with_tol(&v, cone.tol()) {
        return None;
    }
    let denom: f64 = a[kappa..].iter().sum::<f64>() - a[1..kappa].iter().sum::<f64>();
    if denom <= 0.0 {
        return None;
    }
    Some(a[0] / n as f64 / denom)
}

fn compositions(total: usize, parts: usize, out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>) {
    if parts == 1 {
        cur.push(total);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    for first in 1..=(total - parts + 1) {
        cur.push(first);
        compositions(total - first, parts - 1, out, cur);
        cur.pop();
    }
}

/// Lower bound for `ϑ_Γ`: `1/n` on the orthant, otherwise the best value of
/// `(α_1/n)/(Σ_{i>κ}α_i − Σ_{i=2}^{κ}α_i)` found over admissible α by a
/// simplex grid followed by Nelder–Mead refinement. Every candidate is
/// checked for membership, so the result never exceeds the supremum.
pub fn theta_lower_bound(cone: &Cone) -> ThetaBound {
    let n = cone.dim();
    let kappa = cone.kappa();
    if kappa == 0 {
        return ThetaBound {
            theta: 1.0 / n as f64,
            kappa,
            alpha: vec![1.0; n],
            diagnostic: None,
        };
    }
    let mut grid = Vec::new();
    compositions(THETA_GRID.max(n), n, &mut grid, &mut Vec::new());
    let best = grid
        .par_iter()
        .filter_map(|c| {
            let a: Vec<f64> = c.iter().map(|x| *x as f64).collect();
            theta_objective(cone, kappa, &a).map(|v| (v, a))
        })
        .reduce_with(|x, y| if y.0 > x.0 { y } else { x });
    let Some((mut val, mut alpha)) = best else {
        return ThetaBound {
            theta: 0.0,
            kappa,
            alpha: Vec::new(),
            diagnostic: Some("no admissible alpha on the simplex grid".into()),
        };
    };
    // refine in log coordinates
    let obj = |x: &[f64]| -> f64 {
        let a: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        theta_objective(cone, kappa, &a).map_or(f64::INFINITY, |v| -v)
    };
    let x0: Vec<f64> = alpha.iter().map(|a| a.ln()).collect();
    let (xr, fr) = nelder_mead(&obj, &x0, 0.25, 4000);
    if -fr > val {
        val = -fr;
        alpha = xr.iter().map(|v| v.exp()).collect();
    }
    alpha[..kappa].sort_by(|x, y| y.total_cmp(x));
    ThetaBound {
        theta: val,
        kappa,
        alpha,
        diagnostic: None,
    }
}

fn nelder_mead(obj: &impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), obj(x0)));
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = obj(&x);
        simplex.push((x, v));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[d].1 - simplex[0].1;
        if spread.is_finite() && spread.abs() < 1e-15 {
            break;
        }
        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|p| p.0[j]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[d].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-1.0);
        let fr = obj(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = obj(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let xc = along(0.5);
            let fc = obj(&xc);
            if fc < simplex[d].1 {
                simplex[d] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    for (x, b) in p.0.iter_mut().zip(&best) {
                        *x = b + 0.5 * (*x - b);
                    }
                    p.1 = obj(&p.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EllipticityRegime {
    /// `ϱ < ϱ_Γ`: fully uniformly elliptic.
    Uniform,
    /// `ϱ = ϱ_Γ`: elliptic only.
    Limiting,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    pub regime: EllipticityRegime,
    /// Certified floor for `f̃_i / Σ f̃_j`; zero in the limiting regime.
    pub theta_hat: f64,
    pub min_ratio: f64,
    pub sum_positive: bool,
    /// Every sampled `f̃_i` strictly positive.
    pub monotone: bool,
    /// Largest `|Σf̃_i − Σf_i(P(λ))|` relative to `Σf_i`.
    pub sum_identity_error: f64,
    pub samples: usize,
    pub passed: bool,
}

/// Samples the transformed cone and measures `min_i f̃_i/Σ_j f̃_j`.
///
/// In the uniform regime the floor `(1 − max(ϱ,0)/ϱ_Γ)/(n − ϱ)` follows from
/// `f_i ≤ Σf_j/ϱ_Γ` (pairing against the boundary vector
/// `(1,…,1,1−ϱ_Γ)`), and the sampled minimum must clear it.
pub fn uniform_ellipticity_audit(
    f_tilde: &OperatorSpec,
    nsamples: usize,
    seed: u64,
) -> Result<EllipticityReport> {
    let OperatorSpec::Induced { base, rho } = f_tilde else {
        return Err(Error::InvalidArgument(
            "uniform ellipticity audit needs an induced operator".into(),
        ));
    };
    let rho = *rho;
    let base_cone = base.cone();
    let varrho = base_cone.varrho();
    if rho > varrho + 1e-12 {
        return Err(Error::InadmissibleParameter(format!(
            "rho = {rho} exceeds varrho = {varrho}"
        )));
    }
    let n = f_tilde.dim() as f64;
    let regime = if rho < varrho - 1e-12 {
        EllipticityRegime::Uniform
    } else {
        EllipticityRegime::Limiting
    };
    let theta_hat = match regime {
        EllipticityRegime::Uniform => (1.0 - rho.max(0.0) / varrho) / (n - rho),
        EllipticityRegime::Limiting => 0.0,
    };
    let cone = f_tilde.cone();
    let per: Vec<(f64, bool, bool, f64)> = (0..nsamples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let lam = sample_in_cone(&cone, &mut rng);
            let (_, g) = f_tilde.value_and_gradient_unchecked(&lam);
            let s: f64 = g.iter().sum();
            let gmin = g.iter().fold(f64::INFINITY, |a, x| a.min(*x));
            let (_, gb) = base.value_and_gradient_unchecked(&project_slice(&lam, rho));
            let sb: f64 = gb.iter().sum();
            (gmin / s, s > 0.0, gmin > 0.0, (s - sb).abs() / sb)
        })
        .collect();
    let min_ratio = per.iter().fold(f64::INFINITY, |a, p| a.min(p.0));
    let sum_positive = per.iter().all(|p| p.1);
    let monotone = per.iter().all(|p| p.2);
    let sum_identity_error = per.iter().fold(0.0f64, |a, p| a.max(p.3));
    let passed = sum_positive
        && monotone
        && match regime {
            EllipticityRegime::Uniform => min_ratio >= theta_hat && theta_hat > 0.0,
            EllipticityRegime::Limiting => true,
        };
    Ok(EllipticityReport {
        regime,
        theta_hat,
        min_ratio,
        sum_positive,
        monotone,
        sum_identity_error,
        samples: nsamples,
        passed,
    })
}

impl OperatorSpec {
    pub fn theta_lower_bound(&self) -> ThetaBound {
        theta_lower_bound(&self.cone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sk(k: usize, n: usize) -> OperatorSpec {
        OperatorSpec::sigma_k_root(k, n).unwrap()
    }

    #[test]
    fn value_examples() {
        assert!((sk(2, 3).value(&[1.0, 1.0, 1.0]).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert!((sk(4, 4).value(&[1.0; 4]).unwrap() - 1.0).abs() < 1e-15);
        let q0 = OperatorSpec::hessian_quotient(4, 0, 4).unwrap();
        assert!((q0.value(&[2.0; 4]).unwrap() - 2.0).abs() < 1e-14);
        // (σ_4/σ_2)^{1/2}(2·1) = 2·C(4,2)^{-1/2}
        let q = OperatorSpec::hessian_quotient(4, 2, 4).unwrap();
        assert!((q.value(&[2.0; 4]).unwrap() - 2.0 / 6f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn domain_error_carries_index() {
        let e = sk(2, 3).value(&[-1.0, 1.0, 1.0]).unwrap_err();
        assert_eq!(e, Error::Domain { index: 2, value: -1.0 });
    }

    #[test]
    fn gradient_examples() {
        let g = sk(1, 4).gradient(&[0.3, -0.1, 2.0, 1.0]).unwrap();
        assert!(g.iter().all(|x| (x - 1.0).abs() < 1e-15));
        // σ_2 partials at (1,2,3) are (5,4,3); f = σ_2^{1/2} scales them by 1/(2f)
        let lam = [1.0, 2.0, 3.0];
        let (f, g) = sk(2, 3).value_and_gradient(&lam).unwrap();
        let expect = [5.0, 4.0, 3.0];
        for (gi, ei) in g.iter().zip(expect) {
            assert!((gi * 2.0 * f - ei).abs() < 1e-12);
        }
    }

    #[test]
    fn induced_gradient_sum_identity() {
        let f = OperatorSpec::induced(sk(2, 3), 1.0).unwrap();
        let lam = [0.4, 1.0, 2.5];
        let g = f.gradient(&lam).unwrap();
        let OperatorSpec::Induced { base, .. } = &f else { unreachable!() };
        let gb = base.gradient(&project_slice(&lam, 1.0)).unwrap();
        let (a, b): (f64, f64) = (g.iter().sum(), gb.iter().sum());
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn trace_constant_orthant() {
        assert!((sk(3, 3).trace_constant() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn theta_examples() {
        let t = theta_lower_bound(&Cone::orthant(4).unwrap());
        assert_eq!(t.theta, 0.25);
        let t = theta_lower_bound(&Cone::half_space(4).unwrap());
        assert!(t.theta <= 0.25 && t.theta > 0.2, "{}", t.theta);
        // Γ_2 in R^3: supremum is 1/12 (α_1 < α_2α_3/(α_2+α_3) ≤ (α_2+α_3)/4)
        let t = theta_lower_bound(&Cone::garding(2, 3).unwrap());
        assert!(t.theta <= 1.0 / 12.0 && t.theta > 0.08, "{}", t.theta);
    }

    #[test]
    fn pue_ratio_examples() {
        let f = sk(1, 3);
        let r = pue_ratio(&f, &Spectrum::from_unsorted(vec![5.0, -1.0, 0.2])).unwrap();
        assert!((r - 1.0 / 3.0).abs() < 1e-15);
        let r = pue_ratio(&sk(3, 3), &Spectrum::from_unsorted(vec![1.0; 3])).unwrap();
        assert!((r - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn audit_runs_clean_small() {
        let rep = structural_audit(&sk(2, 3), 500, 3);
        assert!(rep.passed(), "{:?}", rep.checks);
        assert!(rep.unbounded);
    }

    #[test]
    fn half_space_induced_ratio_is_exact() {
        let f = OperatorSpec::induced(sk(1, 4), 2.5).unwrap();
        let rep = uniform_ellipticity_audit(&f, 200, 1).unwrap();
        assert!((rep.min_ratio - 0.25).abs() < 1e-14);
        assert!((rep.theta_hat - 0.25).abs() < 1e-14);
        assert!(rep.passed);
    }

    #[test]
    fn audit_rejects_non_induced() {
        assert!(uniform_ellipticity_audit(&sk(2, 3), 10, 0).is_err());
    }

    #[test]
    fn serde_shapes() {
        let f = OperatorSpec::induced(sk(2, 3), 1.0).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"induced":{"base":{"sigma_k_root":{"k":2,"n":3}},"rho":1.0}}"#);
        let back: OperatorSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<OperatorSpec>(r#"{"induced":{"base":{"sigma_k_root":{"k":2,"n":3}},"rho":2.0}}"#).is_err());
    }
}
