//! Reductions of conformal curvature equations to the standard form
//! `f(λ(χ + ∂∂̄u)) = ψ e^{Λ₀u + c}` and discrete Chern-Ricci curvature of
//! conformal metrics `e^u ω` on the flat complex 2-torus.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::Cone;
use crate::error::{Error, Result};
use crate::grid::{complex_gradient_at, complex_hessian_at, Herm2, TorusGrid};
use crate::operator::OperatorSpec;

/// Coefficients of `α Ric⁽¹⁾ + β Ric⁽²⁾ + γ (Ric⁽³⁾ + Ric⁽⁴⁾)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedRicciParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    UniformlyElliptic,
    Limiting,
    Inadmissible,
    /// No Laplacian term: the equation is already in standard form.
    Direct,
}

/// The background term `χ` of the reduced equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiShift {
    /// Vanishes identically (flat background).
    Zero,
    Field(Vec<Herm2>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedProblem {
    /// Coefficient of `−∂∂̄u` next to `Δu ω`; `None` for direct reductions.
    pub rho: Option<f64>,
    pub chi_shift: ChiShift,
    /// Constant added to the exponent, i.e. `ψ` is scaled by `e^{exponent_shift}`.
    pub exponent_shift: f64,
    pub lambda0: f64,
    pub regime: Regime,
    /// The cone threshold `ϱ_Γ` used for classification.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub varrho: Option<f64>,
}

impl ReducedProblem {
    /// Factor `e^{exponent_shift}` multiplying `ψ`.
    pub fn psi_factor(&self) -> f64 {
        self.exponent_shift.exp()
    }

    /// The operator `f̃` on the transformed cone for a Laplacian-type
    /// reduction. Only defined outside the inadmissible regime.
    pub fn induced_operator(&self, base: &OperatorSpec) -> Result<OperatorSpec> {
        match (self.rho, self.regime) {
            (Some(rho), Regime::UniformlyElliptic | Regime::Limiting) => {
                OperatorSpec::induced(base.clone(), rho)
            }
            _ => Err(Error::InadmissibleParameter(format!(
                "no induced operator in regime {:?}",
                self.regime
            ))),
        }
    }
}

/// Classifies `ϱ` against the cone threshold `ϱ_Γ`.
pub fn classify(rho: f64, varrho: f64) -> Regime {
    if rho == 0.0 {
        return Regime::Inadmissible;
    }
    let gap = varrho - rho;
    if gap.abs() <= 1e-12 * varrho.abs().max(1.0) {
        Regime::Limiting
    } else if gap > 0.0 {
        Regime::UniformlyElliptic
    } else {
        Regime::Inadmissible
    }
}

/// Mixed Chern-Ricci reduction with `ς = 1`.
pub fn reduce_mixed(p: &MixedRicciParams, cone: &Cone) -> Result<ReducedProblem> {
    reduce_mixed_with_degree(p, cone, 1.0)
}

pub fn reduce_mixed_with_degree(
    p: &MixedRicciParams,
    cone: &Cone,
    sigma_deg: f64,
) -> Result<ReducedProblem> {
    if !(p.beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {}", p.beta)));
    }
    if p.n != cone.dim() {
        return Err(Error::DimensionMismatch {
            expected: cone.dim(),
            actual: p.n,
        });
    }
    check_degree(sigma_deg)?;
    let c = p.n as f64 * p.alpha + 2.0 * p.gamma;
    let rho = -c / p.beta;
    // avoid reporting −0
    let rho = if rho == 0.0 { 0.0 } else { rho };
    let varrho = cone.varrho();
    Ok(ReducedProblem {
        rho: Some(rho),
        chi_shift: ChiShift::Zero,
        exponent_shift: -sigma_deg * p.beta.ln(),
        lambda0: sigma_deg,
        regime: classify(rho, varrho),
        varrho: Some(varrho),
    })
}

/// First Chern-Ricci reduction: `χ = −Ric/n`, `Λ₀ = ς`, shift `−ς log n`.
/// An empty `ric` means a flat background.
pub fn reduce_first_chern(ric: &[Herm2], n: usize, sigma_deg: f64) -> Result<ReducedProblem> {
    check_degree(sigma_deg)?;
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let chi_shift = if ric.is_empty() {
        ChiShift::Zero
    } else {
        ChiShift::Field(ric.par_iter().map(|r| r.scale(-1.0 / n as f64)).collect())
    };
    Ok(ReducedProblem {
        rho: None,
        chi_shift,
        exponent_shift: -sigma_deg * (n as f64).ln(),
        lambda0: sigma_deg,
        regime: Regime::Direct,
        varrho: None,
    })
}

fn check_degree(s: f64) -> Result<()> {
    if s > 0.0 && s <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("degree must lie in (0, 1], got {s}")))
    }
}

const N: f64 = 2.0;

fn check_len(grid: &TorusGrid, u: &[f64]) -> Result<()> {
    if u.len() == grid.len() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: grid.len(),
            actual: u.len(),
        })
    }
}

/// `Ric⁽¹⁾(e^u ω) = −n ∂∂̄u` for the flat metric `ω`.
pub fn chern_ricci_flat_conformal(grid: &TorusGrid, u: &[f64]) -> Result<Vec<Herm2>> {
    check_len(grid, u)?;
    Ok((0..grid.len())
        .into_par_iter()
        .map(|i| complex_hessian_at(grid, u, i).scale(-N))
        .collect())
}

/// `Ric⁽¹⁾(e^u ω)` from the Chern curvature of `g̃ = e^u δ`:
///
/// ```text
/// R_{ij̄kl̄} = −∂_i∂_j̄ g̃_{kl̄} + g̃^{pq̄} ∂_i g̃_{kq̄} ∂_j̄ g̃_{pl̄},
/// Ric_{ij̄}  = g̃^{kl̄} R_{ij̄kl̄} = (n/w)(−w_{ij̄} + w_i w_j̄ / w),   w = e^u,
/// ```
///
/// with every derivative of `w` taken by central differences.
pub fn chern_ricci_direct(grid: &TorusGrid, u: &[f64]) -> Result<Vec<Herm2>> {
    check_len(grid, u)?;
    let w: Vec<f64> = u.par_iter().map(|x| x.exp()).collect();
    Ok((0..grid.len())
        .into_par_iter()
        .map(|i| {
            let wi = w[i];
            let h = complex_hessian_at(grid, &w, i);
            let d = complex_gradient_at(grid, &w, i);
            let s = N / wi;
            Herm2 {
                a11: s * (-h.a11 + d[0].norm_sqr() / wi),
                a12: (-h.a12 + d[0] * d[1].conj() / wi) * s,
                a22: s * (-h.a22 + d[1].norm_sqr() / wi),
            }
        })
        .collect())
}

/// Chern scalar curvature `R(e^u ω) = e^{−u} tr Ric⁽¹⁾(e^u ω) = −n e^{−u} Δu`.
pub fn chern_scalar_flat_conformal(grid: &TorusGrid, u: &[f64]) -> Result<Vec<f64>> {
    let ric = chern_ricci_flat_conformal(grid, u)?;
    Ok(ric
        .par_iter()
        .zip(u.par_iter())
        .map(|(r, ui)| (-ui).exp() * r.trace())
        .collect())
}

/// Pointwise `f(λ(−(e^u ω)^{-1}(Ric_bg + Ric⁽¹⁾(e^u ω)))) − ψ`, with the
/// conformal Ricci form from [`chern_ricci_direct`] and `Ric_bg` a
/// prescribed background Ricci form (empty for flat).
pub fn first_chern_defect(
    grid: &TorusGrid,
    u: &[f64],
    ric_bg: &[Herm2],
    f: &OperatorSpec,
    psi: &[f64],
) -> Result<Vec<f64>> {
    check_len(grid, psi)?;
    if !ric_bg.is_empty() && ric_bg.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            actual: ric_bg.len(),
        });
    }
    let ric = chern_ricci_direct(grid, u)?;
    ric.par_iter()
        .enumerate()
        .map(|(i, r)| {
            let total = if ric_bg.is_empty() { *r } else { *r + ric_bg[i] };
            let m = total.scale(-(-u[i]).exp());
            let (lam, _) = m.eigen();
            Ok(f.value(&lam)? - psi[i])
        })
        .collect()
}

/// A constant 2×2 form `c·I` sampled over the grid.
pub fn constant_field(grid: &TorusGrid, c: f64) -> Vec<Herm2> {
    vec![Herm2::scalar(c); grid.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params(alpha: f64, beta: f64, gamma: f64, n: usize) -> MixedRicciParams {
        MixedRicciParams { alpha, beta, gamma, n }
    }

    #[test]
    fn limiting_regime_in_dimension_two() {
        let cone = Cone::garding(2, 2).unwrap();
        let r = reduce_mixed(&params(0.0, 1.0, -0.5, 2), &cone).unwrap();
        assert_eq!(r.rho, Some(1.0));
        assert_eq!(r.regime, Regime::Limiting);
        assert_eq!(r.exponent_shift, 0.0);
    }

    #[test]
    fn uniform_regime_below_threshold() {
        let cone = Cone::garding(2, 3).unwrap();
        // nα + 2γ = −β·ϱ with ϱ = 1.2 < 3/2
        let r = reduce_mixed(&params(0.0, 1.0, -0.6, 3), &cone).unwrap();
        assert!((r.rho.unwrap() - 1.2).abs() < 1e-15);
        assert_eq!(r.regime, Regime::UniformlyElliptic);
    }

    #[test]
    fn pure_laplacian_is_flagged() {
        let cone = Cone::garding(2, 3).unwrap();
        let r = reduce_mixed(&params(1.0, 2.0, -1.5, 3), &cone).unwrap();
        assert_eq!(r.rho, Some(0.0));
        assert_eq!(r.regime, Regime::Inadmissible);
        assert!((r.exponent_shift + 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_beta_rejected() {
        let cone = Cone::garding(2, 3).unwrap();
        assert!(matches!(
            reduce_mixed(&params(0.0, 0.0, 1.0, 3), &cone),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn positive_combination_is_uniformly_elliptic() {
        // β + nα + 2γ > 0 with nα + 2γ ≠ 0 gives ϱ < 1 ≤ ϱ_Γ
        let cone = Cone::garding(3, 3).unwrap();
        for (a, b, g) in [(0.1, 1.0, 0.2), (-0.2, 1.0, 0.1), (0.0, 2.0, -0.9), (1.0, 0.5, -1.6)] {
            let p = params(a, b, g, 3);
            if b + 3.0 * a + 2.0 * g > 0.0 {
                assert_eq!(reduce_mixed(&p, &cone).unwrap().regime, Regime::UniformlyElliptic);
            }
        }
    }

    #[test]
    fn first_chern_flat() {
        let r = reduce_first_chern(&[], 2, 1.0).unwrap();
        assert_eq!(r.chi_shift, ChiShift::Zero);
        assert!((r.psi_factor() - 0.5).abs() < 1e-15);
        let r4 = reduce_first_chern(&[], 4, 1.0).unwrap();
        assert!((r4.exponent_shift - 2.0 * r.exponent_shift).abs() < 1e-15);
        assert!(reduce_first_chern(&[], 2, 1.5).is_err());
    }

    #[test]
    fn constant_u_is_flat() {
        let g = TorusGrid::new(6).unwrap();
        let u = vec![0.7; g.len()];
        for r in chern_ricci_flat_conformal(&g, &u).unwrap() {
            assert!(r.trace().abs() < 1e-12 && r.a12.norm() < 1e-12);
        }
        for r in chern_ricci_direct(&g, &u).unwrap() {
            assert!(r.trace().abs() < 1e-12 && r.a12.norm() < 1e-12);
        }
    }

    #[test]
    fn sine_mode_ricci() {
        let g = TorusGrid::new(16).unwrap();
        let u = g.sample(|p| (2.0 * PI * p[0]).sin());
        let ric = chern_ricci_flat_conformal(&g, &u).unwrap();
        let err = (0..g.len())
            .map(|i| {
                // u_{11̄} = −π² sin(2πx₁)
                let exact = 2.0 * PI * PI * (2.0 * PI * g.point(i)[0]).sin();
                (ric[i].a11 - exact).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 0.02 * 2.0 * PI * PI, "{err}");
    }

    fn direct_gap(side: usize) -> f64 {
        let g = TorusGrid::new(side).unwrap();
        let u = g.sample(|p| {
            0.4 * (2.0 * PI * p[0]).sin() * (2.0 * PI * p[3]).cos() + 0.3 * (2.0 * PI * (p[1] + p[2])).cos()
        });
        let a = chern_ricci_flat_conformal(&g, &u).unwrap();
        let b = chern_ricci_direct(&g, &u).unwrap();
        a.iter()
            .zip(&b)
            .map(|(x, y)| {
                let d = *x - *y;
                d.a11.abs().max(d.a22.abs()).max(d.a12.norm())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn direct_formula_agrees_to_second_order() {
        let (e8, e16) = (direct_gap(8), direct_gap(16));
        let ratio = e8 / e16;
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio} ({e8} vs {e16})");
    }

    #[test]
    fn scalar_is_trace_of_ricci() {
        let g = TorusGrid::new(8).unwrap();
        let u = g.sample(|p| 0.2 * (2.0 * PI * p[1]).cos() + 0.1 * (2.0 * PI * p[2]).sin());
        let s = chern_scalar_flat_conformal(&g, &u).unwrap();
        let ric = chern_ricci_flat_conformal(&g, &u).unwrap();
        for i in 0..g.len() {
            assert!((s[i] - (-u[i]).exp() * ric[i].trace()).abs() <= 1e-12 * (1.0 + s[i].abs()));
        }
    }

    #[test]
    fn positive_laplacian_gives_negative_scalar() {
        // u = |x|²-like bump is not periodic, so use the quadratic away from the seam
        let g = TorusGrid::new(8).unwrap();
        let u = g.sample(|p| p.iter().map(|x| x * x).sum());
        let s = chern_scalar_flat_conformal(&g, &u).unwrap();
        let interior = g.index([3, 3, 3, 3]);
        assert!(s[interior] < 0.0);
        assert!((s[interior] + 2.0 * (-u[interior]).exp() * 2.0).abs() < 1e-10);
    }
}
