//! Newton-Krylov solver on the flat complex 2-torus.
//!
//! Each Newton step solves `L v = −R` with
//! `L v = F^{ij̄} v_{ij̄} − Λ₀ψe^{Λ₀u} v` by right-preconditioned BiCGStab.
//! The preconditioner inverts the constant-coefficient operator
//! `ā Δ − b̄` exactly in Fourier space.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{SolveReport, CONTINUATION, MAX_HALVINGS};
use crate::cone::Cone;
use crate::error::{Error, Result};
use crate::grid::{complex_hessian_at, Herm2, TorusGrid};
use crate::operator::OperatorSpec;
use crate::pencil::CLUSTER_TOL;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 50;
pub const KRYLOV_MAX_ITER: usize = 400;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusProblem {
    pub grid: TorusGrid,
    pub chi: Vec<Herm2>,
    pub psi: Vec<f64>,
    pub lambda0: f64,
    pub operator: OperatorSpec,
    pub tol: f64,
    pub max_iter: usize,
}

impl TorusProblem {
    /// Checks dimensions, positivity of `ψ` and `Λ₀`, and admissibility of `χ`.
    pub fn new(
        grid: TorusGrid,
        chi: Vec<Herm2>,
        psi: Vec<f64>,
        lambda0: f64,
        operator: OperatorSpec,
    ) -> Result<Self> {
        let p = TorusProblem {
            grid,
            chi,
            psi,
            lambda0,
            operator,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.operator.dim() != 2 {
            return Err(Error::UnsupportedGeometry(format!(
                "torus solver is two-dimensional, operator has dimension {}",
                self.operator.dim()
            )));
        }
        for len in [self.chi.len(), self.psi.len()] {
            if len != self.grid.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.grid.len(),
                    actual: len,
                });
            }
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
        let cone = self.operator.cone();
        if let Some(i) = self.chi.iter().position(|c| !cone.contains(&c.eigen().0).unwrap_or(false)) {
            return Err(Error::Initialization(format!(
                "chi is not admissible at grid point {i}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusSolution {
    pub u: Vec<f64>,
    pub report: SolveReport,
}

/// Pointwise data of the linearization at one grid point.
#[derive(Clone, Copy)]
struct Local {
    res: f64,
    coeff: Herm2,
    zeroth: f64,
    margin: f64,
}

struct Assembly {
    locals: Vec<Local>,
    residual: f64,
    min_margin: f64,
}

struct Ctx<'a> {
    p: &'a TorusProblem,
    cone: Cone,
    fft: Fft4,
}

impl Ctx<'_> {
    fn local(&self, u: &[f64], psi: &[f64], i: usize) -> Option<Local> {
        let m = self.p.chi[i] + complex_hessian_at(&self.p.grid, u, i);
        let (lam, vecs) = m.eigen();
        if !self.cone.contains(&lam).ok()? {
            return None;
        }
        let (f, mut g) = self.p.operator.value_and_gradient(&lam).ok()?;
        if lam[1] - lam[0] <= CLUSTER_TOL * (1.0 + lam[1].abs()) {
            let avg = 0.5 * (g[0] + g[1]);
            g = vec![avg, avg];
        }
        let [v0, v1] = vecs;
        let coeff = Herm2 {
            a11: g[0] * v0[0].norm_sqr() + g[1] * v1[0].norm_sqr(),
            a12: v0[0] * v0[1].conj() * g[0] + v1[0] * v1[1].conj() * g[1],
            a22: g[0] * v0[1].norm_sqr() + g[1] * v1[1].norm_sqr(),
        };
        let rhs = psi[i] * (self.p.lambda0 * u[i]).exp();
        Some(Local {
            res: f - rhs,
            coeff,
            zeroth: self.p.lambda0 * rhs,
            margin: self.cone.margin(&lam),
        })
    }

    fn assemble(&self, u: &[f64], psi: &[f64]) -> Option<Assembly> {
        let locals: Option<Vec<Local>> = (0..self.p.grid.len())
            .into_par_iter()
            .map(|i| self.local(u, psi, i))
            .collect();
        let locals = locals?;
        let residual = locals.iter().fold(0.0f64, |a, l| a.max(l.res.abs()));
        let min_margin = locals.iter().fold(f64::INFINITY, |a, l| a.min(l.margin));
        Some(Assembly {
            locals,
            residual,
            min_margin,
        })
    }

    fn apply(&self, locals: &[Local], v: &[f64]) -> Vec<f64> {
        let grid = &self.p.grid;
        (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let l = &locals[i];
                l.coeff.contract(&complex_hessian_at(grid, v, i)) - l.zeroth * v[i]
            })
            .collect()
    }

    fn newton(&self, psi: &[f64], mut u: Vec<f64>) -> Result<(Vec<f64>, SolveReport)> {
        let p = self.p;
        let mut rep = SolveReport::default();
        let mut asm = self
            .assemble(&u, psi)
            .ok_or_else(|| Error::Initialization("initial guess is not admissible".into()))?;
        loop {
            let r = asm.residual;
            rep.residual_history.push(r);
            rep.margin_history.push(asm.min_margin);
            rep.residual = r;
            rep.min_margin = asm.min_margin;
            if r <= p.tol {
                return Ok((u, rep));
            }
            if rep.iterations >= p.max_iter {
                return Err(nonconvergence(&rep, "iteration limit reached"));
            }
            rep.iterations += 1;
            let b: Vec<f64> = asm.locals.iter().map(|l| -l.res).collect();
            let a_bar = asm.locals.iter().map(|l| 0.5 * l.coeff.trace()).sum::<f64>()
                / asm.locals.len() as f64;
            let b_bar = asm.locals.iter().map(|l| l.zeroth).sum::<f64>() / asm.locals.len() as f64;
            let symbol = self.fft.symbol(p.grid.h(), a_bar, b_bar);
            let eta = r.clamp(1e-13, 1e-2);
            let (step, its) = bicgstab(
                |v| self.apply(&asm.locals, v),
                |v| self.fft.solve(&symbol, v),
                &b,
                eta,
                KRYLOV_MAX_ITER,
            )
            .map_err(|hist| Error::NonConvergence {
                iterations: rep.iterations,
                residual: r,
                reason: "Krylov solver stagnated".into(),
                history: hist,
            })?;
            rep.linear_iterations.push(its);
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                let trial: Vec<f64> = u.par_iter().zip(&step).map(|(a, s)| a + alpha * s).collect();
                if let Some(next) = self.assemble(&trial, psi) {
                    if next.residual < r {
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
            u = trial;
            asm = next;
        }
    }

    fn solve(&self, init: Vec<f64>) -> Result<(Vec<f64>, SolveReport)> {
        let p = self.p;
        let Some(asm0) = self.assemble(&init, &p.psi) else {
            return Err(Error::Initialization("initial guess is not admissible".into()));
        };
        match self.newton(&p.psi, init.clone()) {
            Ok(ok) => Ok(ok),
            Err(Error::NonConvergence { .. }) => {
                // ψ₀ makes `init` an exact solution
                let psi0: Vec<f64> = asm0
                    .locals
                    .iter()
                    .zip(&p.psi)
                    .zip(&init)
                    .map(|((l, psi), u)| (l.res + psi * (p.lambda0 * u).exp()) * (-p.lambda0 * u).exp())
                    .collect();
                let mut u = init;
                let mut rep = SolveReport::default();
                for (stage, s) in CONTINUATION.iter().enumerate() {
                    let psi_s: Vec<f64> =
                        psi0.iter().zip(&p.psi).map(|(a, b)| (1.0 - s) * a + s * b).collect();
                    let (next, r) = self.newton(&psi_s, u)?;
                    rep.absorb(r);
                    rep.continuation_stages = stage + 1;
                    u = next;
                }
                Ok((u, rep))
            }
            Err(e) => Err(e),
        }
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

fn ctx(p: &TorusProblem) -> Result<Ctx<'_>> {
    p.validate()?;
    Ok(Ctx {
        p,
        cone: p.operator.cone(),
        fft: Fft4::new(p.grid.side),
    })
}

/// Solves from `u ≡ 0`, which is admissible because `χ` is.
pub fn solve_torus(p: &TorusProblem) -> Result<TorusSolution> {
    solve_torus_from(p, vec![0.0; p.grid.len()])
}

pub fn solve_torus_from(p: &TorusProblem, init: Vec<f64>) -> Result<TorusSolution> {
    if init.len() != p.grid.len() {
        return Err(Error::DimensionMismatch {
            expected: p.grid.len(),
            actual: init.len(),
        });
    }
    let (u, report) = ctx(p)?.solve(init)?;
    Ok(TorusSolution { u, report })
}

/// Pointwise `f(λ(χ + ∂∂̄u)) − ψe^{Λ₀u}`.
pub fn torus_residual(p: &TorusProblem, u: &[f64]) -> Result<Vec<f64>> {
    p.validate()?;
    (0..p.grid.len())
        .into_par_iter()
        .map(|i| {
            let m = p.chi[i] + complex_hessian_at(&p.grid, u, i);
            let (lam, _) = m.eigen();
            Ok(p.operator.value(&lam)? - p.psi[i] * (p.lambda0 * u[i]).exp())
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned BiCGStab for `A x = b` from `x = 0`. Returns the
/// solution and the iteration count, or the residual history on
/// stagnation.
fn bicgstab(
    a: impl Fn(&[f64]) -> Vec<f64>,
    m_inv: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> std::result::Result<(Vec<f64>, usize), Vec<f64>> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let target = rel_tol * bnorm;
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut history = vec![bnorm];
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        p.par_iter_mut()
            .zip(&r)
            .zip(&v)
            .for_each(|((p, r), v)| *p = r + beta * (*p - omega * v));
        let y = m_inv(&p);
        v = a(&y);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 {
            break;
        }
        alpha = rho / denom;
        let s: Vec<f64> = r.par_iter().zip(&v).map(|(r, v)| r - alpha * v).collect();
        if norm(&s) <= target {
            x.par_iter_mut().zip(&y).for_each(|(x, y)| *x += alpha * y);
            return Ok((x, it));
        }
        let z = m_inv(&s);
        let t = a(&z);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        x.par_iter_mut()
            .zip(&y)
            .zip(&z)
            .for_each(|((x, y), z)| *x += alpha * y + omega * z);
        r = s.par_iter().zip(&t).map(|(s, t)| s - omega * t).collect();
        let rn = norm(&r);
        history.push(rn);
        if rn <= target {
            return Ok((x, it));
        }
    }
    Err(history)
}

/// 4-D FFT over the periodic grid, applied axis by axis with a cyclic
/// transpose after every pass.
struct Fft4 {
    side: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft4 {
    fn new(side: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft4 {
            side,
            fwd: planner.plan_fft_forward(side),
            inv: planner.plan_fft_inverse(side),
        }
    }

    fn transform(&self, data: &mut Vec<Complex64>, inverse: bool) {
        let fft = if inverse { &self.inv } else { &self.fwd };
        let s = self.side;
        let s3 = s * s * s;
        let mut tmp = vec![Complex64::new(0.0, 0.0); data.len()];
        for _ in 0..4 {
            data.par_chunks_mut(s).for_each_init(
                || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
                |scratch, line| fft.process_with_scratch(line, scratch),
            );
            // (a, b, c, d) → (d, a, b, c)
            tmp.par_iter_mut().enumerate().for_each(|(j, out)| {
                *out = data[(j % s3) * s + j / s3];
            });
            std::mem::swap(data, &mut tmp);
        }
    }

    /// Fourier symbol of `ā·¼Σ∂²_a − b̄` for the discrete second differences.
    fn symbol(&self, h: f64, a_bar: f64, b_bar: f64) -> Vec<f64> {
        let s = self.side;
        let lap1: Vec<f64> = (0..s)
            .map(|k| -4.0 / (h * h) * (std::f64::consts::PI * k as f64 / s as f64).sin().powi(2))
            .collect();
        (0..s.pow(4))
            .into_par_iter()
            .map(|j| {
                let (a, b, c, d) = (j / (s * s * s), (j / (s * s)) % s, (j / s) % s, j % s);
                a_bar * 0.25 * (lap1[a] + lap1[b] + lap1[c] + lap1[d]) - b_bar
            })
            .collect()
    }

    fn solve(&self, symbol: &[f64], v: &[f64]) -> Vec<f64> {
        let mut data: Vec<Complex64> = v.par_iter().map(|x| Complex64::new(*x, 0.0)).collect();
        self.transform(&mut data, false);
        data.par_iter_mut().zip(symbol).for_each(|(z, s)| *z /= *s);
        self.transform(&mut data, true);
        let scale = 1.0 / v.len() as f64;
        data.par_iter().map(|z| z.re * scale).collect()
    }
}
