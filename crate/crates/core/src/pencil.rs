//! Hermitian pencils `λ(g^{-1}Θ)` and the linearization `F^{ij̄}` of
//! `Θ ↦ f(λ(g^{-1}Θ))`.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::cone::Spectrum;
use crate::error::{Error, Result};
use crate::operator::OperatorSpec;

/// Relative gap below which eigenvalues are treated as one cluster.
pub const CLUSTER_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianForm {
    entries: DMatrix<Complex64>,
}

impl HermitianForm {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidArgument("Hermitian form must be square".into()));
        }
        let scale = entries.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let defect = (&entries - entries.adjoint())
            .iter()
            .fold(0.0f64, |a, z| a.max(z.norm()));
        if defect > 1e-13 * scale.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "matrix is not Hermitian (defect {defect:e})"
            )));
        }
        Ok(HermitianForm { entries })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        HermitianForm {
            entries: DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    Complex64::new(diag[i], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn identity(n: usize) -> Self {
        HermitianForm::from_real_diagonal(&vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// `Re tr(self · other)`, the natural pairing of an upper-index form with
    /// a lower-index one.
    pub fn contract(&self, other: &HermitianForm) -> f64 {
        let n = self.n();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += (self.entries[(i, j)] * other.entries[(j, i)]).re;
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pencil {
    pub g: HermitianForm,
    pub theta: HermitianForm,
}

#[derive(Clone, Debug)]
pub struct PencilEigen {
    pub values: Spectrum,
    /// Columns `v_p` with `Θv_p = λ_p g v_p` and `v_p^* g v_q = δ_pq`.
    pub frame: DMatrix<Complex64>,
}

/// Eigenvalues of `g^{-1}Θ` by Cholesky reduction `L^{-1} Θ L^{-*}`.
pub fn pencil_eigen(p: &Pencil) -> Result<PencilEigen> {
    let n = p.g.n();
    if p.theta.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: p.theta.n(),
        });
    }
    let chol = Cholesky::new(p.g.entries.clone()).ok_or(Error::Metric)?;
    let l = chol.l();
    if (0..n).any(|i| {
        let d = l[(i, i)];
        !(d.re > 0.0 && d.re.is_finite() && d.im.abs() <= 1e-12 * d.re)
    }) {
        return Err(Error::Metric);
    }
    let y = l
        .solve_lower_triangular(&p.theta.entries)
        .ok_or(Error::Metric)?;
    // reduced = L^{-1} Θ L^{-*} = (L^{-1} (L^{-1} Θ)^*)^*
    let reduced = l
        .solve_lower_triangular(&y.adjoint())
        .ok_or(Error::Metric)?
        .adjoint();
    let reduced = (&reduced + reduced.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let w = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let frame = l
        .adjoint()
        .solve_upper_triangular(&w)
        .ok_or(Error::Metric)?;
    Ok(PencilEigen {
        values: Spectrum::from_unsorted(values),
        frame,
    })
}

/// Averages `grad` over clusters of (ascending) `values` whose consecutive
/// gaps are below `CLUSTER_TOL·(1+|λ|)`.
pub fn cluster_average(values: &[f64], grad: &mut [f64]) {
    let n = values.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] <= CLUSTER_TOL * (1.0 + values[end].abs()) {
            end += 1;
        }
        if end - start > 1 {
            let avg = grad[start..end].iter().sum::<f64>() / (end - start) as f64;
            grad[start..end].iter_mut().for_each(|g| *g = avg);
        }
        start = end;
    }
}

/// `F = Σ_p f_p(λ) v_p v_p^*`, so that `F.contract(δΘ)` is the derivative of
/// `f(λ(g^{-1}Θ))` in the direction `δΘ`.
pub fn operator_derivative(f: &OperatorSpec, p: &Pencil) -> Result<HermitianForm> {
    let eig = pencil_eigen(p)?;
    let mut grad = f.gradient(&eig.values)?;
    cluster_average(&eig.values, &mut grad);
    let n = eig.values.n();
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    for (pidx, fp) in grad.iter().enumerate() {
        let v = eig.frame.column(pidx);
        out += (v * v.adjoint()) * Complex64::new(*fp, 0.0);
    }
    let out = (&out + out.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(HermitianForm { entries: out })
}

/// Value `f(λ(g^{-1}Θ))`.
pub fn pencil_value(f: &OperatorSpec, p: &Pencil) -> Result<f64> {
    f.value(&pencil_eigen(p)?.values)
}

/// Closed-form eigen-decomposition of the 2×2 Hermitian matrix
/// `[[a, b], [b̄, c]]`: ascending eigenvalues and unit eigenvectors.
pub fn herm2_eigen(a: f64, b: Complex64, c: f64) -> ([f64; 2], [[Complex64; 2]; 2]) {
    let mean = 0.5 * (a + c);
    let half = 0.5 * (a - c);
    let r = (half * half + b.norm_sqr()).sqrt();
    let (l1, l2) = (mean - r, mean + r);
    let bn = b.norm();
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    if bn <= 1e-300 {
        return if a <= c {
            ([a, c], [[one, zero], [zero, one]])
        } else {
            ([c, a], [[zero, one], [one, zero]])
        };
    }
    // top eigenvector ∝ (b, l2 − a) or (l2 − c, b̄); pick the better conditioned
    let (x, y) = if half >= 0.0 {
        (Complex64::new(l2 - c, 0.0), b.conj())
    } else {
        (b, Complex64::new(l2 - a, 0.0))
    };
    let nrm = (x.norm_sqr() + y.norm_sqr()).sqrt();
    let (x, y) = (x / nrm, y / nrm);
    // the orthogonal complement (−ȳ, x̄) spans the bottom eigenspace
    let v1 = [-y.conj(), x.conj()];
    let v2 = [x, y];
    ([l1, l2], [v1, v2])
}
