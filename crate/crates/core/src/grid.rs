//! Periodic grids on the flat complex 2-torus and the discrete complex
//! Hessian.
//!
//! Real coordinates are ordered `(x1, y1, x2, y2)` with `z_j = x_j + i y_j`;
//! fields are stored row-major over that order. On flat coordinates
//!
//! ```text
//! u_{jk̄} = ¼(∂x_j∂x_k + ∂y_j∂y_k)u + (i/4)(∂x_j∂y_k − ∂y_j∂x_k)u
//! ```
//!
//! and every real second derivative is a second-order central difference.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pencil::herm2_eigen;

/// 2×2 Hermitian matrix `[[a11, a12], [ā12, a22]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Herm2 {
    pub a11: f64,
    pub a12: Complex64,
    pub a22: f64,
}

impl Herm2 {
    pub fn scalar(c: f64) -> Self {
        Herm2 {
            a11: c,
            a12: Complex64::new(0.0, 0.0),
            a22: c,
        }
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// `Re tr(self · other)`.
    pub fn contract(&self, other: &Herm2) -> f64 {
        self.a11 * other.a11 + self.a22 * other.a22 + 2.0 * (self.a12 * other.a12.conj()).re
    }

    pub fn eigen(&self) -> ([f64; 2], [[Complex64; 2]; 2]) {
        herm2_eigen(self.a11, self.a12, self.a22)
    }

    pub fn scale(&self, s: f64) -> Herm2 {
        Herm2 {
            a11: s * self.a11,
            a12: self.a12 * s,
            a22: s * self.a22,
        }
    }
}

impl std::ops::Add for Herm2 {
    type Output = Herm2;
    fn add(self, o: Herm2) -> Herm2 {
        Herm2 {
            a11: self.a11 + o.a11,
            a12: self.a12 + o.a12,
            a22: self.a22 + o.a22,
        }
    }
}

impl std::ops::Sub for Herm2 {
    type Output = Herm2;
    fn sub(self, o: Herm2) -> Herm2 {
        Herm2 {
            a11: self.a11 - o.a11,
            a12: self.a12 - o.a12,
            a22: self.a22 - o.a22,
        }
    }
}

/// Uniform periodic grid with `side^4` points on `[0,1)^4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub side: usize,
}

impl TorusGrid {
    pub fn new(side: usize) -> Result<Self> {
        if side < 4 {
            return Err(Error::UnsupportedGeometry(format!(
                "torus grid needs at least 4 points per axis, got {side}"
            )));
        }
        Ok(TorusGrid { side })
    }

    /// Grid with explicit per-axis spacings; only equal spacings `1/side`
    /// are supported.
    pub fn with_spacing(side: usize, spacing: [f64; 4]) -> Result<Self> {
        let h = 1.0 / side as f64;
        if spacing.iter().any(|s| (s - h).abs() > 1e-14 * h) {
            return Err(Error::UnsupportedGeometry(format!(
                "non-uniform spacing {spacing:?} (expected {h} on every axis)"
            )));
        }
        TorusGrid::new(side)
    }

    pub fn h(&self) -> f64 {
        1.0 / self.side as f64
    }

    pub fn len(&self) -> usize {
        self.side.pow(4)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, c: [usize; 4]) -> usize {
        let s = self.side;
        ((c[0] * s + c[1]) * s + c[2]) * s + c[3]
    }

    #[inline]
    pub fn coords(&self, mut idx: usize) -> [usize; 4] {
        let s = self.side;
        let mut c = [0; 4];
        for k in (0..4).rev() {
            c[k] = idx % s;
            idx /= s;
        }
        c
    }

    /// Physical point `(x1, y1, x2, y2)` of a flat index.
    pub fn point(&self, idx: usize) -> [f64; 4] {
        let h = self.h();
        self.coords(idx).map(|c| c as f64 * h)
    }

    /// Flat index one step along `axis` (forward or backward), wrapping
    /// periodically; `ca` is the coordinate of `idx` on that axis.
    #[inline]
    fn shift(&self, idx: usize, axis: usize, ca: usize, forward: bool) -> usize {
        let s = self.side;
        let stride = s.pow(3 - axis as u32);
        match (forward, ca) {
            (true, c) if c + 1 == s => idx + stride - s * stride,
            (true, _) => idx + stride,
            (false, 0) => idx + (s - 1) * stride,
            (false, _) => idx - stride,
        }
    }

    pub fn sample(&self, f: impl Fn([f64; 4]) -> f64 + Sync) -> Vec<f64> {
        (0..self.len()).into_par_iter().map(|i| f(self.point(i))).collect()
    }
}

/// Real second derivative `∂_a∂_b u` at one point by central differences.
#[inline]
fn d2(grid: &TorusGrid, u: &[f64], idx: usize, c: [usize; 4], a: usize, b: usize) -> f64 {
    let h2 = grid.h() * grid.h();
    let (ap, am) = (grid.shift(idx, a, c[a], true), grid.shift(idx, a, c[a], false));
    if a == b {
        (u[ap] - 2.0 * u[idx] + u[am]) / h2
    } else {
        let bs = |i: usize, fwd: bool| grid.shift(i, b, c[b], fwd);
        (u[bs(ap, true)] - u[bs(ap, false)] - u[bs(am, true)] + u[bs(am, false)]) / (4.0 * h2)
    }
}

const X1: usize = 0;
const Y1: usize = 1;
const X2: usize = 2;
const Y2: usize = 3;

/// Discrete `∂∂̄u` at one grid point.
pub fn complex_hessian_at(grid: &TorusGrid, u: &[f64], idx: usize) -> Herm2 {
    let c = grid.coords(idx);
    let a11 = 0.25 * (d2(grid, u, idx, c, X1, X1) + d2(grid, u, idx, c, Y1, Y1));
    let a22 = 0.25 * (d2(grid, u, idx, c, X2, X2) + d2(grid, u, idx, c, Y2, Y2));
    let re = 0.25 * (d2(grid, u, idx, c, X1, X2) + d2(grid, u, idx, c, Y1, Y2));
    let im = 0.25 * (d2(grid, u, idx, c, X1, Y2) - d2(grid, u, idx, c, Y1, X2));
    Herm2 {
        a11,
        a12: Complex64::new(re, im),
        a22,
    }
}

/// Discrete `∂∂̄u` over the whole grid.
pub fn discrete_complex_hessian(grid: &TorusGrid, u: &[f64]) -> Result<Vec<Herm2>> {
    if u.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            actual: u.len(),
        });
    }
    Ok((0..grid.len())
        .into_par_iter()
        .map(|i| complex_hessian_at(grid, u, i))
        .collect())
}

/// Discrete complex gradient `∂_j u = ½(∂x_j − i∂y_j)u` by central differences.
pub fn complex_gradient_at(grid: &TorusGrid, u: &[f64], idx: usize) -> [Complex64; 2] {
    let c = grid.coords(idx);
    let h = grid.h();
    let d1 = |a: usize| (u[grid.shift(idx, a, c[a], true)] - u[grid.shift(idx, a, c[a], false)]) / (2.0 * h);
    [
        Complex64::new(0.5 * d1(X1), -0.5 * d1(Y1)),
        Complex64::new(0.5 * d1(X2), -0.5 * d1(Y2)),
    ]
}
