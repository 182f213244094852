//! Numerical toolkit for fully nonlinear elliptic operators of eigenvalue
//! type: Gårding cones and their linear transforms, symmetric concave
//! operators with partial uniform ellipticity certificates, eigenvalue
//! localization for bordered Hermitian matrices, Hermitian pencils, conformal
//! curvature reductions on flat geometries, and cone-admissible Newton
//! solvers for `f(λ(χ + ∂∂̄u)) = ψ e^{Λ₀u}`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cone;
mod dd;
pub mod error;
pub mod esf;
pub mod grid;
pub mod localization;
pub mod operator;
pub mod pencil;
pub mod curvature;
pub mod sampling;
pub mod solver;

pub use cone::{Cone, ConeType, Spectrum};
pub use error::{Error, Result};
pub use operator::OperatorSpec;
