//! Cone-admissible damped Newton solvers for `f(λ(χ + ∂∂̄u)) = ψ e^{Λ₀u}`.

use serde::{Deserialize, Serialize};

pub mod radial;
pub mod torus;

pub use radial::{
    barrier_margin, completeness_integral, radial_eigenvalues, solve_radial_dirichlet,
    solve_radial_exhaustion, solve_radial_from, RadialBoundary, RadialProblem, RadialSolution,
};
pub use torus::{solve_torus, solve_torus_from, torus_residual, TorusProblem, TorusSolution};

/// Backtracking gives up after this many step halvings.
pub const MAX_HALVINGS: usize = 50;

/// Continuation stages in `ψ` used when Newton fails from the initial guess.
pub const CONTINUATION: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final sup-norm residual.
    pub residual: f64,
    /// Smallest normalized cone margin over the grid.
    pub min_margin: f64,
    /// Accepted step lengths.
    pub damping: Vec<f64>,
    /// Sup-norm residual before every Newton step of the final stage, then
    /// the final one.
    pub residual_history: Vec<f64>,
    /// Smallest cone margin of every accepted iterate.
    pub margin_history: Vec<f64>,
    /// Number of continuation stages used (zero when Newton converged directly).
    pub continuation_stages: usize,
    /// Krylov iterations per Newton step (torus only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub linear_iterations: Vec<usize>,
}

impl SolveReport {
    /// Every accepted iterate was admissible.
    pub fn all_admissible(&self) -> bool {
        self.margin_history.iter().all(|m| *m > 0.0)
    }

    /// Accepted steps never increased the residual.
    pub fn monotone(&self) -> bool {
        self.residual_history.windows(2).all(|w| w[1] <= w[0])
    }

    fn absorb(&mut self, stage: SolveReport) {
        self.iterations += stage.iterations;
        self.residual = stage.residual;
        self.min_margin = stage.min_margin;
        self.damping.extend(stage.damping);
        self.residual_history = stage.residual_history;
        self.margin_history.extend(stage.margin_history);
        self.linear_iterations.extend(stage.linear_iterations);
    }
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}
