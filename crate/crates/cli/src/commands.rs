use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use conekit::curvature::{reduce_first_chern, reduce_mixed_with_degree, MixedRicciParams, ReducedProblem};
use conekit::grid::{Herm2, TorusGrid};
use conekit::localization::{
    check_claims, localize, localize_refined, verify_against_eigensolver, BorderedHermitian, ClaimCheck,
    LocalizationResult, Variant, CSV_HEADER,
};
use conekit::operator::{structural_audit, uniform_ellipticity_audit, AuditReport, EllipticityReport, ThetaBound};
use conekit::solver::radial::{radial_eigenvalues, BoundaryBand, PsiSpec, RadialSpec, DEFAULT_T0};
use conekit::solver::{
    solve_radial_dirichlet, solve_radial_exhaustion, solve_torus, RadialBoundary, RadialProblem, SolveReport,
    TorusProblem,
};
use conekit::{Cone, ConeType, OperatorSpec};
use num_complex::Complex64;

use crate::io::{emit_failures, load_spec, print_json, write_binary, write_text};

/// Outcome of a successful run; `Violations` maps to exit code 2.
#[derive(Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Violations,
}

fn status(violations: bool) -> Status {
    if violations {
        Status::Violations
    } else {
        Status::Ok
    }
}

// ---------------------------------------------------------------------------
// cone
// ---------------------------------------------------------------------------

#[derive(Serialize)]
pub struct ConeInfo {
    pub cone: Cone,
    pub dim: usize,
    pub kappa: usize,
    pub varrho: f64,
    #[serde(rename = "type")]
    pub cone_type: ConeType,
    pub tol: f64,
}

impl ConeInfo {
    fn of(cone: &Cone) -> Self {
        ConeInfo {
            cone: cone.clone(),
            dim: cone.dim(),
            kappa: cone.kappa(),
            varrho: cone.varrho(),
            cone_type: cone.cone_type(),
            tol: cone.tol(),
        }
    }
}

pub fn resolve_cone(garding: Option<&[usize]>, spec: Option<&Path>, tol: Option<f64>) -> Result<Cone> {
    let cone = match (garding, spec) {
        (Some([k, n]), None) => Cone::garding(*k, *n)?,
        (None, Some(path)) => load_spec(path)?,
        (Some(_), Some(_)) => bail!("give either --garding or --spec, not both"),
        _ => bail!("a cone is required: --garding K N or --spec PATH"),
    };
    Ok(match tol {
        Some(t) => cone.with_tol(t),
        None => cone,
    })
}

pub fn cone_info(cone: &Cone) -> Result<Status> {
    print_json(&ConeInfo::of(cone))?;
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct TransformReport {
    rho: f64,
    base: ConeInfo,
    transformed: ConeInfo,
}

pub fn cone_transform(cone: &Cone, rho: f64) -> Result<Status> {
    let t = cone.transform(rho)?;
    print_json(&TransformReport {
        rho,
        base: ConeInfo::of(cone),
        transformed: ConeInfo::of(&t),
    })?;
    Ok(Status::Ok)
}

// ---------------------------------------------------------------------------
// op
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorFile {
    operator: OperatorSpec,
}

#[derive(Serialize)]
struct OpAuditReport {
    audit: AuditReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    ellipticity: Option<EllipticityReport>,
    passed: bool,
}

pub fn op_audit(spec: &Path, samples: usize, seed: u64, out: Option<&Path>) -> Result<Status> {
    let f = load_spec::<OperatorFile>(spec)?.operator;
    let audit = structural_audit(&f, samples, seed);
    let ellipticity = match f {
        OperatorSpec::Induced { .. } => Some(uniform_ellipticity_audit(&f, samples, seed)?),
        _ => None,
    };
    let ell_ok = ellipticity.as_ref().is_none_or(|e| e.passed);
    let passed = audit.passed() && ell_ok;

    let mut csv = String::from("check,violations,worst_slack\n");
    let mut failures = csv.clone();
    for c in &audit.checks {
        let row = format!("{},{},{:e}\n", c.name, c.violations, c.worst_slack);
        if c.violations > 0 {
            failures.push_str(&row);
        }
        csv.push_str(&row);
    }
    if let Some(e) = &ellipticity {
        let row = format!("ellipticity,{},{:e}\n", usize::from(!e.passed), e.min_ratio - e.theta_hat);
        if !e.passed {
            failures.push_str(&row);
        }
        csv.push_str(&row);
    }
    if let Some(p) = out {
        write_text(p, &csv)?;
    }
    print_json(&OpAuditReport {
        audit,
        ellipticity,
        passed,
    })?;
    if !passed {
        emit_failures(&failures);
    }
    Ok(status(!passed))
}

#[derive(Serialize)]
struct ThetaReport {
    #[serde(flatten)]
    cone: ConeInfo,
    bound: ThetaBound,
}

pub fn op_theta(cone: &Cone) -> Result<Status> {
    print_json(&ThetaReport {
        cone: ConeInfo::of(cone),
        bound: conekit::operator::theta_lower_bound(cone),
    })?;
    Ok(Status::Ok)
}

// ---------------------------------------------------------------------------
// eig
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BorderedFile {
    d: Vec<f64>,
    a: Vec<Complex64>,
    corner: f64,
    #[serde(default)]
    eps: Option<f64>,
}

#[derive(Serialize)]
struct LocalizeReport {
    eps: f64,
    refined: bool,
    eigenvalues: Vec<f64>,
    result: LocalizationResult,
    check: ClaimCheck,
}

pub fn eig_localize(spec: &Path, eps: Option<f64>, refined: bool) -> Result<Status> {
    let file: BorderedFile = load_spec(spec)?;
    let eps = eps
        .or(file.eps)
        .with_context(|| format!("{}: field `eps` missing and no --eps given", spec.display()))?;
    let m = BorderedHermitian::new(file.d, file.a, file.corner)?;
    let result = if refined { localize_refined(&m, eps)? } else { localize(&m, eps)? };
    let check = check_claims(&m, &result);
    print_json(&LocalizeReport {
        eps,
        refined,
        eigenvalues: m.eigenvalues(),
        result,
        check,
    })?;
    Ok(status(check.violations > 0))
}

#[derive(Serialize)]
struct VerifySummary {
    n: usize,
    eps: f64,
    trials: usize,
    seed: u64,
    margin: f64,
    variant: Variant,
    satisfied: usize,
    violations: usize,
    worst_margin: f64,
    fallbacks: usize,
}

pub struct VerifyArgs {
    pub n: usize,
    pub trials: usize,
    pub eps: f64,
    pub seed: u64,
    pub margin: f64,
    pub refined: bool,
}

pub fn eig_verify(a: &VerifyArgs, out: Option<&Path>) -> Result<Status> {
    let variant = if a.refined { Variant::Refined } else { Variant::Sharp };
    let rep = verify_against_eigensolver(a.n, a.eps, a.trials, a.margin, a.seed, variant)?;
    if let Some(p) = out {
        let mut csv = format!("{CSV_HEADER}\n");
        for r in &rep.rows {
            csv.push_str(&r.to_csv());
            csv.push('\n');
        }
        write_text(p, &csv)?;
    }
    print_json(&VerifySummary {
        n: rep.n,
        eps: rep.eps,
        trials: rep.trials,
        seed: a.seed,
        margin: a.margin,
        variant,
        satisfied: rep.satisfied,
        violations: rep.violations,
        worst_margin: rep.worst_margin,
        fallbacks: rep.fallbacks,
    })?;
    if rep.violations > 0 {
        let mut failures = format!("{CSV_HEADER}\n");
        for r in rep.rows.iter().filter(|r| r.violation) {
            failures.push_str(&r.to_csv());
            failures.push('\n');
        }
        emit_failures(&failures);
    }
    Ok(status(rep.violations > 0))
}

// ---------------------------------------------------------------------------
// curvature
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum ReductionFile {
    Mixed {
        alpha: f64,
        beta: f64,
        gamma: f64,
        cone: Cone,
        #[serde(default = "unit_degree")]
        degree: f64,
    },
    FirstChern {
        n: usize,
        #[serde(default = "unit_degree")]
        degree: f64,
        /// Background Chern-Ricci form per grid point; empty for flat.
        #[serde(default)]
        ricci: Vec<Herm2>,
    },
}

fn unit_degree() -> f64 {
    1.0
}

pub fn curvature_reduce(spec: &Path) -> Result<Status> {
    let red: ReducedProblem = match load_spec(spec)? {
        ReductionFile::Mixed {
            alpha,
            beta,
            gamma,
            cone,
            degree,
        } => {
            let p = MixedRicciParams {
                alpha,
                beta,
                gamma,
                n: cone.dim(),
            };
            reduce_mixed_with_degree(&p, &cone, degree)?
        }
        ReductionFile::FirstChern { n, degree, ricci } => reduce_first_chern(&ricci, n, degree)?,
    };
    print_json(&red)?;
    Ok(Status::Ok)
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RadialReport {
    n: usize,
    points: usize,
    operator: OperatorSpec,
    report: SolveReport,
}

#[derive(Serialize)]
struct ExhaustionSummary {
    n: usize,
    points: usize,
    operator: OperatorSpec,
    ks: Vec<u32>,
    min_increase: Vec<f64>,
    monotone: bool,
    band: BoundaryBand,
    cauchy: Vec<f64>,
    reports: Vec<SolveReport>,
}

pub fn solve_radial(spec: &Path, tol: Option<f64>, out: Option<&Path>) -> Result<Status> {
    let mut spec: RadialSpec = load_spec(spec)?;
    if tol.is_some() {
        spec.tol = tol;
    }
    let p = spec.into_problem()?;
    match p.boundary.clone() {
        RadialBoundary::Dirichlet { .. } => {
            let sol = solve_radial_dirichlet(&p)?;
            if let Some(path) = out {
                write_text(path, &sol.to_csv())?;
            }
            print_json(&RadialReport {
                n: p.n,
                points: p.t.len(),
                operator: p.operator.clone(),
                report: sol.report,
            })?;
        }
        RadialBoundary::Exhaustion { ks } => {
            let rep = solve_radial_exhaustion(&p, &ks)?;
            if let Some(path) = out {
                let mut csv = String::from("t");
                for k in &rep.ks {
                    csv.push_str(&format!(",phi_k{k}"));
                }
                csv.push('\n');
                for (i, t) in rep.t.iter().enumerate() {
                    csv.push_str(&t.to_string());
                    for s in &rep.solutions {
                        csv.push_str(&format!(",{}", s[i]));
                    }
                    csv.push('\n');
                }
                write_text(path, &csv)?;
            }
            print_json(&ExhaustionSummary {
                n: p.n,
                points: p.t.len(),
                operator: p.operator.clone(),
                ks: rep.ks,
                min_increase: rep.min_increase,
                monotone: rep.monotone,
                band: rep.band,
                cauchy: rep.cauchy,
                reports: rep.reports,
            })?;
        }
    }
    Ok(Status::Ok)
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum ChiSpec {
    Scalar(f64),
    Field(Vec<Herm2>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TorusFile {
    side: usize,
    chi: ChiSpec,
    psi: PsiSpec,
    lambda0: f64,
    operator: OperatorSpec,
    #[serde(default)]
    tol: Option<f64>,
    #[serde(default)]
    max_iter: Option<usize>,
}

#[derive(Serialize)]
struct TorusHeader<'a> {
    side: usize,
    len: usize,
    order: &'static str,
    dtype: &'static str,
    report: &'a SolveReport,
}

#[derive(Serialize)]
struct TorusReport<'a> {
    side: usize,
    operator: &'a OperatorSpec,
    u_min: f64,
    u_max: f64,
    report: &'a SolveReport,
}

pub fn solve_torus_cmd(spec: &Path, tol: Option<f64>, out: Option<&Path>) -> Result<Status> {
    let file: TorusFile = load_spec(spec)?;
    let grid = TorusGrid::new(file.side)?;
    let chi = match file.chi {
        ChiSpec::Scalar(c) => vec![Herm2::scalar(c); grid.len()],
        ChiSpec::Field(v) => v,
    };
    let psi = match file.psi {
        PsiSpec::Constant(c) => vec![c; grid.len()],
        PsiSpec::Values(v) => v,
    };
    let mut p = TorusProblem::new(grid, chi, psi, file.lambda0, file.operator)?;
    if let Some(t) = tol.or(file.tol) {
        p.tol = t;
    }
    if let Some(m) = file.max_iter {
        p.max_iter = m;
    }
    let sol = solve_torus(&p)?;
    if let Some(path) = out {
        let header = TorusHeader {
            side: grid.side,
            len: grid.len(),
            order: "x1,y1,x2,y2",
            dtype: "f64le",
            report: &sol.report,
        };
        write_binary(path, &header, &sol.u)?;
    }
    print_json(&TorusReport {
        side: grid.side,
        operator: &p.operator,
        u_min: sol.u.iter().cloned().fold(f64::INFINITY, f64::min),
        u_max: sol.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        report: &sol.report,
    })?;
    Ok(Status::Ok)
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ConvergenceReport {
    /// `exact` compares against a closed-form solution, `self` against the
    /// next finer grid.
    reference: &'static str,
    grids: Vec<usize>,
    errors: Vec<f64>,
    ratios: Vec<f64>,
    orders: Vec<f64>,
    residuals: Vec<f64>,
    iterations: Vec<usize>,
}

/// Dirichlet problem with exact solution `sin(πt) + 2` for `σ_n^{1/n}`.
pub fn manufactured(n: usize, intervals: usize) -> Result<(RadialProblem, Vec<f64>)> {
    let c = 15.0;
    let f = OperatorSpec::sigma_k_root(n, n)?;
    let exact = |t: f64| (PI * t).sin() + 2.0;
    let g = f.clone();
    let psi = move |t: f64| {
        let lam = radial_eigenvalues(PI * (PI * t).cos(), -PI * PI * (PI * t).sin(), t, c, n);
        g.value(&lam).map_or(f64::NAN, |v| v * (-exact(t)).exp())
    };
    let bc = RadialBoundary::Dirichlet {
        inner: exact(DEFAULT_T0),
        outer: exact(1.0),
    };
    let p = RadialProblem::new(n, intervals, DEFAULT_T0, c, psi, 1.0, f, bc)?;
    let ex = p.t.iter().map(|t| exact(*t)).collect();
    Ok((p, ex))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn report_convergence(spec: Option<PathBuf>, n: usize, grids: &[usize], tol: Option<f64>) -> Result<Status> {
    if grids.len() < 2 {
        bail!("--grids needs at least two sizes");
    }
    let mut errors = Vec::new();
    let mut residuals = Vec::new();
    let mut iterations = Vec::new();
    let reference = match spec {
        None => {
            for &m in grids {
                let (mut p, ex) = manufactured(n, m)?;
                if let Some(t) = tol {
                    p.tol = t;
                }
                let sol = solve_radial_dirichlet(&p)?;
                errors.push(sup_diff(&sol.phi, &ex));
                residuals.push(sol.report.residual);
                iterations.push(sol.report.iterations);
            }
            "exact"
        }
        Some(path) => {
            let base: RadialSpec = load_spec(&path)?;
            if !matches!(base.psi, PsiSpec::Constant(_)) {
                bail!("{}: field `psi`: grid refinement needs a constant psi", path.display());
            }
            if !matches!(base.boundary, RadialBoundary::Dirichlet { .. }) {
                bail!("{}: field `boundary`: grid refinement needs Dirichlet data", path.display());
            }
            if grids.windows(2).any(|g| g[1] != 2 * g[0]) {
                bail!("grid refinement against the next grid needs each size to double");
            }
            let mut sols = Vec::new();
            let mut fine = grids.to_vec();
            fine.push(2 * grids[grids.len() - 1]);
            for &m in &fine {
                let mut s = base.clone();
                s.intervals = m;
                if tol.is_some() {
                    s.tol = tol;
                }
                let sol = solve_radial_dirichlet(&s.into_problem()?)?;
                residuals.push(sol.report.residual);
                iterations.push(sol.report.iterations);
                sols.push(sol.phi);
            }
            residuals.pop();
            iterations.pop();
            for w in sols.windows(2) {
                let coarse: Vec<f64> = w[1].iter().step_by(2).cloned().collect();
                errors.push(sup_diff(&w[0], &coarse));
            }
            "self"
        }
    };
    let ratios: Vec<f64> = errors.windows(2).map(|e| e[0] / e[1]).collect();
    let orders: Vec<f64> = ratios
        .iter()
        .zip(grids.windows(2))
        .map(|(r, g)| r.ln() / (g[1] as f64 / g[0] as f64).ln())
        .collect();
    print_json(&ConvergenceReport {
        reference,
        grids: grids.to_vec(),
        errors,
        ratios,
        orders,
        residuals,
        iterations,
    })?;
    Ok(Status::Ok)
}
