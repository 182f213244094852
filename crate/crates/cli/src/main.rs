//! `conekit` batch front end. Every subcommand prints one JSON report on
//! stdout; data artifacts go to `--out`. Exit codes: 0 success, 1 usage or
//! configuration error, 2 audit violations.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use commands::{Status, VerifyArgs};

#[derive(Parser)]
#[command(name = "conekit", version, about = "Cones, concave operators and admissible solvers")]
struct Cli {
    /// Input spec (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    spec: Option<PathBuf>,
    /// Output artifact (CSV or binary, depending on the subcommand).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 10_000)]
    samples: usize,
    /// Tolerance override (cone membership or solver residual).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cone invariants and linear transforms.
    #[command(subcommand)]
    Cone(ConeCmd),
    /// Operator audits.
    #[command(subcommand)]
    Op(OpCmd),
    /// Bordered Hermitian eigenvalue localization.
    #[command(subcommand)]
    Eig(EigCmd),
    /// Curvature equation reductions.
    #[command(subcommand)]
    Curvature(CurvatureCmd),
    /// Admissible Newton solvers.
    #[command(subcommand)]
    Solve(SolveCmd),
    /// Grid refinement studies.
    #[command(subcommand)]
    Report(ReportCmd),
}

#[derive(Args)]
struct ConeArg {
    /// Gårding cone Γ_K in dimension N.
    #[arg(long, num_args = 2, value_names = ["K", "N"])]
    garding: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum ConeCmd {
    /// κ, ϱ and type of a cone.
    Info(ConeArg),
    /// Image of a cone under the map P_ρ.
    Transform {
        #[command(flatten)]
        cone: ConeArg,
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
    },
}

#[derive(Subcommand)]
enum OpCmd {
    /// Structural audit of the operator in --spec.
    Audit,
    /// Lower bound for the partial uniform ellipticity constant.
    Theta(ConeArg),
}

#[derive(Subcommand)]
enum EigCmd {
    /// Localize the eigenvalues of the bordered matrix in --spec.
    Localize {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        refined: bool,
    },
    /// Randomized check of localization claims against a dense eigensolver.
    Verify {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        eps: f64,
        /// Corner entry is threshold + margin·U(0,1).
        #[arg(long, default_value_t = 1.0)]
        margin: f64,
        #[arg(long)]
        refined: bool,
    },
}

#[derive(Subcommand)]
enum CurvatureCmd {
    /// Reduce a curvature equation to standard form.
    Reduce,
}

#[derive(Subcommand)]
enum SolveCmd {
    /// Radial problem on an annulus; CSV `t,phi` to --out.
    Radial,
    /// Flat 2-torus problem; header line plus little-endian f64 to --out.
    Torus,
}

#[derive(Subcommand)]
enum ReportCmd {
    /// Error and observed order across grids.
    Convergence {
        /// Dimension of the built-in manufactured problem (ignored with --spec).
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [64, 128, 256])]
        grids: Vec<usize>,
    },
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("CONEKIT_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("CONEKIT_THREADS must be a positive integer, got {v:?}"))?;
        anyhow::ensure!(n > 0, "CONEKIT_THREADS must be a positive integer, got 0");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn require_spec(spec: &Option<PathBuf>) -> Result<&PathBuf> {
    spec.as_ref().context("--spec PATH is required")
}

fn run(cli: Cli) -> Result<Status> {
    configure_threads()?;
    let out = cli.out.as_deref();
    match cli.command {
        Command::Cone(cmd) => match cmd {
            ConeCmd::Info(c) => {
                let cone = commands::resolve_cone(c.garding.as_deref(), cli.spec.as_deref(), cli.tol)?;
                commands::cone_info(&cone)
            }
            ConeCmd::Transform { cone, rho } => {
                let cone = commands::resolve_cone(cone.garding.as_deref(), cli.spec.as_deref(), cli.tol)?;
                commands::cone_transform(&cone, rho)
            }
        },
        Command::Op(cmd) => match cmd {
            OpCmd::Audit => commands::op_audit(require_spec(&cli.spec)?, cli.samples, cli.seed, out),
            OpCmd::Theta(c) => {
                let cone = commands::resolve_cone(c.garding.as_deref(), cli.spec.as_deref(), cli.tol)?;
                commands::op_theta(&cone)
            }
        },
        Command::Eig(cmd) => match cmd {
            EigCmd::Localize { eps, refined } => commands::eig_localize(require_spec(&cli.spec)?, eps, refined),
            EigCmd::Verify {
                n,
                trials,
                eps,
                margin,
                refined,
            } => {
                let args = VerifyArgs {
                    n,
                    trials: trials.unwrap_or(cli.samples),
                    eps,
                    seed: cli.seed,
                    margin,
                    refined,
                };
                commands::eig_verify(&args, out)
            }
        },
        Command::Curvature(CurvatureCmd::Reduce) => commands::curvature_reduce(require_spec(&cli.spec)?),
        Command::Solve(cmd) => match cmd {
            SolveCmd::Radial => commands::solve_radial(require_spec(&cli.spec)?, cli.tol, out),
            SolveCmd::Torus => commands::solve_torus_cmd(require_spec(&cli.spec)?, cli.tol, out),
        },
        Command::Report(ReportCmd::Convergence { n, grids }) => {
            commands::report_convergence(cli.spec, n, &grids, cli.tol)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = run(cli);
    if let Err(e) = &result {
        eprintln!("error: {e:#}");
    }
    ExitCode::from(exit_code(&result))
}

fn exit_code(r: &Result<Status>) -> u8 {
    match r {
        Ok(Status::Ok) => 0,
        Ok(Status::Violations) => 2,
        Err(_) => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Ok(Status::Ok)), 0);
        assert_eq!(exit_code(&Ok(Status::Violations)), 2);
        assert_eq!(exit_code(&Err(anyhow::anyhow!("bad spec"))), 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
