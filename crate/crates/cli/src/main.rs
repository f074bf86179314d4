//! `pxlap`: solve p(x)-Laplacian problems and write verification reports.

mod checks;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pxlap_core::exponent::{ExponentField, Profile};
use pxlap_core::grid::GridFunction;
use pxlap_core::lebesgue::{gradient_norm, luxemburg_norm, sobolev_norm, NormConfig};
use pxlap_core::solver::solve_dirichlet;
use rayon::prelude::*;

use crate::config::{CheckSpec, Overrides, RunConfig, Transform};

#[derive(Parser)]
#[command(name = "pxlap", version, about = "p(x)-Laplacian solver and inequality verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and run every listed check.
    Verify(ProblemArgs),
    /// Solve the configured problem and write the solution grid.
    Solve(ProblemArgs),
    /// Luxemburg norm of a PXGRID function.
    Norm(NormArgs),
    /// Barrier subsolution sweep over a list of rates.
    BarrierScan(BarrierArgs),
    /// Sample the structure conditions for a scaled p(x)-Laplacian flux.
    StructureCheck(StructureArgs),
}

/// Flags replace the matching config values.
#[derive(Args, Debug, Clone)]
struct ProblemArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report directory.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lower: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    upper: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    cells: Option<Vec<usize>>,
    /// Constant exponent.
    #[arg(long)]
    p: Option<f64>,
    /// Constant source term.
    #[arg(long, allow_hyphen_values = true)]
    rhs: Option<f64>,
    /// Constant boundary value.
    #[arg(long, allow_hyphen_values = true)]
    boundary: Option<f64>,
    #[arg(long)]
    reg_eps: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    continuation_from: Option<f64>,
}

impl ProblemArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            output: self.output.clone(),
            seed: self.seed,
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            cells: self.cells.clone(),
            p: self.p,
            rhs: self.rhs,
            boundary: self.boundary,
            reg_eps: self.reg_eps,
            tol: self.tol,
            max_iter: self.max_iter,
            continuation_from: self.continuation_from,
        }
    }

    /// Config with flags applied, plus the directory relative paths resolve against.
    fn load(&self) -> Result<(RunConfig, PathBuf)> {
        let (mut cfg, base) = match &self.config {
            Some(path) => {
                let cfg = RunConfig::load(path)?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (cfg, base)
            }
            None => (RunConfig::default(), PathBuf::from(".")),
        };
        if cfg.output.is_relative() {
            cfg.output = base.join(&cfg.output);
        }
        self.overrides().apply(&mut cfg)?;
        Ok((cfg, base))
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NormKind {
    Lebesgue,
    Gradient,
    Sobolev,
}

#[derive(Args, Debug)]
struct NormArgs {
    /// PXGRID file holding u.
    #[arg(long)]
    grid: PathBuf,
    /// Constant exponent.
    #[arg(long, conflicts_with = "exponent_grid", required_unless_present = "exponent_grid")]
    p: Option<f64>,
    /// PXGRID file of nodal exponents on the same lattice.
    #[arg(long)]
    exponent_grid: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "lebesgue")]
    kind: NormKind,
}

#[derive(Args, Debug)]
struct BarrierArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    center: Vec<f64>,
    #[arg(long)]
    delta: f64,
    /// Rates to scan, comma separated.
    #[arg(long = "mu", value_delimiter = ',', required = true)]
    mus: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    a_level: f64,
    #[arg(long, default_value_t = 32)]
    resolution: usize,
    #[arg(long = "scan-tol", default_value_t = 1e-10)]
    scan_tol: f64,
}

#[derive(Args, Debug)]
struct StructureArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    m0: f64,
    #[arg(long, default_value_t = 1.0)]
    flux_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    k1: f64,
    #[arg(long, value_enum)]
    transform: Option<TransformArg>,
    #[arg(long, default_value_t = 0.0)]
    b: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TransformArg {
    Sub,
    Super,
}

/// Setup problems exit with 2, failed checks with 1.
enum Failure {
    Setup(anyhow::Error),
    Checks(usize),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Setup(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(args) => verify(&args, None, "verify"),
        Command::Solve(args) => solve(&args).map_err(Failure::from),
        Command::Norm(args) => norm(&args).map_err(Failure::from),
        Command::BarrierScan(args) => {
            let spec = CheckSpec::Barrier {
                center: args.center.clone(),
                delta: args.delta,
                mus: args.mus.clone(),
                a_level: args.a_level,
                resolution: args.resolution,
                tol: args.scan_tol,
            };
            verify(&args.problem, Some(spec), "barrier-scan")
        }
        Command::StructureCheck(args) => {
            let spec = CheckSpec::Structure {
                alpha: args.alpha,
                m0: args.m0,
                flux_scale: args.flux_scale,
                k1: args.k1,
                transform: args.transform.map(|t| match t {
                    TransformArg::Sub => Transform::Sub,
                    TransformArg::Super => Transform::Super,
                }),
                b: args.b,
                s_levels: 5,
                radii: 13,
                directions: 4,
                node_stride: 1,
            };
            verify(&args.problem, Some(spec), "structure-check")
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Setup(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Checks(n)) => {
            eprintln!("error: {n} check(s) failed");
            ExitCode::from(1)
        }
    }
}

/// Run the configured checks, or just `only` when a subcommand supplies it.
fn verify(args: &ProblemArgs, only: Option<CheckSpec>, command: &str) -> Result<(), Failure> {
    let (mut cfg, base) = args.load()?;
    if let Some(spec) = only {
        cfg.checks = vec![spec];
    }
    output::ensure_dir(&cfg.output)?;
    output::write_metadata(&cfg.output, command, cfg.seed, args.config.as_deref())?;
    if cfg.checks.is_empty() {
        output::write_summary(&cfg.output, &[])?;
        return Ok(());
    }
    let Some(problem_cfg) = &cfg.problem else {
        return Err(anyhow::anyhow!("checks need a [problem] table or --lower/--upper/--cells/--p").into());
    };
    let problem = problem_cfg.build(&base)?;

    let solution = if cfg.checks.iter().any(CheckSpec::needs_solution) {
        let res = solve_dirichlet(&problem.spec).context("solving the problem")?;
        if !res.converged {
            eprintln!("warning: solver stopped at residual {:e} after {} iterations", res.residual, res.iterations);
        }
        output::write_json(&cfg.output.join(output::SOLVE_FILE), &res.summary())?;
        Some(res.solution)
    } else {
        None
    };

    let ctx = checks::Context {
        grid: &problem.grid,
        field: &problem.spec.field,
        rhs: &problem.spec.rhs,
        solution: solution.as_ref(),
        seed: cfg.seed,
        base: &base,
    };
    let outcomes: Vec<_> = cfg.checks.par_iter().map(|c| checks::run(c, &ctx)).collect();

    let mut rows = Vec::new();
    let mut failed = 0;
    for (index, (spec, out)) in cfg.checks.iter().zip(outcomes).enumerate() {
        match out {
            Ok(out) => {
                output::write_report(&cfg.output, index, spec, &out.result)?;
                rows.extend(out.rows);
            }
            Err(e) => {
                failed += 1;
                eprintln!("check {index} ({}) failed: {e:#}", spec.name());
            }
        }
    }
    output::write_summary(&cfg.output, &rows)?;
    if failed > 0 {
        return Err(Failure::Checks(failed));
    }
    Ok(())
}

fn solve(args: &ProblemArgs) -> Result<()> {
    let (cfg, base) = args.load()?;
    let Some(problem_cfg) = &cfg.problem else {
        bail!("solve needs a [problem] table or --lower/--upper/--cells/--p");
    };
    let problem = problem_cfg.build(&base)?;
    let res = solve_dirichlet(&problem.spec).context("solving the problem")?;
    output::ensure_dir(&cfg.output)?;
    output::write_metadata(&cfg.output, "solve", cfg.seed, args.config.as_deref())?;
    output::write_json(&cfg.output.join(output::SOLVE_FILE), &res.summary())?;
    res.solution.save(cfg.output.join("solution.pxgrid"))?;
    if !res.converged {
        bail!("solver did not converge: residual {:e} after {} iterations", res.residual, res.iterations);
    }
    Ok(())
}

fn norm(args: &NormArgs) -> Result<()> {
    let u = GridFunction::load(&args.grid).with_context(|| format!("reading {}", args.grid.display()))?;
    let field = match (&args.exponent_grid, args.p) {
        (Some(path), _) => {
            let p = GridFunction::load(path).with_context(|| format!("reading {}", path.display()))?;
            if !p.grid().same_lattice(u.grid()) {
                bail!("exponent grid does not match the lattice of u");
            }
            ExponentField::fit(Profile::Sampled(p), u.grid())?
        }
        (None, Some(p)) => ExponentField::constant(p)?,
        (None, None) => bail!("give --p or --exponent-grid"),
    };
    let cfg = NormConfig::default();
    let value = match args.kind {
        NormKind::Lebesgue => luxemburg_norm(&u, &field, &cfg)?,
        NormKind::Gradient => gradient_norm(&u, &field, &cfg)?,
        NormKind::Sobolev => sobolev_norm(&u, &field, &cfg)?,
    };
    let out = serde_json::json!({
        "kind": format!("{:?}", args.kind).to_lowercase(),
        "value": value,
        "p_minus": field.p1(),
        "p_plus": field.p2(),
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}
