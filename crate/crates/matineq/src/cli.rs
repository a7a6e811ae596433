//! Command-line front end: `solve`, `check` and `gallery`.
//!
//! Exit codes: 0 success, 1 the solver (or a check) did not reach the
//! requested accuracy, 2 bad input.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use matineq_core::config::{EqualityMode, PrecondKind, SolverKind, StopRule};
use matineq_core::driver::dimacs_errors;
use matineq_core::gallery;
use matineq_core::model::ProblemSpec;
use matineq_core::{solve, SolveStatus, SolverConfig};

use crate::error::IoError;
use crate::instance::{load_problem, write_instance, CorrSource, Instance, Named};
use crate::report::{read_report, write_report};
use crate::sdpa::write_sdpa;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_OPTIMAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "matineq", version, about = "Penalty/barrier solver for linear, bilinear and nonlinear semidefinite programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve an SDPA file or an instance description and write a JSON report.
    Solve(SolveArgs),
    /// Recompute the DIMACS errors of a report against a linear problem.
    Check {
        problem: PathBuf,
        report: PathBuf,
        /// Largest acceptable error.
        #[arg(long, default_value_t = 1e-7)]
        precision: f64,
    },
    /// Write a built-in problem as an SDPA file or an instance description.
    Gallery {
        #[command(subcommand)]
        name: GalleryName,
        /// Output file; standard output when omitted.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SolveArgs {
    file: PathBuf,
    /// DIMACS error target used with --dimacs.
    #[arg(long, value_name = "DELTA")]
    precision: Option<f64>,
    #[arg(long, value_enum, default_value_t = SolverArg::Direct)]
    solver: SolverArg,
    #[arg(long, value_enum, default_value_t = PrecondArg::Diag)]
    precond: PrecondArg,
    #[arg(long, value_name = "N")]
    max_outer: Option<usize>,
    #[arg(long, value_name = "N")]
    max_newton: Option<usize>,
    /// Require the DIMACS errors to meet the precision before stopping.
    #[arg(long)]
    dimacs: bool,
    /// Outer stopping rule.
    #[arg(long, value_enum, default_value_t = StopArg::Objective)]
    stop: StopArg,
    /// Treatment of equality constraints.
    #[arg(long, value_enum, default_value_t = EqualityArg::Direct)]
    equalities: EqualityArg,
    /// Print the iteration table to standard error.
    #[arg(long)]
    trace: bool,
    /// Report file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SolverArg {
    Direct,
    Cg,
    Hybrid,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PrecondArg {
    None,
    Diag,
    Lbfgs,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum StopArg {
    Objective,
    Kkt,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum EqualityArg {
    Direct,
    Split,
}

#[derive(Subcommand, Debug)]
enum GalleryName {
    /// Nearest correlation matrix.
    NearestCorr(CorrArgs),
    /// Nearest correlation matrix with a condition number bound.
    CorrCond {
        #[arg(long)]
        kappa: f64,
        #[command(flatten)]
        corr: CorrArgs,
    },
    /// Nonnegative least-squares cubic spline through noisy cosine samples.
    Spline {
        #[arg(long, default_value_t = 500)]
        points: usize,
        #[arg(long, default_value_t = 8)]
        intervals: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Stabilizing state feedback with a quadratic cost bound.
    Lq,
    /// Random linear SDP, primal and dual strictly feasible.
    RandomLsdp {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        vars: usize,
        /// Block sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "3,2")]
        blocks: Vec<usize>,
    },
    /// Linear SDP with badly conditioned Newton systems.
    IllLsdp {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 120)]
        vars: usize,
        #[arg(long, default_value_t = 12)]
        dim: usize,
        #[arg(long, default_value_t = 4.0)]
        decades: f64,
    },
}

#[derive(Args, Debug)]
struct CorrArgs {
    /// Size of a generated matrix; the built-in 6×6 example when omitted.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, requires = "n")]
    noise: Option<f64>,
    #[arg(long, requires = "n")]
    seed: Option<u64>,
}

impl From<CorrArgs> for CorrSource {
    fn from(a: CorrArgs) -> Self {
        CorrSource { n: a.n, noise: a.noise, seed: a.seed }
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Check { problem, report, precision } => run_check(&problem, &report, precision),
        Command::Gallery { name, out } => run_gallery(name, out.as_deref()),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read { path: path.to_path_buf(), source })
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), IoError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| IoError::Write { path: path.to_path_buf(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn config(a: &SolveArgs) -> Result<SolverConfig, IoError> {
    let mut cfg = SolverConfig {
        solver: match a.solver {
            SolverArg::Direct => SolverKind::Direct,
            SolverArg::Cg => SolverKind::Cg,
            SolverArg::Hybrid => SolverKind::Hybrid,
        },
        precond: match a.precond {
            PrecondArg::None => PrecondKind::None,
            PrecondArg::Diag => PrecondKind::Diagonal,
            PrecondArg::Lbfgs => PrecondKind::Lbfgs,
        },
        stop_rule: match a.stop {
            StopArg::Objective => StopRule::Objective,
            StopArg::Kkt => StopRule::Kkt,
        },
        equality_mode: match a.equalities {
            EqualityArg::Direct => EqualityMode::Direct,
            EqualityArg::Split => EqualityMode::Split,
        },
        dimacs: a.dimacs,
        ..SolverConfig::default()
    };
    if let Some(d) = a.precision {
        cfg.delta_dimacs = d;
    }
    if let Some(n) = a.max_outer {
        cfg.max_outer = n;
    }
    if let Some(n) = a.max_newton {
        cfg.max_newton = n;
    }
    cfg.check().map_err(|field| IoError::Instance(format!("invalid option value for {field}")))?;
    Ok(cfg)
}

fn run_solve(a: SolveArgs) -> Result<i32, IoError> {
    let cfg = config(&a)?;
    let spec = load_problem(&read(&a.file)?, &a.file)?;
    let r = solve(&spec, &cfg);
    if a.trace {
        eprintln!("{:>4} {:>16} {:>10} {:>6} {:>7}", "it", "obj", "opt", "Nwt", "CG");
        for row in &r.trace {
            eprintln!("{row}");
        }
    }
    emit(&write_report(&r), a.out.as_deref())?;
    let dimacs = r.dimacs.map(|d| format!(", DIMACS max {:.2e}", d.max())).unwrap_or_default();
    eprintln!(
        "{}: objective {:.10e}, {} outer, {} Newton, {} CG{dimacs}",
        status_word(&r.status),
        r.objective,
        r.outer_iterations,
        r.stats.newton_steps,
        r.stats.cg_steps
    );
    Ok(match r.status {
        SolveStatus::Optimal | SolveStatus::Feasible => EXIT_OK,
        _ => EXIT_NOT_OPTIMAL,
    })
}

fn status_word(s: &SolveStatus) -> String {
    match s {
        SolveStatus::Optimal => "optimal".into(),
        SolveStatus::Feasible => "feasible".into(),
        SolveStatus::MaxIterations => "iteration limit".into(),
        SolveStatus::Restarted(n) => format!("gave up after {n} restarts"),
        SolveStatus::Failed(why) => format!("failed ({why})"),
    }
}

fn run_check(problem: &Path, report: &Path, precision: f64) -> Result<i32, IoError> {
    let ProblemSpec::Linear(p) = load_problem(&read(problem)?, problem)? else {
        return Err(IoError::Instance("DIMACS errors are defined for linear SDPs only".into()));
    };
    let r = read_report(&read(report)?)?;
    let e = dimacs_errors(&p, &r.x, &r.u)?;
    for (name, v) in [("err1", e.err1), ("err2", e.err2), ("err3", e.err3), ("err4", e.err4), ("err5", e.err5), ("err6", e.err6)] {
        println!("{name} {v:.3e}");
    }
    Ok(if e.max() <= precision { EXIT_OK } else { EXIT_NOT_OPTIMAL })
}

fn run_gallery(name: GalleryName, out: Option<&Path>) -> Result<i32, IoError> {
    let text = match name {
        GalleryName::NearestCorr(c) => write_instance(&Instance::Named(Named::NearestCorr { source: c.into() })),
        GalleryName::CorrCond { kappa, corr } => {
            let named = Named::CorrCond { kappa, source: corr.into() };
            named.build()?;
            write_instance(&Instance::Named(named))
        }
        GalleryName::Spline { points, intervals, seed } => {
            let named = Named::Spline { points, intervals, seed };
            named.build()?;
            write_instance(&Instance::Named(named))
        }
        GalleryName::Lq => write_instance(&Instance::Bmi { data: gallery::build_lq_feedback() }),
        GalleryName::RandomLsdp { seed, vars, blocks } => {
            if vars == 0 || blocks.is_empty() || blocks.contains(&0) {
                return Err(IoError::Instance("need at least one variable and nonempty blocks".into()));
            }
            write_sdpa(&gallery::random_lsdp(seed, vars, &blocks))
        }
        GalleryName::IllLsdp { seed, vars, dim, decades } => {
            if vars == 0 || dim == 0 || !(decades >= 0.0) {
                return Err(IoError::Instance("need positive sizes and nonnegative decades".into()));
            }
            write_sdpa(&gallery::ill_conditioned_lsdp(seed, vars, dim, decades))
        }
    };
    emit(&text, out)?;
    Ok(EXIT_OK)
}
