//! Command-line interface: solve, sweep, compare, bench, problem generation
//! and the invariant verification suite.
//!
//! Exit codes: 0 success, 1 invariant/bound violation or output failure,
//! 2 bad input or configuration.

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use std::path::{Path, PathBuf};

use crate::baseline::{compare_methods, run_bench};
use crate::io::{
    format_bench_report, format_compare_report, format_complex_vector_csv,
    format_convergence_report, format_eval_report, format_matrix_csv, format_vector_csv,
    parse_config_json, parse_matrix_csv, parse_vector_csv, ExperimentConfig,
};
use crate::operator_core::SymmetricOperator;
use crate::problems::{
    generate_problem, ExactSolution, Problem, ProblemKind, ProblemOperator, ProblemSpec,
};
use crate::shift::{convergence_sweep, solve_shift, ShiftSchedule};
use crate::unbounded::{evaluate_unbounded, unbounded_sweep, IterationSchedule};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "illposed",
    about = "Complex-shift regularization and stable evaluation of unbounded operators"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve (A + i a I) u = f for a real symmetric matrix A
    SolveShift {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long)]
        a: f64,
        /// Output CSV (two columns: re, im); stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve (A^T A + alpha I) u = A^T f
    SolveTikhonov {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Approximate A f from noisy data by the fixed-point iteration
    EvalUnbounded {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long)]
        delta: f64,
        /// Explicit iteration count (otherwise the schedule decides)
        #[arg(long)]
        n: Option<usize>,
        /// Iteration schedule as C,q (n = ceil(C * delta^-q))
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a delta-sweep described by a JSON experiment config
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Side-by-side shift vs Tikhonov comparison from a JSON config
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit modeled operation counts and measured timings per dimension
    Bench {
        /// Comma-separated dimensions, e.g. 64,128,256,512
        #[arg(long, default_value = "64,128,256,512")]
        dims: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test-problem utilities
    Problem {
        #[command(subcommand)]
        command: ProblemCommand,
    },
    /// Run the invariant suite; exit 0 iff every check passes
    Verify,
}

#[derive(Subcommand, Debug)]
enum ProblemCommand {
    /// Generate a canonical test problem and write its matrix (and
    /// optionally data/solution vectors) as CSV
    Generate(GenerateArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// hilbert | gauss_deconv | second_derivative_sym | first_derivative_rect | rank_deficient_sym
    #[arg(long)]
    kind: String,
    #[arg(long)]
    dim: usize,
    /// Kernel width for gauss_deconv
    #[arg(long)]
    width: Option<f64>,
    /// Null-space dimension for rank_deficient_sym
    #[arg(long)]
    null_dim: Option<usize>,
    /// Seed for the random orthogonal factor of rank_deficient_sym
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// ones | smooth_sine
    #[arg(long, default_value = "smooth_sine")]
    exact: String,
    /// Matrix output path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional data-vector output path
    #[arg(long)]
    rhs_out: Option<PathBuf>,
    /// Optional exact-solution output path
    #[arg(long)]
    solution_out: Option<PathBuf>,
}

/// Runs the CLI on explicit arguments and returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version through this path as well
            let code = if e.use_stderr() {
                EXIT_BAD_INPUT
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn bad_input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_BAD_INPUT,
            message: message.into(),
        }
    }
    fn violation(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VIOLATION,
            message: message.into(),
        }
    }
}

impl From<crate::error::Error> for Failure {
    fn from(e: crate::error::Error) -> Self {
        Failure::bad_input(e.to_string())
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::bad_input(format!("cannot read {}: {e}", path.display())))
}

fn read_matrix(path: &Path) -> Result<DMatrix<f64>, Failure> {
    parse_matrix_csv(&read_file(path)?)
        .map_err(|e| Failure::bad_input(format!("{}: {e}", path.display())))
}

fn read_vector(path: &Path) -> Result<DVector<f64>, Failure> {
    parse_vector_csv(&read_file(path)?)
        .map_err(|e| Failure::bad_input(format!("{}: {e}", path.display())))
}

fn read_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    parse_config_json(&read_file(path)?)
        .map_err(|e| Failure::bad_input(format!("{}: {e}", path.display())))
}

/// Writes to the path, or to stdout when no path is given. Write failures
/// take the invariant-violation exit path.
fn emit(out: Option<&Path>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Failure::violation(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn parse_schedule_arg(text: &str) -> Result<(f64, f64), Failure> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Failure::bad_input(format!(
            "schedule must be C,exponent; got `{text}`"
        )));
    }
    let c = parts[0]
        .trim()
        .parse::<f64>()
        .map_err(|e| Failure::bad_input(format!("bad schedule coefficient: {e}")))?;
    let q = parts[1]
        .trim()
        .parse::<f64>()
        .map_err(|e| Failure::bad_input(format!("bad schedule exponent: {e}")))?;
    Ok((c, q))
}

fn build_problem(config: &ExperimentConfig) -> Result<Problem, Failure> {
    generate_problem(&config.problem).map_err(Failure::from)
}

fn dispatch(command: Command) -> Result<i32, Failure> {
    match command {
        Command::SolveShift {
            matrix,
            rhs,
            a,
            out,
        } => {
            let op = SymmetricOperator::new(read_matrix(&matrix)?)?;
            let f = read_vector(&rhs)?;
            let u = solve_shift(&op, &f, a)?;
            emit(out.as_deref(), &format_complex_vector_csv(&u))?;
            Ok(EXIT_OK)
        }
        Command::SolveTikhonov {
            matrix,
            rhs,
            alpha,
            out,
        } => {
            let m = read_matrix(&matrix)?;
            let f = read_vector(&rhs)?;
            let u = crate::baseline::solve_tikhonov(&m, &f, alpha)?;
            emit(out.as_deref(), &format_vector_csv(&u))?;
            Ok(EXIT_OK)
        }
        Command::EvalUnbounded {
            matrix,
            rhs,
            delta,
            n,
            schedule,
            out,
        } => {
            let m = read_matrix(&matrix)?;
            let op = crate::operator_core::GeneralOperator::new(m)?;
            let f = read_vector(&rhs)?;
            let sched = match schedule {
                Some(text) => {
                    let (c, q) = parse_schedule_arg(&text)?;
                    IterationSchedule::new(c, q)?
                }
                None => IterationSchedule::default(),
            };
            let report = evaluate_unbounded(&op, &f, delta, &sched, n, None, None)?;
            emit(out.as_deref(), &format_vector_csv(&report.v_delta))?;
            Ok(EXIT_OK)
        }
        Command::Sweep { config, out } => {
            let cfg = read_config(&config)?;
            let problem = build_problem(&cfg)?;
            let out = resolve_out(out, &cfg);
            match &problem.operator {
                ProblemOperator::Symmetric(op) => {
                    let schedule =
                        ShiftSchedule::new(cfg.shift_schedule.c, cfg.shift_schedule.exponent)?;
                    let report = convergence_sweep(
                        op,
                        &problem.f,
                        Some(&problem.y_exact),
                        &cfg.deltas,
                        &schedule,
                        cfg.seed,
                    )?;
                    let violations = report
                        .rows
                        .iter()
                        .filter(|r| r.error > r.bound_eq4 + 1e-10 * (1.0 + problem.y_exact.norm()))
                        .count();
                    emit(out.as_deref(), &format_convergence_report(&report))?;
                    if violations > 0 {
                        eprintln!("error: {violations} sweep row(s) exceeded the error bound");
                        return Ok(EXIT_VIOLATION);
                    }
                    Ok(EXIT_OK)
                }
                ProblemOperator::General(op) => {
                    let schedule = IterationSchedule::new(
                        cfg.iteration_schedule.c,
                        cfg.iteration_schedule.exponent,
                    )?;
                    let rows = unbounded_sweep(op, &problem.f, &cfg.deltas, &schedule, cfg.seed)?;
                    let af_norm = problem.y_exact.norm();
                    let violations = rows
                        .iter()
                        .filter(|r| r.error > r.bound_eq9 + 1e-8 * (1.0 + af_norm))
                        .count();
                    emit(out.as_deref(), &format_eval_report(&rows))?;
                    if violations > 0 {
                        eprintln!("error: {violations} sweep row(s) exceeded the error bound");
                        return Ok(EXIT_VIOLATION);
                    }
                    Ok(EXIT_OK)
                }
            }
        }
        Command::Compare { config, out } => {
            let cfg = read_config(&config)?;
            let problem = build_problem(&cfg)?;
            let out = resolve_out(out, &cfg);
            let op = match &problem.operator {
                ProblemOperator::Symmetric(op) => op,
                ProblemOperator::General(_) => {
                    return Err(Failure::bad_input(
                        "compare requires a selfadjoint problem kind",
                    ));
                }
            };
            let schedule = ShiftSchedule::new(cfg.shift_schedule.c, cfg.shift_schedule.exponent)?;
            let report = compare_methods(
                op,
                &problem.f,
                Some(&problem.y_exact),
                &cfg.deltas,
                &schedule,
                cfg.seed,
            )?;
            emit(out.as_deref(), &format_compare_report(&report))?;
            Ok(EXIT_OK)
        }
        Command::Bench { dims, out } => {
            let parsed: Result<Vec<usize>, _> =
                dims.split(',').map(|t| t.trim().parse::<usize>()).collect();
            let dims = parsed.map_err(|e| Failure::bad_input(format!("bad --dims: {e}")))?;
            if dims.is_empty() || dims.contains(&0) {
                return Err(Failure::bad_input("--dims must be positive integers"));
            }
            let rows = run_bench(&dims)?;
            emit(out.as_deref(), &format_bench_report(&rows))?;
            Ok(EXIT_OK)
        }
        Command::Problem {
            command: ProblemCommand::Generate(args),
        } => {
            let kind: ProblemKind = args
                .kind
                .parse()
                .map_err(|e: crate::error::Error| Failure::bad_input(e.to_string()))?;
            let exact = match args.exact.as_str() {
                "ones" => ExactSolution::Ones,
                "smooth_sine" => ExactSolution::SmoothSine,
                other => {
                    return Err(Failure::bad_input(format!(
                        "unknown exact solution `{other}` (expected ones or smooth_sine)"
                    )));
                }
            };
            let spec = ProblemSpec {
                kind,
                dim: args.dim,
                dim2: None,
                width: args.width,
                null_dim: args.null_dim,
                seed: args.seed,
                exact_solution: exact,
            };
            let problem = generate_problem(&spec)?;
            emit(
                args.out.as_deref(),
                &format_matrix_csv(problem.operator.entries()),
            )?;
            if let Some(path) = args.rhs_out.as_deref() {
                emit(Some(path), &format_vector_csv(&problem.f))?;
            }
            if let Some(path) = args.solution_out.as_deref() {
                emit(Some(path), &format_vector_csv(&problem.y_exact))?;
            }
            Ok(EXIT_OK)
        }
        Command::Verify => {
            let failures = crate::verify::run_verification(&mut std::io::stdout());
            if failures == 0 {
                Ok(EXIT_OK)
            } else {
                Ok(EXIT_VIOLATION)
            }
        }
    }
}

fn resolve_out(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> Option<PathBuf> {
    flag.or_else(|| cfg.output.as_ref().map(PathBuf::from))
}
