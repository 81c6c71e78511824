//! `simt`: solver runs, scaling benchmarks and the CUDA/OpenCL vocabulary
//! table on the host-side SIMT simulator.
//!
//! Exit status: 0 on success (and, for `solve`, convergence), 1 when a solve
//! does not converge or breaks down, 2 on invalid input.

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use simt_core::bench::{self, BenchSpec, Workload};
use simt_core::matrix::{gen, load_matrix_market};
use simt_core::solvers::{FlowStep, DEFAULT_RESTART, DEFAULT_TOL};
use simt_core::terminology::terminology_lookup;
use simt_core::{solve, CsrMatrix, Error, Method, Runtime, Scalar, SolverConfig, SolverReport};

#[derive(Parser, Debug)]
#[command(name = "simt", version, about = "Host-side SIMT simulator with iterative solvers and scaling benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve A x = b for a generated or loaded matrix and a seeded random b.
    Solve(SolveArgs),
    /// Time the simulator at several worker counts and write CSV to stdout.
    Bench(BenchArgs),
    /// Translate between CUDA and OpenCL terms.
    Terms {
        /// e.g. "thread", "work-group"
        term: String,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Precision {
    F32,
    F64,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct MatrixSource {
    /// 5-point Laplacian on a K x K grid (n = K^2).
    #[arg(long, value_name = "K", value_parser = clap::value_parser!(u64).range(1..))]
    poisson: Option<u64>,
    /// Matrix Market coordinate file (real, general or symmetric).
    #[arg(long, value_name = "PATH")]
    mm: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Iteration cap [default: 10 n].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_iter: Option<u64>,
    /// GMRES restart length.
    #[arg(long, default_value_t = DEFAULT_RESTART as u64, value_parser = clap::value_parser!(u64).range(1..))]
    restart: u64,
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    precision: Precision,
    /// Seed for the random right-hand side and GEMM inputs.
    #[arg(long, default_value_t = gen::DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    source: MatrixSource,
    /// jacobi, gauss-seidel, cg, gmres or bicgstab.
    #[arg(long, default_value = "cg", value_parser = parse_method)]
    method: Method,
    /// Simulated cores.
    #[arg(long, env = "SIMT_WORKERS", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    workers: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
#[group(id = "workload", required = true, multiple = false, args = ["gemm", "poisson", "mm"])]
struct BenchArgs {
    /// Dense N x N matrix multiply.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    gemm: Option<u64>,
    /// Solves on the K x K 5-point Laplacian.
    #[arg(long, value_name = "K", value_parser = clap::value_parser!(u64).range(1..))]
    poisson: Option<u64>,
    /// Solves on a Matrix Market matrix.
    #[arg(long, value_name = "PATH")]
    mm: Option<PathBuf>,
    /// Comma-separated solver methods (solve workloads only).
    #[arg(long, value_delimiter = ',', default_value = "cg", value_parser = parse_method)]
    methods: Vec<Method>,
    /// Comma-separated worker counts.
    #[arg(long, env = "SIMT_WORKERS", value_delimiter = ',', default_value = "1", value_parser = clap::value_parser!(u64).range(1..))]
    workers: Vec<u64>,
    /// Repetitions per measurement; the median is reported.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    /// Skip the sequential reference rows.
    #[arg(long)]
    no_reference: bool,
    #[command(flatten)]
    common: Common,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.trim().parse::<Method>().map_err(|e| match e {
        Error::InvalidArgument(msg) => msg,
        other => other.to_string(),
    })
}

fn with_restart(m: Method, restart: u64) -> Method {
    match m {
        Method::Gmres { .. } => Method::Gmres {
            restart: restart as usize,
        },
        other => other,
    }
}

/// Errors split by exit status.
enum Failure {
    Input(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Breakdown { .. } => Failure::Solver(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

fn load<T: Scalar>(source: &MatrixSource) -> Result<(String, CsrMatrix<T>), Error> {
    match (source.poisson, &source.mm) {
        (Some(k), _) => Ok((format!("poisson{k}"), gen::gen_poisson(k as usize))),
        (None, Some(path)) => Ok((path.display().to_string(), load_matrix_market(path)?)),
        (None, None) => unreachable!("clap requires one matrix source"),
    }
}

fn print_report(source: &str, report: &SolverReport) {
    eprintln!("matrix      {source} (n = {})", report.n);
    eprintln!("method      {} [{}], {} worker(s)", report.method, report.kind, report.workers);
    if let Some(l) = &report.layout {
        eprintln!(
            "layout      {} block(s) x {} thread(s)",
            l.grid.volume(),
            l.block.volume()
        );
    }
    eprintln!("converged   {}", report.converged);
    eprintln!("iterations  {}", report.iterations);
    eprintln!("residual    {:e}", report.final_residual());
    for (step, d) in report.timings.iter() {
        eprintln!("  {:<13} {:>12.6} s", step.label(), d.as_secs_f64());
    }
    eprintln!("  {:<13} {:>12.6} s", "total", report.timings.total().as_secs_f64());
}

fn write_solve_csv(report: &SolverReport) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(io::stdout().lock());
    let mut header = vec![
        "method".to_string(),
        "n".into(),
        "kind".into(),
        "workers".into(),
        "converged".into(),
        "iterations".into(),
        "final_residual".into(),
    ];
    header.extend(FlowStep::ALL.iter().map(|s| format!("{}_seconds", s.label())));
    w.write_record(&header)?;
    let mut row = vec![
        report.method.to_string(),
        report.n.to_string(),
        report.kind.to_string(),
        report.workers.to_string(),
        report.converged.to_string(),
        report.iterations.to_string(),
        report.final_residual().to_string(),
    ];
    row.extend(report.timings.iter().map(|(_, d)| d.as_secs_f64().to_string()));
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}

fn run_solve<T: Scalar>(args: &SolveArgs) -> Result<bool, Failure> {
    if !(args.common.tol > 0.0) {
        return Err(Failure::Input(format!("--tol must be positive, got {}", args.common.tol)));
    }
    let (name, a) = load::<T>(&args.source)?;
    let b = gen::random_vector::<T>(a.n_rows(), -1.0, 1.0, args.common.seed);
    let cfg = SolverConfig {
        method: with_restart(args.method, args.common.restart),
        tol: args.common.tol,
        max_iter: args.common.max_iter.map(|m| m as usize),
    };
    let rt = Runtime::new(args.workers as usize);
    let (_, report) = solve(&rt, &a, &b, &cfg)?;
    print_report(&name, &report);
    write_solve_csv(&report).map_err(|e| Failure::Input(e.to_string()))?;
    Ok(report.converged)
}

fn run_bench<T: Scalar>(args: &BenchArgs) -> Result<(), Failure> {
    if !(args.common.tol > 0.0) {
        return Err(Failure::Input(format!("--tol must be positive, got {}", args.common.tol)));
    }
    let workload = match (args.gemm, args.poisson, &args.mm) {
        (Some(n), _, _) => Workload::Gemm { n: n as usize },
        (_, Some(k), _) => Workload::poisson(k as usize),
        (_, _, Some(path)) => Workload::Solve {
            id: path.display().to_string(),
            matrix: load_matrix_market::<T>(path)?,
        },
        _ => unreachable!("clap requires one workload"),
    };
    let spec = BenchSpec {
        workload,
        methods: args.methods.iter().map(|&m| with_restart(m, args.common.restart)).collect(),
        workers: args.workers.iter().map(|&p| p as usize).collect(),
        reps: args.reps as usize,
        seed: args.common.seed,
        tol: args.common.tol,
        max_iter: args.common.max_iter.map(|m| m as usize),
        include_reference: !args.no_reference,
    };
    eprintln!("# host: {}", bench::host_metadata());
    let records = bench::run_bench(&spec)?;
    bench::write_csv(&records, io::stdout().lock())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => match args.common.precision {
            Precision::F32 => run_solve::<f32>(args),
            Precision::F64 => run_solve::<f64>(args),
        }
        .map(|converged| if converged { 0 } else { 1 }),
        Command::Bench(args) => match args.common.precision {
            Precision::F32 => run_bench::<f32>(args),
            Precision::F64 => run_bench::<f64>(args),
        }
        .map(|()| 0),
        Command::Terms { term } => match terminology_lookup(term) {
            Ok(other) => {
                println!("{other}");
                Ok(0)
            }
            Err(e) => Err(Failure::Input(e.to_string())),
        },
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
