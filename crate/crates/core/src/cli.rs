//! Command-line front end. Exit codes: 0 ok, 1 usage, parse or contract
//! error, 2 soundness or structural failure (or a one-sided mismatch under
//! `--fail-on-mismatch`).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cutset::ceil_log2;
use crate::error::Error;
use crate::harness::oracle::Oracle;
use crate::harness::run::{
    bench_grid, differential_run_with, run_engine, BenchCell, BenchConfig, Engine, HarnessError,
    RunConfig, RunStats, FORMAT_VERSION,
};
use crate::harness::success::measure_success_rate;
use crate::harness::workload::{generate_workload, Mix, Op, Workload};
use crate::layered::{StackConfig, DEFAULT_C_FACTOR, DEFAULT_FAMILIES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "dynconn",
    version,
    about = "Fully dynamic connectivity with layered cutsets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replay a workload file, printing `1` or `0` per query.
    Run(RunArgs),
    /// Generate a random workload and replay it against the exact oracle.
    Fuzz(FuzzArgs),
    /// Measure how often one `outgoing_edge` call succeeds per cut size.
    Success(SuccessArgs),
    /// Compare cutset-operation counts of the layered and boosted structures.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Layered,
    Boosted,
    Oracle,
    Differential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchMode {
    Layered,
    Boosted,
}

#[derive(Debug, Args)]
pub struct StackArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_C_FACTOR)]
    pub c_factor: f64,
    #[arg(long, default_value_t = DEFAULT_FAMILIES)]
    pub families: usize,
    /// Cutset copies per layer in boosted mode [default: ceil(log2 n)]
    #[arg(long)]
    pub copies: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Workload file; `-` reads stdin.
    #[arg(long)]
    pub workload: PathBuf,
    /// Vertex count for files without an `n` header.
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, value_enum, default_value_t = Mode::Layered)]
    pub mode: Mode,
    #[command(flatten)]
    pub stack: StackArgs,
    #[arg(long, default_value_t = 0)]
    pub check_cadence: usize,
    /// Write the stats document here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub fail_on_mismatch: bool,
    /// Record wall-clock latencies in the stats.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    #[arg(long, default_value_t = 128)]
    pub n: u32,
    #[arg(long, default_value_t = 10_000)]
    pub ops: usize,
    #[arg(long, default_value_t = Mix::default())]
    pub mix: Mix,
    /// `differential` and `layered` fuzz the layered structure, `boosted`
    /// the baseline.
    #[arg(long, value_enum, default_value_t = Mode::Differential)]
    pub mode: Mode,
    #[command(flatten)]
    pub stack: StackArgs,
    /// Audit cadence [default: 1 for n <= 64, else 100]
    #[arg(long)]
    pub check_cadence: Option<usize>,
    /// Replay this file instead of generating a workload.
    #[arg(long, conflicts_with_all = ["ops", "mix"])]
    pub workload: Option<PathBuf>,
    /// Save the generated workload.
    #[arg(long)]
    pub save_workload: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub fail_on_mismatch: bool,
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct SuccessArgs {
    #[arg(long, default_value_t = 1024)]
    pub n: u32,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4, 16, 256])]
    pub cut_sizes: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_FAMILIES)]
    pub families: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long = "n", value_delimiter = ',', default_values_t = [256u32, 1024, 4096])]
    pub ns: Vec<u32>,
    #[arg(long = "mode", value_enum, value_delimiter = ',',
          default_values_t = [BenchMode::Layered, BenchMode::Boosted])]
    pub modes: Vec<BenchMode>,
    #[arg(long, default_value_t = 20_000)]
    pub ops: usize,
    #[arg(long, default_value_t = Mix::default())]
    pub mix: Mix,
    #[command(flatten)]
    pub stack: StackArgs,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Leave wall-clock quantiles out, making the report deterministic.
    #[arg(long)]
    pub no_timing: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn error(message: impl ToString) -> Self {
        Self {
            code: EXIT_ERROR,
            message: message.to_string(),
        }
    }

    fn fatal(message: impl ToString) -> Self {
        Self {
            code: EXIT_FAILURE,
            message: message.to_string(),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Impossible { .. } => Self::fatal(e),
            _ => Self::error(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::error(e)
    }
}

type Outcome = Result<(), Failure>;

fn default_copies(n: u32) -> usize {
    (ceil_log2(n) as usize).max(1)
}

fn stack_config(n: u32, s: &StackArgs) -> Result<StackConfig, Failure> {
    let c = StackConfig {
        n,
        seed: s.seed,
        c_factor: s.c_factor,
        families: s.families,
    };
    c.validate()?;
    if s.copies == Some(0) {
        return Err(Failure::error("--copies must be positive"));
    }
    Ok(c)
}

fn read_workload(path: &Path, default_n: Option<u32>) -> Result<Workload, Failure> {
    let text = if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin())
    } else {
        std::fs::read_to_string(path)
    }
    .map_err(|e| Failure::error(format!("{}: {e}", path.display())))?;
    Workload::parse_with_default_n(&text, default_n)
        .map_err(|e| Failure::error(format!("{}: {e}", path.display())))
}

fn emit(doc: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Outcome {
    match out {
        Some(p) => {
            std::fs::write(p, doc).map_err(|e| Failure::error(format!("{}: {e}", p.display())))
        }
        None => stdout.write_all(doc.as_bytes()).map_err(Failure::error),
    }
}

/// Non-zero for structural breakage, or for any miss under `fail_on_mismatch`.
fn verdict(stats: &RunStats, fail_on_mismatch: bool) -> Outcome {
    if stats.invariants.structural_violations > 0 {
        return Err(Failure::fatal(format!(
            "{} structural invariant violations",
            stats.invariants.structural_violations
        )));
    }
    if fail_on_mismatch && stats.queries.one_sided_mismatches > 0 {
        return Err(Failure::fatal(format!(
            "{} queries answered disconnected for connected vertices",
            stats.queries.one_sided_mismatches
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleStats {
    format_version: u32,
    mode: &'static str,
    n: u32,
    inserts: usize,
    deletes: usize,
    queries: usize,
    answered_true: u64,
}

fn replay_oracle(workload: &Workload, push: &mut dyn FnMut(bool)) -> Result<String, Failure> {
    let mut oracle = Oracle::new(workload.n)?;
    let mut stats = OracleStats {
        format_version: FORMAT_VERSION,
        mode: "oracle",
        n: workload.n,
        inserts: 0,
        deletes: 0,
        queries: 0,
        answered_true: 0,
    };
    for (index, &op) in workload.ops.iter().enumerate() {
        let answer =
            oracle
                .apply(op)
                .map_err(|source| HarnessError::Contract { index, op, source })?;
        match op {
            Op::Insert(..) => stats.inserts += 1,
            Op::Delete(..) => stats.deletes += 1,
            Op::Query(..) => stats.queries += 1,
        }
        if let Some(a) = answer {
            stats.answered_true += a as u64;
            push(a);
        }
    }
    Ok(serde_json::to_string_pretty(&stats).expect("stats serialize") + "\n")
}

fn cmd_run(args: &RunArgs, stdout: &mut dyn Write) -> Outcome {
    let workload = read_workload(&args.workload, args.n)?;
    let stack = stack_config(workload.n, &args.stack)?;
    let mut answers = Vec::new();
    let mut push = |a: bool| answers.extend_from_slice(if a { b"1\n" } else { b"0\n" });

    let result = match args.mode {
        Mode::Oracle => replay_oracle(&workload, &mut push).map(|doc| (doc, Ok(()))),
        mode => {
            let engine = match mode {
                Mode::Boosted => Engine::Boosted {
                    copies: args
                        .stack
                        .copies
                        .unwrap_or_else(|| default_copies(workload.n)),
                },
                _ => Engine::Layered,
            };
            let config = RunConfig {
                stack,
                engine,
                check_cadence: args.check_cadence,
                timing: args.timing,
            };
            let stats = if mode == Mode::Differential {
                differential_run_with(&workload, &config, &mut push)
            } else {
                run_engine(&workload, &config, &mut push)
            };
            stats
                .map(|s| (s.to_json(), verdict(&s, args.fail_on_mismatch)))
                .map_err(Failure::from)
        }
    };
    // Answers given before a failure are still printed.
    stdout.write_all(&answers).map_err(Failure::error)?;
    let (doc, outcome) = result?;
    if let Some(p) = &args.out {
        emit(&doc, Some(p), stdout)?;
    }
    outcome
}

fn cmd_fuzz(args: &FuzzArgs, stdout: &mut dyn Write) -> Outcome {
    let engine = match args.mode {
        Mode::Differential | Mode::Layered => Engine::Layered,
        Mode::Boosted => Engine::Boosted {
            copies: args.stack.copies.unwrap_or_else(|| default_copies(args.n)),
        },
        Mode::Oracle => {
            return Err(Failure::error(
                "fuzz compares against the oracle; pick another mode",
            ))
        }
    };
    let workload = match &args.workload {
        Some(p) => read_workload(p, Some(args.n))?,
        None => generate_workload(args.n, args.ops, args.mix, args.stack.seed)?,
    };
    if let Some(p) = &args.save_workload {
        std::fs::write(p, workload.to_text())
            .map_err(|e| Failure::error(format!("{}: {e}", p.display())))?;
    }
    let config = RunConfig {
        stack: stack_config(workload.n, &args.stack)?,
        engine,
        check_cadence: args
            .check_cadence
            .unwrap_or(if workload.n <= 64 { 1 } else { 100 }),
        timing: args.timing,
    };
    let stats = differential_run_with(&workload, &config, |_| {})?;
    emit(&stats.to_json(), args.out.as_deref(), stdout)?;
    verdict(&stats, args.fail_on_mismatch)
}

fn cmd_success(args: &SuccessArgs, stdout: &mut dyn Write) -> Outcome {
    if args.families == 0 {
        return Err(Failure::error("--families must be positive"));
    }
    let report = measure_success_rate(
        args.n,
        &args.cut_sizes,
        args.trials,
        args.seed,
        args.families,
    )
    .map_err(|e| match e {
        Error::CorruptState(_) => Failure::fatal(e),
        _ => Failure::error(e),
    })?;
    emit(&report.to_json(), args.out.as_deref(), stdout)
}

fn cmd_bench(args: &BenchArgs, stdout: &mut dyn Write) -> Outcome {
    if args.threads == 0 {
        return Err(Failure::error("--threads must be positive"));
    }
    for &n in &args.ns {
        stack_config(n, &args.stack)?;
    }
    let cells: Vec<BenchCell> = args
        .ns
        .iter()
        .flat_map(|&n| {
            args.modes.iter().map(move |m| BenchCell {
                n,
                engine: match m {
                    BenchMode::Layered => Engine::Layered,
                    BenchMode::Boosted => Engine::Boosted {
                        copies: args.stack.copies.unwrap_or_else(|| default_copies(n)),
                    },
                },
            })
        })
        .collect();
    let config = BenchConfig {
        ops: args.ops,
        mix: args.mix,
        seed: args.stack.seed,
        c_factor: args.stack.c_factor,
        families: args.stack.families,
        timing: !args.no_timing,
    };
    let report = bench_grid(&cells, &config, args.threads)?;
    emit(&report.to_json(), args.out.as_deref(), stdout)
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a, stdout),
        Command::Fuzz(a) => cmd_fuzz(a, stdout),
        Command::Success(a) => cmd_success(a, stdout),
        Command::Bench(a) => cmd_bench(a, stdout),
    };
    let _ = stdout.flush();
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}
