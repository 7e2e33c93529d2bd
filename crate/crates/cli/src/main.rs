//! Command-line frontend: generate instances, solve them with the certified
//! approximation pipeline, validate schedules, benchmark over seed ranges,
//! and export the phase LP in MPS format.
//!
//! Exit codes: 0 on success, 1 when a schedule fails validation or a
//! certified bound is violated, 2 on usage errors (bad flags, malformed
//! files, a variant the instance does not fit).
//!
//! All output on stdout is deterministic for fixed flags; timing goes to
//! stderr. `MRFS_THREADS` caps the benchmark's worker threads.

use clap::{Args, Parser, Subcommand, ValueEnum};
use mrfs::model::validate::{validate_schedule, ValidationMode};
use mrfs::model::{
    generate::GeneratorConfig, generate_instance, load_instance, parse_schedule, rational_string,
    save_instance, schedule_json, Instance, MergedSchedule,
};
use mrfs::oracle::{self, OracleConfig, OracleError, ShuffleModel};
use mrfs::report::{to_canonical_json, RatioReport};
use mrfs::{merge, shuffle, Phase};
use num_rational::Rational64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "mrfs", version, about = "Certified scheduling of map/shuffle/reduce jobs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random instance and write it as canonical JSON.
    Generate(GenerateArgs),
    /// Solve an instance; prints the certification report, optionally
    /// writing the schedule to a file.
    Solve(SolveArgs),
    /// Validate a schedule file against an instance file.
    Validate(ValidateArgs),
    /// Solve a whole seed range, reporting per-seed ratios and a summary.
    Bench(BenchArgs),
    /// Export one phase's lower-bound linear program in MPS format.
    ExportLp(ExportLpArgs),
}

/// A problem variant to solve.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Problem {
    Mr,
    MsrSame,
    MsrSeparate,
}

impl Problem {
    fn mode(self) -> ValidationMode {
        match self {
            Problem::Mr => ValidationMode::Mr,
            Problem::MsrSame => ValidationMode::MsrSame,
            Problem::MsrSeparate => ValidationMode::MsrSeparate,
        }
    }
}

/// `N` for a single value or `LO..HI` / `LO..=HI` for a range.
#[derive(Clone, Copy)]
struct RangeArg(usize, usize);

impl FromStr for RangeArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |v: &str| -> Result<usize, String> {
            v.trim().parse().map_err(|_| format!("{v:?} is not a number"))
        };
        if let Some((lo, hi)) = s.split_once("..=") {
            return Ok(RangeArg(parse(lo)?, parse(hi)?));
        }
        if let Some((lo, hi)) = s.split_once("..") {
            let hi = parse(hi)?;
            if hi == 0 {
                return Err("empty range".into());
            }
            return Ok(RangeArg(parse(lo)?, hi - 1));
        }
        let v = parse(s)?;
        Ok(RangeArg(v, v))
    }
}

/// Seed ranges allow the same three spellings with u64 bounds.
#[derive(Clone, Copy)]
struct SeedRange(u64, u64);

impl FromStr for SeedRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |v: &str| -> Result<u64, String> {
            v.trim().parse().map_err(|_| format!("{v:?} is not a seed"))
        };
        if let Some((lo, hi)) = s.split_once("..=") {
            return Ok(SeedRange(parse(lo)?, parse(hi)?));
        }
        if let Some((lo, hi)) = s.split_once("..") {
            let hi = parse(hi)?;
            if hi == 0 {
                return Err("empty seed range".into());
            }
            return Ok(SeedRange(parse(lo)?, hi - 1));
        }
        let v = parse(s)?;
        Ok(SeedRange(v, v))
    }
}

/// `N` or `N/D`, e.g. `3/2`.
fn parse_ratio(s: &str) -> Result<Rational64, String> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: i64 = num.parse().map_err(|_| format!("{num:?} is not an integer"))?;
    let d: i64 = den.parse().map_err(|_| format!("{den:?} is not an integer"))?;
    if d == 0 {
        return Err("zero denominator".into());
    }
    Ok(Rational64::new(n, d))
}

#[derive(Args, Clone)]
struct GeneratorArgs {
    /// Number of jobs, `N` or `LO..=HI`.
    #[arg(long, default_value = "3")]
    jobs: RangeArg,
    /// Map tasks per job, `N` or `LO..=HI`.
    #[arg(long, default_value = "1..=3")]
    map_tasks: RangeArg,
    /// Reduce tasks per job, `N` or `LO..=HI`.
    #[arg(long, default_value = "1..=2")]
    reduce_tasks: RangeArg,
    /// Number of map processors.
    #[arg(long, default_value_t = 2)]
    map_procs: usize,
    /// Number of reduce processors.
    #[arg(long, default_value_t = 2)]
    reduce_procs: usize,
    /// Largest processing time (times are drawn from 1..=this).
    #[arg(long, default_value_t = 10)]
    time_max: i64,
    /// Largest shuffle volume (drawn from 0..=this); 0 means a plain
    /// two-phase instance without shuffle volumes.
    #[arg(long, default_value_t = 0)]
    shuffle_max: i64,
    /// Give the instance one input processor per reduce processor.
    #[arg(long)]
    input_procs: bool,
    /// Largest job weight (drawn from 1..=this).
    #[arg(long, default_value_t = 5)]
    weight_max: u64,
}

impl GeneratorArgs {
    fn config(&self, seed: u64) -> Result<GeneratorConfig, CliError> {
        let RangeArg(jlo, jhi) = self.jobs;
        if jlo == 0 || jlo > jhi {
            return Err(CliError::Usage("--jobs needs at least one job".into()));
        }
        let RangeArg(mlo, mhi) = self.map_tasks;
        let RangeArg(rlo, rhi) = self.reduce_tasks;
        if mlo == 0 || mlo > mhi || rlo == 0 || rlo > rhi {
            return Err(CliError::Usage("every job needs at least one task per phase".into()));
        }
        if self.map_procs == 0 || self.reduce_procs == 0 {
            return Err(CliError::Usage("processor pools cannot be empty".into()));
        }
        if self.time_max < 1 {
            return Err(CliError::Usage("--time-max must be at least 1".into()));
        }
        if self.shuffle_max < 0 || self.weight_max == 0 {
            return Err(CliError::Usage("--shuffle-max must be >= 0 and --weight-max >= 1".into()));
        }
        Ok(GeneratorConfig {
            seed,
            jobs: (jlo, jhi),
            map_tasks: (mlo, mhi),
            reduce_tasks: (rlo, rhi),
            map_procs: self.map_procs,
            reduce_procs: self.reduce_procs,
            proc_time: (1, self.time_max),
            shuffle_time: if self.shuffle_max > 0 { Some((0, self.shuffle_max)) } else { None },
            input_procs: self.input_procs,
            weight: (1, self.weight_max),
        })
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    gen: GeneratorArgs,
    /// Output file for the canonical instance JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Problem variant to solve.
    #[arg(long, value_enum)]
    problem: Problem,
    /// Completion-time class base (rational, > 1).
    #[arg(long, value_parser = parse_ratio, default_value = "3/2")]
    a: Rational64,
    /// Interval growth rate (rational, > 0).
    #[arg(long, value_parser = parse_ratio, default_value = "1/2")]
    delta: Rational64,
    /// Write the schedule JSON here (omit to skip).
    #[arg(long)]
    schedule_out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Schedule JSON file.
    #[arg(long)]
    schedule: PathBuf,
    /// Variant whose rules the schedule must satisfy.
    #[arg(long, value_enum)]
    mode: Problem,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

#[derive(Args)]
struct BenchArgs {
    /// Seeds to run: `N`, `LO..HI` or `LO..=HI`.
    #[arg(long)]
    seeds: SeedRange,
    #[command(flatten)]
    gen: GeneratorArgs,
    /// Problem variant to solve.
    #[arg(long, value_enum)]
    problem: Problem,
    #[arg(long, value_parser = parse_ratio, default_value = "3/2")]
    a: Rational64,
    #[arg(long, value_parser = parse_ratio, default_value = "1/2")]
    delta: Rational64,
    /// Run the exact oracle per seed with this leaf cap; rows whose search
    /// would exceed it show "skipped". Omit to skip the oracle everywhere.
    #[arg(long)]
    oracle_max_leaves: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LpPhase {
    Map,
    Reduce,
    /// The reduce phase with each task's shuffle volumes folded in.
    ShuffleReduce,
}

#[derive(Args)]
struct ExportLpArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Which phase's program to export.
    #[arg(long, value_enum)]
    phase: LpPhase,
    #[arg(long, value_parser = parse_ratio, default_value = "1/2")]
    delta: Rational64,
    /// Output MPS file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failures mapped to exit codes: usage errors exit 2, everything that
/// means "the pipeline ran but the result is bad" exits 1.
enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    fn report(self) -> ExitCode {
        match self {
            CliError::Usage(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
            CliError::Failure(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(1)
            }
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn failure<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Failure(e.to_string())
}

/// Solver errors split by nature: an instance that does not fit the variant
/// is a usage error; everything else is a pipeline failure.
fn solve_error(e: merge::SolveError) -> CliError {
    match e {
        merge::SolveError::WrongProblem(msg) => CliError::Usage(msg),
        other => CliError::Failure(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("MRFS_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Bench(args) => cmd_bench(args),
        Command::ExportLp(args) => cmd_export_lp(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let cfg = args.gen.config(args.seed)?;
    let inst = generate_instance(&cfg).map_err(usage)?;
    save_instance(&args.out, &inst).map_err(failure)?;
    Ok(())
}

fn run_solver(
    inst: &Instance,
    problem: Problem,
    a: Rational64,
    delta: Rational64,
) -> Result<(MergedSchedule, RatioReport), merge::SolveError> {
    match problem {
        Problem::Mr => merge::solve_mr(inst, a, delta),
        Problem::MsrSame => shuffle::solve_msr_same(inst, a, delta),
        Problem::MsrSeparate => shuffle::solve_msr_separate(inst, a, delta),
    }
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.instance).map_err(usage)?;
    let (sched, report) = run_solver(&inst, args.problem, args.a, args.delta).map_err(solve_error)?;
    if let Some(path) = &args.schedule_out {
        std::fs::write(path, schedule_json(&sched)).map_err(failure)?;
    }
    std::io::stdout().write_all(&to_canonical_json(&report)).map_err(failure)?;
    Ok(())
}

#[derive(serde::Serialize)]
struct ValidateOutput {
    valid: bool,
    violations: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective: Option<String>,
}

fn cmd_validate(args: ValidateArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.instance).map_err(usage)?;
    let bytes = std::fs::read(&args.schedule).map_err(usage)?;
    let sched = parse_schedule(&bytes).map_err(usage)?;
    let report = validate_schedule(&inst, &sched, args.mode.mode());
    let out = ValidateOutput {
        valid: report.is_valid(),
        violations: report.violations.iter().map(|v| v.to_string()).collect(),
        objective: report.objective.as_ref().map(rational_string),
    };
    std::io::stdout().write_all(&to_canonical_json(&out)).map_err(failure)?;
    if out.valid {
        Ok(())
    } else {
        Err(CliError::Failure("schedule is infeasible".into()))
    }
}

#[derive(serde::Serialize)]
struct BenchSummary {
    instances: usize,
    max_ratio_vs_lp: f64,
    mean_ratio_vs_lp: f64,
    oracle_rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_ratio_vs_opt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_ratio_vs_opt: Option<f64>,
}

#[derive(serde::Serialize)]
struct BenchOutput {
    rows: Vec<RatioReport>,
    summary: BenchSummary,
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let SeedRange(lo, hi) = args.seeds;
    if lo > hi {
        return Err(CliError::Usage("--seeds range is empty".into()));
    }
    let mut gen = args.gen.clone();
    if args.problem != Problem::Mr && gen.shuffle_max == 0 {
        return Err(CliError::Usage(
            "shuffle variants need --shuffle-max >= 1 so instances carry volumes".into(),
        ));
    }
    if args.problem == Problem::MsrSeparate {
        gen.input_procs = true;
    }
    if args.problem == Problem::Mr && gen.shuffle_max != 0 {
        return Err(CliError::Usage("--problem mr needs --shuffle-max 0".into()));
    }

    let t0 = Instant::now();
    let seeds: Vec<u64> = (lo..=hi).collect();
    let results: Vec<(u64, Result<RatioReport, merge::SolveError>)> = seeds
        .par_iter()
        .map(|&seed| {
            let row = (|| {
                let cfg = gen.config(seed).map_err(|_| {
                    merge::SolveError::WrongProblem("generator flags invalid".into())
                })?;
                let inst = generate_instance(&cfg)
                    .map_err(|e| merge::SolveError::Internal(e.to_string()))?;
                let (_, mut report) = run_solver(&inst, args.problem, args.a, args.delta)?;
                report.seed = Some(seed);
                if let Some(cap) = args.oracle_max_leaves {
                    attach_oracle(&inst, args.problem, cap, &mut report)?;
                }
                Ok(report)
            })();
            (seed, row)
        })
        .collect();
    eprintln!("bench: {} seeds in {:.3}s", seeds.len(), t0.elapsed().as_secs_f64());

    let mut rows = Vec::new();
    for (seed, row) in results {
        match row {
            Ok(report) => rows.push(report),
            Err(merge::SolveError::WrongProblem(msg)) => {
                return Err(CliError::Usage(format!("seed {seed}: {msg}")));
            }
            Err(e) => return Err(CliError::Failure(format!("seed {seed}: {e}"))),
        }
    }
    rows.sort_by_key(|r| r.seed);

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let lp_ratios: Vec<f64> = rows.iter().map(|r| r.empirical_ratio).collect();
    let opt_ratios: Vec<f64> = rows.iter().filter_map(|r| r.oracle_ratio).collect();
    let summary = BenchSummary {
        instances: rows.len(),
        max_ratio_vs_lp: lp_ratios.iter().copied().fold(0.0, f64::max),
        mean_ratio_vs_lp: mean(&lp_ratios),
        oracle_rows: opt_ratios.len(),
        max_ratio_vs_opt: if opt_ratios.is_empty() {
            None
        } else {
            Some(opt_ratios.iter().copied().fold(0.0, f64::max))
        },
        mean_ratio_vs_opt: if opt_ratios.is_empty() { None } else { Some(mean(&opt_ratios)) },
    };

    match args.format {
        Format::Json => {
            let out = BenchOutput { rows, summary };
            std::io::stdout().write_all(&to_canonical_json(&out)).map_err(failure)?;
        }
        Format::Tsv => {
            let mut out = String::new();
            out.push_str(
                "seed\tobjective\tlp_map\tlp_reduce\tcertified_bound\tratio_vs_lp\toracle\tratio_vs_opt\n",
            );
            for r in &rows {
                let seed = r.seed.map(|s| s.to_string()).unwrap_or_else(|| "-".into());
                let oracle = r.oracle_objective.clone().unwrap_or_else(|| "skipped".into());
                let vs_opt =
                    r.oracle_ratio.map(|x| x.to_string()).unwrap_or_else(|| "-".into());
                out.push_str(&format!(
                    "{seed}\t{}\t{}\t{}\t{}\t{}\t{oracle}\t{vs_opt}\n",
                    r.objective, r.lp_map, r.lp_reduce, r.certified_bound, r.empirical_ratio,
                ));
            }
            let opt_cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "max\t-\t-\t-\t-\t{}\t-\t{}\n",
                summary.max_ratio_vs_lp,
                opt_cell(summary.max_ratio_vs_opt)
            ));
            out.push_str(&format!(
                "mean\t-\t-\t-\t-\t{}\t-\t{}\n",
                summary.mean_ratio_vs_lp,
                opt_cell(summary.mean_ratio_vs_opt)
            ));
            print!("{out}");
        }
    }
    Ok(())
}

/// Runs the matching exact oracle and fills the oracle fields of the report.
/// A search that would exceed `cap` leaves them unset (the row reads
/// "skipped"); any other oracle failure aborts the bench.
fn attach_oracle(
    inst: &Instance,
    problem: Problem,
    cap: u64,
    report: &mut RatioReport,
) -> Result<(), merge::SolveError> {
    let cfg = OracleConfig { max_leaves: cap };
    let outcome = match problem {
        Problem::Mr => oracle::brute_force_mr(inst, &cfg),
        Problem::MsrSame => oracle::brute_force_msr(inst, ShuffleModel::Same, &cfg),
        Problem::MsrSeparate => oracle::brute_force_msr(inst, ShuffleModel::Separate, &cfg),
    };
    match outcome {
        Ok(res) => {
            let opt = res
                .objective
                .to_f64()
                .ok_or_else(|| merge::SolveError::Internal("optimum overflows f64".into()))?;
            report.oracle_objective = Some(rational_string(&res.objective));
            report.oracle_ratio = Some(report.objective_value / opt);
            Ok(())
        }
        Err(OracleError::CapHit { .. }) => Ok(()),
        Err(e @ OracleError::Unsupported(_)) => Err(merge::SolveError::Internal(e.to_string())),
    }
}

fn cmd_export_lp(args: ExportLpArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.instance).map_err(usage)?;
    let (inst, phase) = match args.phase {
        LpPhase::Map => (inst, Phase::Map),
        LpPhase::Reduce => (inst, Phase::Reduce),
        LpPhase::ShuffleReduce => {
            let folded = shuffle::fold_shuffle(&inst).map_err(solve_error)?;
            (folded, Phase::Reduce)
        }
    };
    let model = mrfs::lp::build_lp(&inst, phase, args.delta).map_err(failure)?;
    match &args.out {
        Some(path) => {
            let mut f = std::fs::File::create(path).map_err(failure)?;
            mrfs::lp::write_mps(&model, &mut f).map_err(failure)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            mrfs::lp::write_mps(&model, &mut lock).map_err(failure)?;
        }
    }
    Ok(())
}
