//! `dpn`: verify, search for and prove facts about deficient perfect numbers.
//!
//! Exit status: 0 success, 1 check failed or negative answer, 2 usage error,
//! 3 inconclusive (budget exhausted or search stopped early), 4 invalid
//! artifact.

mod render;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dpn_core::arith::{order_table, DecimalMode};
use dpn_core::classify::classify;
use dpn_core::eliminator::{assess, check_trace, eliminate, prove, CaseSpec, ProofTrace, Target};
use dpn_core::envelope::{peek_kind, Envelope, Metadata, KIND_PROOF_TRACE, KIND_SEARCH_REPORT};
use dpn_core::search::{
    merge_reports, run_search, OmegaTarget, Parity, Partition, RunOptions, SearchJob, SearchReport,
};
use num_bigint::BigUint;

use render::Decimals;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;
const EXIT_ARTIFACT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "dpn",
    version,
    about = "Deficient perfect numbers: verification, search and case elimination"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check whether n is deficient perfect; exit 0 iff it is.
    Verify { n: String },
    /// Print the full classification of n as JSON.
    Classify { n: String },
    /// Enumerate deficient perfect numbers with a given number of prime factors.
    Search(SearchArgs),
    /// Merge search reports of disjoint parts into one.
    Merge {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the case eliminator and write its trace.
    Prove(ProveArgs),
    /// Re-check every step of a stored trace from its witnesses alone.
    CheckTrace { path: PathBuf },
    /// Multiplicative orders of primes modulo each modulus.
    Table {
        #[arg(long, value_delimiter = ',', required = true)]
        primes: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true)]
        moduli: Vec<u64>,
    },
    /// Render a trace or search artifact as text.
    Report {
        path: PathBuf,
        /// List every eliminated leaf of a trace.
        #[arg(long)]
        leaves: bool,
        #[command(flatten)]
        decimals: DecimalArgs,
    },
}

#[derive(Args)]
struct SearchArgs {
    /// Number of distinct prime factors, or "any".
    #[arg(long, default_value = "4")]
    k: OmegaTarget,
    /// Upper bound; accepts forms like 100000000, 1e10 or 2.5e9.
    #[arg(long, value_parser = parse_bound)]
    bound: u64,
    /// Only odd n (default).
    #[arg(long, conflicts_with = "all")]
    odd: bool,
    /// Odd and even n.
    #[arg(long)]
    all: bool,
    /// Try every exponent instead of only even ones for odd searches.
    #[arg(long)]
    no_even_filter: bool,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, env = "DPN_CHECKPOINT_DIR")]
    checkpoint_dir: Option<PathBuf>,
    /// Name of the checkpoint file; defaults to a prefix of the job hash.
    #[arg(long)]
    checkpoint_id: Option<String>,
    /// Continue from the checkpoint instead of starting over.
    #[arg(long, requires = "checkpoint_dir")]
    resume: bool,
    /// Split the job into this many parts...
    #[arg(long, requires = "part")]
    split: Option<u32>,
    /// ...and run only this one (0-based).
    #[arg(long, requires = "split")]
    part: Option<u32>,
    /// Stop after this many work units, leaving a checkpoint to resume.
    #[arg(long)]
    stop_after_units: Option<u64>,
    /// Write the report artifact here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProveArgs {
    #[command(subcommand)]
    target: ProveTarget,
    /// Where to write the trace; defaults to `<target>.trace.json`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    max_nodes: Option<u64>,
    /// Skip re-checking the trace before writing it.
    #[arg(long, global = true)]
    no_check: bool,
    /// List every eliminated leaf.
    #[arg(long, global = true)]
    leaves: bool,
    #[command(flatten)]
    decimals: DecimalArgs,
}

#[derive(Subcommand, Clone)]
enum ProveTarget {
    /// Four prime factors: p1 = 3 and p2 in {5, 7}.
    #[command(name = "theorem-1")]
    Theorem1,
    /// Five prime factors: p1 in {3, 5}.
    #[command(name = "theorem-2")]
    Theorem2,
    /// A case read from a JSON file; holds iff every subcase is eliminated.
    #[command(name = "case-file")]
    CaseFile { path: PathBuf },
}

#[derive(Args, Clone, Copy)]
struct DecimalArgs {
    /// Digits after the point when showing rationals.
    #[arg(long, default_value_t = 6, global = true)]
    digits: usize,
    #[arg(long, value_enum, default_value_t = Rounding::Truncate, global = true)]
    rounding: Rounding,
}

#[derive(ValueEnum, Clone, Copy)]
enum Rounding {
    Truncate,
    HalfUp,
}

impl DecimalArgs {
    fn decimals(self) -> Decimals {
        Decimals {
            digits: self.digits,
            mode: match self.rounding {
                Rounding::Truncate => DecimalMode::Truncate,
                Rounding::HalfUp => DecimalMode::RoundHalfUp,
            },
        }
    }
}

/// Failure carrying its exit status.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn exit(code: u8, msg: impl Into<String>) -> anyhow::Error {
    Exit(code, msg.into()).into()
}

fn parse_bound(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim().replace('_', "");
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (
            m.to_string(),
            e.parse::<u32>().map_err(|_| format!("bad exponent in {s:?}"))?,
        ),
        None => (s.clone(), 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((&mantissa, ""));
    if int.is_empty() && frac.is_empty() || !(int.chars().chain(frac.chars())).all(|c| c.is_ascii_digit()) {
        return Err(format!("{s:?} is not a number"));
    }
    let frac = frac.trim_end_matches('0');
    let shift = exp
        .checked_sub(frac.len() as u32)
        .ok_or_else(|| format!("{s:?} is not an integer"))?;
    let digits: u64 = format!("{int}{frac}")
        .parse()
        .map_err(|_| format!("{s:?} is out of range"))?;
    10u64
        .checked_pow(shift)
        .and_then(|p| digits.checked_mul(p))
        .ok_or_else(|| format!("{s:?} is out of range"))
}

fn parse_n(s: &str) -> Result<u64> {
    let big: BigUint = s
        .trim()
        .parse()
        .map_err(|_| exit(EXIT_USAGE, format!("{s:?} is not a positive integer")))?;
    let n = u64::try_from(&big).map_err(|_| exit(EXIT_USAGE, format!("{s} exceeds 2^64 - 1")))?;
    if n == 0 {
        return Err(exit(EXIT_USAGE, "n must be positive"));
    }
    Ok(n)
}

fn read_artifact(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn schema_error(path: &Path, e: impl std::fmt::Display) -> anyhow::Error {
    exit(EXIT_ARTIFACT, format!("{}: {e}", path.display()))
}

fn load_trace(path: &Path) -> Result<ProofTrace> {
    let bytes = read_artifact(path)?;
    Envelope::<ProofTrace>::from_json(&bytes, KIND_PROOF_TRACE)
        .map(|e| e.payload)
        .map_err(|e| schema_error(path, e))
}

fn load_report(path: &Path) -> Result<SearchReport> {
    let bytes = read_artifact(path)?;
    Envelope::<SearchReport>::from_json(&bytes, KIND_SEARCH_REPORT)
        .map(|e| e.payload)
        .map_err(|e| schema_error(path, e))
}

fn write_artifact(path: &Path, json: String) -> Result<()> {
    fs::write(path, json).with_context(|| format!("writing {}", path.display()))
}

fn cmd_verify(n: &str) -> Result<u8> {
    let c = classify(parse_n(n)?);
    print!("{}", render::classification(&c));
    Ok(if c.deficient_perfect.is_some() { 0 } else { EXIT_FAIL })
}

fn cmd_classify(n: &str) -> Result<u8> {
    let c = classify(parse_n(n)?);
    println!("{}", serde_json::to_string_pretty(&c)?);
    Ok(0)
}

fn cmd_search(args: SearchArgs) -> Result<u8> {
    let parity = if args.all { Parity::All } else { Parity::Odd };
    let partition = match (args.split, args.part) {
        (Some(ways), Some(index)) => Some(Partition { ways, index }),
        _ => None,
    };
    let job = SearchJob {
        k: args.k,
        parity,
        bound: args.bound,
        even_exponents_only: parity == Parity::Odd && !args.no_even_filter,
        partition,
        checkpoint_id: args.checkpoint_id,
    };
    job.validate().map_err(|e| exit(EXIT_USAGE, e.to_string()))?;
    let opts = RunOptions {
        jobs: args.jobs,
        checkpoint_dir: args.checkpoint_dir,
        resume: args.resume,
        stop_after_units: args.stop_after_units,
    };
    let report = run_search(&job, &opts)?;
    print!("{}", render::search(&report));
    eprintln!("elapsed: {} ms", report.elapsed_ms);
    let code = if report.complete { 0 } else { EXIT_INCONCLUSIVE };
    if let Some(out) = &args.out {
        let meta = Metadata::now(Some(report.elapsed_ms));
        write_artifact(out, Envelope::new(KIND_SEARCH_REPORT, meta, report).to_json()?)?;
    }
    Ok(code)
}

fn cmd_merge(paths: &[PathBuf], out: Option<&Path>) -> Result<u8> {
    let reports = paths.iter().map(|p| load_report(p)).collect::<Result<Vec<_>>>()?;
    let merged = merge_reports(&reports).map_err(|e| exit(EXIT_ARTIFACT, e.to_string()))?;
    print!("{}", render::search(&merged));
    let complete = merged.complete && merged.merged_parts.is_empty();
    if let Some(out) = out {
        write_artifact(
            out,
            Envelope::new(KIND_SEARCH_REPORT, Metadata::now(None), merged).to_json()?,
        )?;
    }
    Ok(if complete { 0 } else { EXIT_INCONCLUSIVE })
}

fn cmd_prove(args: ProveArgs) -> Result<u8> {
    let started = Instant::now();
    let budget_for = |target: Target| {
        let mut budget = target.default_budget();
        if let Some(n) = args.max_nodes {
            budget.max_nodes = n;
        }
        budget
    };
    let (name, trace) = match &args.target {
        ProveTarget::Theorem1 => (
            "theorem-1".to_string(),
            prove(Target::Theorem1, &budget_for(Target::Theorem1))?,
        ),
        ProveTarget::Theorem2 => (
            "theorem-2".to_string(),
            prove(Target::Theorem2, &budget_for(Target::Theorem2))?,
        ),
        ProveTarget::CaseFile { path } => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let case: CaseSpec = serde_json::from_str(&text).map_err(|e| schema_error(path, e))?;
            let trace = eliminate(&case, &budget_for(Target::Custom)).map_err(|e| exit(EXIT_USAGE, e.to_string()))?;
            let stem = path
                .file_stem()
                .map_or("case".into(), |s| s.to_string_lossy().into_owned());
            (stem, trace)
        }
    };
    let elapsed = started.elapsed().as_millis() as u64;
    if !args.no_check {
        if let Err(failure) = check_trace(&trace) {
            bail!("trace failed its own re-check: {failure}");
        }
    }
    let assessment = assess(&trace);
    print!(
        "{}",
        render::trace(&trace, &assessment, args.decimals.decimals(), args.leaves)
    );
    eprintln!("elapsed: {elapsed} ms");
    let out = args.out.unwrap_or_else(|| PathBuf::from(format!("{name}.trace.json")));
    write_artifact(
        &out,
        Envelope::new(KIND_PROOF_TRACE, Metadata::now(Some(elapsed)), trace).to_json()?,
    )?;
    println!("trace written to {}", out.display());
    Ok(if assessment.inconclusive {
        EXIT_INCONCLUSIVE
    } else if assessment.holds {
        0
    } else {
        EXIT_FAIL
    })
}

fn cmd_check_trace(path: &Path) -> Result<u8> {
    let trace = load_trace(path)?;
    match check_trace(&trace) {
        Ok(report) => {
            let assessment = assess(&trace);
            println!("ok: {} steps checked", report.steps_checked);
            println!(
                "result: {}",
                if assessment.inconclusive {
                    "inconclusive"
                } else if assessment.holds {
                    "holds"
                } else {
                    "does not hold"
                }
            );
            Ok(0)
        }
        Err(failure) => {
            println!("FAILED at {failure}");
            Ok(EXIT_FAIL)
        }
    }
}

fn cmd_table(primes: &[u64], moduli: &[u64]) -> Result<u8> {
    let table = order_table(primes, moduli).map_err(|e| exit(EXIT_USAGE, e.to_string()))?;
    print!("{}", render::order_table(primes, moduli, &table));
    Ok(0)
}

fn cmd_report(path: &Path, leaves: bool, dec: Decimals) -> Result<u8> {
    let bytes = read_artifact(path)?;
    let kind = peek_kind(&bytes).map_err(|e| schema_error(path, e))?;
    match kind.as_str() {
        KIND_PROOF_TRACE => {
            let trace = load_trace(path)?;
            print!("{}", render::trace(&trace, &assess(&trace), dec, leaves));
        }
        KIND_SEARCH_REPORT => print!("{}", render::search(&load_report(path)?)),
        other => return Err(schema_error(path, format!("unknown artifact kind {other:?}"))),
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Verify { n } => cmd_verify(&n),
        Command::Classify { n } => cmd_classify(&n),
        Command::Search(args) => cmd_search(args),
        Command::Merge { reports, out } => cmd_merge(&reports, out.as_deref()),
        Command::Prove(args) => cmd_prove(args),
        Command::CheckTrace { path } => cmd_check_trace(&path),
        Command::Table { primes, moduli } => cmd_table(&primes, &moduli),
        Command::Report { path, leaves, decimals } => cmd_report(&path, leaves, decimals.decimals()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.downcast_ref::<Exit>().map_or(EXIT_FAIL, |e| e.0);
            ExitCode::from(code)
        }
    }
}
