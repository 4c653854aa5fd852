//! `cumac`: learn exceptions, enforce, compare against the Low-Water-Mark
//! baseline, check the reachability oracle, and export taint graphs.
//!
//! Exit codes: 0 ran with no denials, 1 ran with at least one denial (or an
//! oracle mismatch), 2 usage, parse or configuration error.

mod report;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cumac_core::baseline::compare;
use cumac_core::scenarios;
use cumac_core::trace::{
    export_taint_graph, generate, parse_trace_bytes, replay, taint_oracle, GeneratorConfig, Trace,
};
use cumac_core::{EnvironmentBit, ExceptionStore, UserRecord};
use rayon::prelude::*;

use report::{OracleRun, Source};

#[derive(Parser)]
#[command(name = "cumac", version, about = "Taint-tracking mandatory access control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay in the secure environment and record every exceptional access.
    Learn(RunArgs),
    /// Replay in the unsecure environment, denying unexcepted critical operations.
    Enforce(RunArgs),
    /// Replay through both the taint engine and the Low-Water-Mark baseline.
    Compare(RunArgs),
    /// Check engine taint against the reachability oracle on random traces.
    OracleCheck(OracleArgs),
    /// Enforce and write the taint graph in DOT format.
    Graph(RunArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct TraceSource {
    /// Trace file to replay.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Built-in scenario to replay.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(scenarios::names().collect::<Vec<_>>()))]
    scenario: Option<String>,
    /// Replay a generated trace from this seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: TraceSource,
    /// Exception store to read.
    #[arg(long, conflicts_with = "empty_store")]
    store: Option<PathBuf>,
    /// Start from an empty exception store.
    #[arg(long)]
    empty_store: bool,
    /// Where `learn` writes the store (defaults to --store).
    #[arg(long)]
    store_out: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// File of trusted user names, one per line; all other users are untrusted.
    #[arg(long)]
    trusted_users: Option<PathBuf>,
    /// Events in a generated trace (with --seed).
    #[arg(long, default_value_t = 1000)]
    events: usize,
    /// Leave wall-clock timing out of the report so identical runs diff empty.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 1000)]
    events: usize,
    #[arg(long, default_value_t = 100)]
    runs: u64,
    /// Run i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Learn(args) => learn(&args),
        Command::Enforce(args) => enforce(&args),
        Command::Compare(args) => run_compare(&args),
        Command::OracleCheck(args) => oracle_check(&args),
        Command::Graph(args) => graph(&args),
    }
}

fn load_trace(args: &RunArgs) -> Result<(Trace, Source)> {
    let (mut trace, source) = match (&args.source.trace, &args.source.scenario, args.source.seed) {
        (Some(path), _, _) => {
            let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            let trace = parse_trace_bytes(&bytes).with_context(|| path.display().to_string())?;
            (trace, Source::File(path.display().to_string()))
        }
        (_, Some(name), _) => {
            let scenario = scenarios::scenario(name).with_context(|| format!("unknown scenario {name}"))?;
            let trace = scenario.trace().with_context(|| format!("scenario {name}"))?;
            (trace, Source::Scenario(name.clone()))
        }
        (_, _, Some(seed)) => (
            generate(&GeneratorConfig::new(args.events, seed)),
            Source::Generated { seed, events: args.events },
        ),
        _ => bail!("one of --trace, --scenario or --seed is required"),
    };
    if let Some(path) = &args.trusted_users {
        apply_trusted_users(&mut trace, path)?;
    }
    Ok((trace, source))
}

fn apply_trusted_users(trace: &mut Trace, path: &Path) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let trusted: BTreeSet<&str> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or_default().trim())
        .filter(|l| !l.is_empty())
        .collect();
    for user in &mut trace.snapshot.users {
        user.trusted = trusted.contains(user.name.as_str());
    }
    for name in trusted {
        if !trace.snapshot.users.iter().any(|u| u.name == name) {
            trace.snapshot.users.push(UserRecord {
                name: name.to_string(),
                trusted: true,
            });
        }
    }
    Ok(())
}

fn load_store(path: &Path) -> Result<ExceptionStore> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    ExceptionStore::load(&bytes).with_context(|| path.display().to_string())
}

/// The store named on the command line, or empty.
fn optional_store(args: &RunArgs) -> Result<ExceptionStore> {
    match &args.store {
        Some(path) => load_store(path),
        None => Ok(ExceptionStore::default()),
    }
}

fn emit(args_report: &Option<PathBuf>, format: Format, text: String, json: serde_json::Value) -> Result<()> {
    let structured = || serde_json::to_string_pretty(&json).expect("json values serialize") + "\n";
    match args_report {
        Some(path) => {
            let body = match format {
                Format::Text => text.clone(),
                Format::Structured => structured(),
            };
            fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
            print!("{text}");
        }
        None => match format {
            Format::Text => print!("{text}"),
            Format::Structured => print!("{}", structured()),
        },
    }
    Ok(())
}

fn learn(args: &RunArgs) -> Result<u8> {
    let out = args
        .store_out
        .as_ref()
        .or(args.store.as_ref())
        .context("learn needs a store to write: pass --store-out (or --store)")?;
    let (trace, source) = load_trace(args)?;
    let base = optional_store(args)?;
    let (mut report, store) = replay(&trace, EnvironmentBit::Secure, base)?;
    report.seed = source.seed();
    let paths = trace.paths();
    let text = store.save_annotated(|fid| paths.get(&fid).map(String::as_str));
    fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    let timing = !args.no_timing;
    emit(
        &args.report,
        args.format,
        report::replay_text("learn", &source, &trace, &report, timing)
            + &format!("store written to {}\n", out.display()),
        report::replay_json("learn", &source, &trace, &report, timing),
    )?;
    Ok(0)
}

fn enforce(args: &RunArgs) -> Result<u8> {
    if args.store.is_none() && !args.empty_store {
        bail!("enforce needs an exception store: pass --store PATH or --empty-store");
    }
    let (trace, source) = load_trace(args)?;
    let store = optional_store(args)?;
    let (mut report, _) = replay(&trace, EnvironmentBit::Unsecure, store)?;
    report.seed = source.seed();
    let timing = !args.no_timing;
    emit(
        &args.report,
        args.format,
        report::replay_text("enforce", &source, &trace, &report, timing),
        report::replay_json("enforce", &source, &trace, &report, timing),
    )?;
    Ok(u8::from(report.counters.denied_total() > 0))
}

fn run_compare(args: &RunArgs) -> Result<u8> {
    let (trace, source) = load_trace(args)?;
    let store = optional_store(args)?;
    let comparison = compare(&trace, &store)?;
    emit(
        &args.report,
        args.format,
        report::compare_text(&source, &comparison),
        report::compare_json(&source, &trace, &comparison),
    )?;
    Ok(u8::from(comparison.cumac_denials() + comparison.lwm_denials() > 0))
}

fn graph(args: &RunArgs) -> Result<u8> {
    let (trace, _) = load_trace(args)?;
    let store = optional_store(args)?;
    let (report, _) = replay(&trace, EnvironmentBit::Unsecure, store)?;
    let dot = export_taint_graph(&report, &trace);
    match &args.report {
        Some(path) => fs::write(path, dot).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{dot}"),
    }
    Ok(0)
}

fn oracle_check(args: &OracleArgs) -> Result<u8> {
    let mut runs: Vec<OracleRun> = (0..args.runs)
        .into_par_iter()
        .map(|i| {
            let seed = args.seed.wrapping_add(i);
            let trace = generate(&GeneratorConfig::new(args.events, seed));
            match replay(&trace, EnvironmentBit::Unsecure, ExceptionStore::default()) {
                Ok((report, _)) => {
                    let oracle = taint_oracle(&trace, &report.denied_flags());
                    OracleRun {
                        seed,
                        engine_taint: report.final_taint.len(),
                        oracle_taint: oracle.len(),
                        denied: report.counters.denied_total(),
                        matched: oracle == report.final_taint,
                        error: None,
                    }
                }
                Err(e) => OracleRun {
                    seed,
                    engine_taint: 0,
                    oracle_taint: 0,
                    denied: 0,
                    matched: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    runs.sort_by_key(|r| r.seed);
    let all = runs.iter().all(|r| r.matched);
    emit(
        &args.report,
        args.format,
        report::oracle_text(args.events, &runs),
        report::oracle_json(args.events, args.seed, &runs),
    )?;
    Ok(u8::from(!all))
}
