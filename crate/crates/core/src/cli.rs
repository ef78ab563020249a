//! `phasecache` command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or config error,
//! 3 I/O error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{default_config_toml, load_sim_config};
use crate::error::Error;
use crate::injection::InjectionSchedule;
use crate::sim::{compare_across_lengths, compare_fixed_vs_adaptive, run, SimConfig};
use crate::trace::{write_schedule_csv, write_schedule_json, write_trace, TraceFormat};
use crate::vector::project_motion_neutral_exact;
use crate::verify::{faulty_sign_flip, run_suite, VerifyOptions};
use crate::window::schedule_table;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "phasecache", version, about = "Phase-adaptive structured attention memory simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a synthetic rollout and write its per-block trace.
    Simulate(SimulateArgs),
    /// Check the projection against the brute-force oracle.
    Verify(VerifyArgs),
    /// Dump the per-frame window schedule.
    Schedule(ScheduleArgs),
    /// Compare adaptive and fixed windows, optionally across video lengths.
    Compare(CompareArgs),
    /// Print the default configuration file.
    DefaultConfig,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for TraceFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => TraceFormat::Csv,
            FormatArg::Json => TraceFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InjectionArg {
    #[value(name = "one_shot")]
    OneShot,
    Constant,
    Decayed,
}

impl From<InjectionArg> for InjectionSchedule {
    fn from(a: InjectionArg) -> Self {
        match a {
            InjectionArg::OneShot => InjectionSchedule::OneShot,
            InjectionArg::Constant => InjectionSchedule::Constant,
            InjectionArg::Decayed => InjectionSchedule::Decayed,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FaultArg {
    #[value(name = "sign-flip")]
    SignFlip,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML config; defaults apply when omitted.
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trace output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    #[arg(long, value_enum)]
    pub injection: Option<InjectionArg>,
    /// Pin the window at w_max.
    #[arg(long)]
    pub fixed_window: bool,
    /// Also write the budget summary as JSON.
    #[arg(long)]
    pub summary_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub cases: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "2,3,8,32")]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub feasible_samples: usize,
    /// Negative control: verify a deliberately broken projection.
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<FaultArg>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Durations in seconds; the configured schedule is taken as `--base-seconds`.
    #[arg(long, value_delimiter = ',')]
    pub lengths: Vec<u32>,
    #[arg(long, default_value_t = 60)]
    pub base_seconds: u32,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn load(config: Option<&Path>) -> Result<SimConfig, Error> {
    match config {
        Some(path) => load_sim_config(path),
        None => Ok(SimConfig::default()),
    }
}

fn open_out(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn main_with(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Verify(args) => verify(args),
        Command::Schedule(args) => schedule(args),
        Command::Compare(args) => compare(args),
        Command::DefaultConfig => {
            print!("{}", default_config_toml());
            Ok(EXIT_OK)
        }
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn simulate(args: SimulateArgs) -> Result<i32, Error> {
    let mut sim = load(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        sim.seed = seed;
    }
    if let Some(mode) = args.injection {
        sim.engine.bridge_schedule = mode.into();
    }
    if args.fixed_window {
        sim.engine = sim.engine.fixed_window();
    }
    let result = run(&sim)?;

    write_trace(&result.traces, args.format.into(), open_out(args.out.as_deref())?)?;

    let r = &result.report;
    let mut summary = String::new();
    summary.push_str(&format!("blocks: {}\n", r.blocks));
    summary.push_str(&format!("mean_read_budget: {:.6}\n", r.mean_read_budget));
    summary.push_str(&format!("min_read_budget: {}\n", r.min_read_budget));
    summary.push_str(&format!("max_read_budget: {}\n", r.max_read_budget));
    summary.push_str(&format!("mean_window: {:.6}\n", r.mean_window));
    for s in &r.per_segment {
        summary.push_str(&format!(
            "segment {}: blocks {} mean_read_budget {:.6} mean_window {:.6}\n",
            s.segment_index, s.blocks, s.mean_read_budget, s.mean_window
        ));
    }
    if args.out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    if let Some(path) = args.summary_json {
        let json = serde_json::to_string_pretty(r).map_err(|e| Error::Serialize(e.to_string()))?;
        std::fs::write(path, json + "\n")?;
    }
    Ok(EXIT_OK)
}

fn verify(args: VerifyArgs) -> Result<i32, Error> {
    let opts = VerifyOptions {
        cases: args.cases as usize,
        seed: args.seed,
        dims: args.dims,
        feasible_samples: args.feasible_samples,
        projector: match args.inject_fault {
            Some(FaultArg::SignFlip) => faulty_sign_flip,
            None => project_motion_neutral_exact,
        },
    };
    let report = run_suite(&opts)?;
    println!("{:<24} {:>4} {:>6} {:>8} {:>14}  result", "check", "dim", "cases", "failures", "worst_margin");
    for r in &report.results {
        println!(
            "{:<24} {:>4} {:>6} {:>8} {:>14.3e}  {}",
            r.check.name(),
            r.dim,
            r.cases,
            r.failures,
            r.worst_margin,
            if r.passed() { "PASS" } else { "FAIL" }
        );
    }
    let failing: Vec<_> = report.results.iter().filter(|r| !r.passed()).collect();
    if failing.is_empty() {
        println!("all checks passed");
        return Ok(EXIT_OK);
    }
    for r in failing {
        println!(
            "FAILED {} dim {}: first failing case seed {}",
            r.check.name(),
            r.dim,
            r.first_failing_seed.unwrap_or_default()
        );
    }
    Ok(EXIT_VERIFY_FAILED)
}

fn schedule(args: ScheduleArgs) -> Result<i32, Error> {
    let sim = load(args.config.as_deref())?;
    let rows = schedule_table(&sim.schedule, &sim.engine.window)?;
    let out = open_out(args.out.as_deref())?;
    match args.format {
        FormatArg::Csv => write_schedule_csv(&rows, out)?,
        FormatArg::Json => write_schedule_json(&rows, out)?,
    }
    Ok(EXIT_OK)
}

fn compare(args: CompareArgs) -> Result<i32, Error> {
    let mut sim = load(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        sim.seed = seed;
    }
    let json = if args.lengths.is_empty() {
        serde_json::to_string_pretty(&compare_fixed_vs_adaptive(&sim)?)
    } else {
        serde_json::to_string_pretty(&compare_across_lengths(&sim, args.base_seconds, &args.lengths)?)
    }
    .map_err(|e| Error::Serialize(e.to_string()))?;
    println!("{json}");
    Ok(EXIT_OK)
}
