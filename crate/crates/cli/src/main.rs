use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use bincover_core::adversary::{
    gen_dynamic_lb, gen_perfect_lb, gen_random, gen_static_lb, verify_perfect_lb_properties, RandomSpec, SizeFamily,
};
use bincover_core::harness::{emit_report, replay, Algo, ReplayConfig};
use bincover_core::oracle::{opt_exact, OracleLimits};
use bincover_core::stream::EventStream;
use bincover_core::{Error, Size};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bincover", version, about = "Online bin covering with bounded migration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay an event stream through one of the algorithms.
    Run(RunArgs),
    /// Write a generated event stream.
    Gen(GenArgs),
    /// Exact optimum of the live items at the end of every phase.
    Opt {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 18)]
        limit: usize,
    },
    /// Check the item-size properties of the perfect-packing construction.
    VerifyClaim {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Static,
    Dynamic,
    Amortized,
}

impl From<AlgoArg> for Algo {
    fn from(a: AlgoArg) -> Algo {
        match a {
            AlgoArg::Static => Algo::Static,
            AlgoArg::Dynamic => Algo::Dynamic,
            AlgoArg::Amortized => Algo::Amortized,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    algo: AlgoArg,
    #[arg(long, value_parser = parse_size)]
    epsilon: Size,
    /// Amortized algorithm only; defaults to ε³.
    #[arg(long, value_parser = parse_size)]
    mu: Option<Size>,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    check_invariants: bool,
    /// Compute the exact optimum while at most this many items are live.
    #[arg(long)]
    oracle_limit: Option<usize>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    StaticLb,
    DynamicLb,
    PerfectLb,
    Random,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Construction size N.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Migration factor of the algorithm under test.
    #[arg(long, value_parser = parse_size, default_value = "1")]
    beta: Size,
    /// Number of phases after phase 0 (dynamic-lb); computed when omitted.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 20)]
    arrivals: usize,
    /// uniform-grid-1/<den>, bimodal[-<max small>] or all-small[-<max small>].
    #[arg(long, default_value = "uniform-grid-1/100")]
    sizes: SizeFamily,
    #[arg(long, default_value_t = 0.0)]
    departure_rate: f64,
    #[arg(long)]
    max_live: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_size(text: &str) -> Result<Size, Error> {
    bincover_core::size::parse_size(text)
}

enum Outcome {
    Ok,
    Violation,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<Outcome> {
    match cmd {
        Command::Run(args) => run(args),
        Command::Gen(args) => generate(args),
        Command::Opt { input, limit } => opt(&input, limit),
        Command::VerifyClaim { n } => verify_claim(n),
    }
}

fn read_stream(path: &Path) -> anyhow::Result<EventStream> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    EventStream::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run(args: RunArgs) -> anyhow::Result<Outcome> {
    let stream = read_stream(&args.input)?;
    let config = ReplayConfig {
        algo: args.algo.into(),
        eps: args.epsilon,
        mu: args.mu,
        check_invariants: args.check_invariants,
        oracle_limit: args.oracle_limit,
    };
    let report = match replay(&stream, &config) {
        Ok(r) => r,
        Err(Error::Invariant { event, detail, dump }) => {
            let path = dump_path(&args.input);
            std::fs::write(&path, dump).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("invariant violated after event {event}: {detail}");
            eprintln!("state dump: {}", path.display());
            return Ok(Outcome::Violation);
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = &args.report {
        emit_report(&report, path).with_context(|| format!("writing {}", path.display()))?;
    }
    let last = report.rows.last();
    println!("events: {}", report.rows.len());
    println!("covered: {}", last.map_or(0, |r| r.alg_covered));
    if let Some(opt) = last.and_then(|r| r.opt_exact) {
        println!("opt: {opt}");
    }
    println!("max event factor: {}", report.max_event_factor());
    println!("amortized factor: {}", last.map_or_else(Size::zero, |r| r.amortized_factor.clone()));
    let failures = report.rows.iter().filter(|r| !r.ratio_bound_ok).count();
    println!("ratio bound failures: {failures}");
    Ok(if failures == 0 { Outcome::Ok } else { Outcome::Violation })
}

fn dump_path(input: &Path) -> PathBuf {
    let mut name = input.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".state-dump.txt");
    input.with_file_name(name)
}

fn generate(args: GenArgs) -> anyhow::Result<Outcome> {
    let stream = match args.family {
        Family::StaticLb => gen_static_lb(args.n, &args.beta)?,
        Family::DynamicLb => gen_dynamic_lb(args.n, &args.beta, args.m)?,
        Family::PerfectLb => gen_perfect_lb(args.n)?,
        Family::Random => gen_random(&RandomSpec {
            arrivals: args.arrivals,
            family: args.sizes,
            departure_rate: args.departure_rate,
            max_live: args.max_live,
            seed: args.seed,
        })?,
    };
    std::fs::write(&args.out, stream.to_text()).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(Outcome::Ok)
}

fn opt(input: &Path, limit: usize) -> anyhow::Result<Outcome> {
    let stream = read_stream(input)?;
    let limits = OracleLimits { max_items_exact: limit };
    let mut ends: Vec<(String, usize, Option<usize>)> = stream
        .phases
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let end = stream.phases.get(k + 1).map_or(stream.len(), |q| q.start);
            (format!("phase {}", p.label), end, p.opt)
        })
        .collect();
    if ends.is_empty() {
        ends.push(("final".to_string(), stream.len(), None));
    }
    let mut mismatch = false;
    for (label, end, expected) in ends {
        let items = stream.live_items(end);
        let (value, _) = opt_exact(&items, limits)?;
        match expected {
            Some(e) if e != value => {
                mismatch = true;
                println!("{label}: opt {value} (annotated {e}, MISMATCH)");
            }
            Some(_) => println!("{label}: opt {value} (matches annotation)"),
            None => println!("{label}: opt {value}"),
        }
    }
    Ok(if mismatch { Outcome::Violation } else { Outcome::Ok })
}

fn verify_claim(n: usize) -> anyhow::Result<Outcome> {
    if n == 0 {
        bail!("--n must be at least 1");
    }
    let r = verify_perfect_lb_properties(n)?;
    for (k, ok) in r.groups().iter().enumerate() {
        println!("property {}: {}", k + 1, if *ok { "holds" } else { "FAILS" });
    }
    println!("residues: {}", if r.residues { "hold" } else { "FAIL" });
    Ok(if r.all_hold() { Outcome::Ok } else { Outcome::Violation })
}
