use std::fs;
use std::io::{self, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use smm_core::asm::Severity;
use smm_core::harness::{
    diff_run, render_spacetime, sweep, DiagramFormat, SpacetimeDiagram, SweepConfig, Verdict,
};
use smm_core::{parse, render, validate, Limits, Machine, MachineStatus, Row, RuleNumber, StorageGraph};
use thiserror::Error;

const EXIT_FAULT: u8 = 2;
const EXIT_MISMATCH: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_FILE: u8 = 66;

/// Storage modification machine toolkit.
#[derive(Debug, Parser)]
#[command(name = "smm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute a .smm program.
    Run(RunArgs),
    /// Emit the machine program for a rule and initial row.
    Gen(GenArgs),
    /// Generate, run and check one automaton against the array simulator.
    Eca(EcaArgs),
    /// Check many rules, widths and random rows.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct LimitArgs {
    #[arg(long, default_value_t = Limits::default().max_steps)]
    max_steps: u64,
    #[arg(long, default_value_t = Limits::default().max_nodes)]
    max_nodes: u64,
}

impl LimitArgs {
    fn limits(&self) -> Limits {
        Limits {
            max_steps: self.max_steps,
            max_nodes: self.max_nodes,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    file: PathBuf,
    /// Print every executed instruction.
    #[arg(long)]
    trace: bool,
    /// Write the final graph as Graphviz.
    #[arg(long, value_name = "OUT")]
    dot: Option<PathBuf>,
    #[command(flatten)]
    limits: LimitArgs,
}

#[derive(Debug, Args)]
struct RowArgs {
    #[arg(long)]
    rule: u8,
    #[arg(long)]
    width: Option<usize>,
    /// Initial row as 0/1 digits.
    #[arg(long, value_name = "BITS", conflicts_with = "single_on")]
    pattern: Option<String>,
    /// One on-cell at index width/2 (the default).
    #[arg(long)]
    single_on: bool,
    #[arg(long)]
    iters: usize,
}

impl RowArgs {
    fn row(&self) -> Result<Row, CliError> {
        match (&self.pattern, self.width) {
            (Some(bits), width) => {
                let row: Row = bits.parse().map_err(|e| CliError::Usage(format!("--pattern: {e}")))?;
                if let Some(w) = width.filter(|&w| w != row.width()) {
                    return Err(CliError::Usage(format!(
                        "--pattern has {} cells but --width is {w}",
                        row.width()
                    )));
                }
                Ok(row)
            }
            (None, Some(w)) => Row::single_on(w).map_err(|e| CliError::Usage(format!("--width: {e}"))),
            (None, None) => Err(CliError::Usage("give --width or --pattern".into())),
        }
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    row: RowArgs,
    /// Output file; stdout if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EcaArgs {
    #[command(flatten)]
    row: RowArgs,
    /// Spacetime diagram; `.pbm` selects PBM, anything else text.
    #[arg(long, value_name = "OUT")]
    diagram: Option<PathBuf>,
    #[arg(long, value_name = "OUT")]
    dot: Option<PathBuf>,
    /// JSON run report.
    #[arg(long, value_name = "OUT")]
    report: Option<PathBuf>,
    #[command(flatten)]
    limits: LimitArgs,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long, default_value = "3..16")]
    widths: Span<usize>,
    #[arg(long, default_value_t = 16)]
    iters: usize,
    #[arg(long, env = "SMM110_SEED", default_value_t = 110)]
    seed: u64,
    #[arg(long, default_value = "0..255")]
    rules: Span<u8>,
    /// Random rows per rule and width.
    #[arg(long, default_value_t = 4)]
    samples: usize,
    #[command(flatten)]
    limits: LimitArgs,
}

/// Inclusive `a..b`, or a single value.
#[derive(Debug, Clone)]
struct Span<T>(RangeInclusive<T>);

impl<T: FromStr + PartialOrd + Copy> FromStr for Span<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| t.trim().parse::<T>().map_err(|_| format!("`{t}` is not a valid bound"));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
            None => {
                let v = num(s)?;
                (v, v)
            }
        };
        if lo > hi {
            return Err(format!("empty range `{s}`"));
        }
        Ok(Span(lo..=hi))
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{source}")]
    Syntax {
        path: PathBuf,
        source: smm_core::asm::ParseError,
    },
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } | CliError::Syntax { .. } => EXIT_FILE,
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn cmd_run(args: RunArgs) -> Result<u8, CliError> {
    let text = fs::read_to_string(&args.file).map_err(|source| CliError::Io {
        path: args.file.clone(),
        source,
    })?;
    let program = parse(&text).map_err(|source| CliError::Syntax {
        path: args.file.clone(),
        source,
    })?;
    for diag in validate(&program) {
        if diag.severity >= Severity::Warning {
            eprintln!("{}:{diag}", args.file.display());
        }
    }
    let graph = StorageGraph::new(program.alphabet().clone());
    let mut machine = Machine::load(program, graph).expect("graph alphabet matches the program");
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if args.trace {
        machine.run_traced(args.limits.limits(), |ev| {
            let _ = writeln!(out, "{ev}");
        });
    } else {
        machine.run(args.limits.limits());
    }
    let counters = machine.counters();
    let g = machine.graph();
    let _ = writeln!(out, "{}", machine.status());
    let _ = writeln!(out, "steps: {}", counters.steps);
    let _ = writeln!(out, "nodes created: {}", counters.nodes_created);
    let _ = writeln!(out, "reachable nodes: {}", g.reachable_count());
    if let Some(path) = &args.dot {
        write_file(path, g.to_dot().as_bytes())?;
    }
    Ok(match machine.status() {
        MachineStatus::Faulted(_) => EXIT_FAULT,
        _ => 0,
    })
}

fn cmd_gen(args: GenArgs) -> Result<u8, CliError> {
    let row = args.row.row()?;
    let program = smm_core::codegen::gen_program(&row, RuleNumber::new(args.row.rule), args.row.iters);
    let text = render(&program);
    match &args.output {
        Some(path) => write_file(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn cmd_eca(args: EcaArgs) -> Result<u8, CliError> {
    let row = args.row.row()?;
    let run = diff_run(&row, RuleNumber::new(args.row.rule), args.row.iters, args.limits.limits());
    let report = &run.report;

    println!("rule {} width {} iterations {}", report.rule, report.width, report.iterations);
    println!("{}", run.machine.status());
    println!("steps: {}", report.steps);
    println!("nodes created: {}", report.nodes_created);
    println!("reachable nodes: {}", report.final_reachable);
    match &report.verdict {
        Verdict::Match => println!("verdict: match"),
        Verdict::Mismatch { generation, cell } => {
            println!("verdict: mismatch at generation {generation}, cell {cell}")
        }
        Verdict::Fault { fault, at } => println!("verdict: fault ({fault} at instruction {at})"),
    }

    if let Some(path) = &args.diagram {
        let rows = if report.rows.is_empty() { &report.oracle_rows } else { &report.rows };
        let rows: Vec<Row> = rows.iter().map(|r| r.parse().expect("report rows are 0/1")).collect();
        let diagram = SpacetimeDiagram::new(rows).expect("generations share a width");
        let format = match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("pbm") => DiagramFormat::Pbm,
            _ => DiagramFormat::Text,
        };
        write_file(path, &render_spacetime(&diagram, format))?;
    }
    if let Some(path) = &args.dot {
        write_file(path, run.machine.graph().to_dot().as_bytes())?;
    }
    if let Some(path) = &args.report {
        let mut json = report.to_json();
        json.push('\n');
        write_file(path, json.as_bytes())?;
    }
    Ok(match report.verdict {
        Verdict::Match => 0,
        Verdict::Mismatch { .. } => EXIT_MISMATCH,
        Verdict::Fault { .. } => EXIT_FAULT,
    })
}

fn cmd_check(args: CheckArgs) -> Result<u8, CliError> {
    if *args.widths.0.start() == 0 {
        return Err(CliError::Usage("--widths must start at 1 or more".into()));
    }
    let config = SweepConfig {
        rules: args.rules.0,
        widths: args.widths.0,
        iterations: args.iters,
        samples: args.samples,
        seed: args.seed,
        limits: args.limits.limits(),
    };
    let summary = sweep(&config);

    println!(
        "rules {}..{}, {} iterations, {} samples, seed {}",
        config.rules.start(),
        config.rules.end(),
        config.iterations,
        config.samples,
        config.seed
    );
    println!("{:>5} {:>7} {:>7}", "width", "cases", "match");
    for w in &summary.by_width {
        println!("{:>5} {:>7} {:>7}", w.width, w.cases, w.matches);
    }
    println!("{:>5} {:>7} {:>7}", "all", summary.cases, summary.matches);
    for (case, verdict) in summary.failures.iter().take(20) {
        println!(
            "FAIL rule {} width {} sample {} row {}: {verdict:?}",
            case.rule, case.width, case.sample, case.row
        );
    }

    if summary.all_match() {
        Ok(0)
    } else if summary
        .failures
        .iter()
        .any(|(_, v)| matches!(v, Verdict::Mismatch { .. }))
    {
        Ok(EXIT_MISMATCH)
    } else {
        Ok(EXIT_FAULT)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Eca(a) => cmd_eca(a),
        Command::Check(a) => cmd_check(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("smm: {e}");
            ExitCode::from(e.code())
        }
    }
}
