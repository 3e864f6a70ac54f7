//! Differential harness: runs generated programs and compares every
//! generation against the array simulator.

use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::asm::render;
use crate::codegen::{EmissionPlan, UpdateBlock};
use crate::eca::{evolve, Row, RuleNumber};
use crate::graph::{Alphabet, Direction, NodeId, StorageGraph};
use crate::vm::{HaltReason, Limits, Machine, MachineStatus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("width must be at least 1")]
    ZeroWidth,
    #[error("node {0} is missing its `{1}` edge")]
    MissingEdge(NodeId, char),
    #[error("e-walk from {start} does not close into a ring of {width} nodes")]
    MalformedRing { start: NodeId, width: usize },
}

/// Reads `width` cells walking `e` from `start`: bit `i` is 0 when the
/// `i`-th node's `n` edge is a self-loop, 1 otherwise.
pub fn extract_row(graph: &StorageGraph, start: NodeId, width: usize) -> Result<Row, ExtractError> {
    if width == 0 {
        return Err(ExtractError::ZeroWidth);
    }
    let n = Direction::new('n').expect("static");
    let e = Direction::new('e').expect("static");
    let edge = |node: NodeId, d: Direction| -> Result<NodeId, ExtractError> {
        graph
            .edge(node, d)
            .ok()
            .flatten()
            .ok_or(ExtractError::MissingEdge(node, d.symbol()))
    };
    let mut cells = Vec::with_capacity(width);
    let mut at = start;
    for i in 0..width {
        if i > 0 && at == start {
            return Err(ExtractError::MalformedRing { start, width });
        }
        cells.push(edge(at, n)? != at);
        at = edge(at, e)?;
    }
    if at != start {
        return Err(ExtractError::MalformedRing { start, width });
    }
    Ok(Row::new(cells).expect("width >= 1"))
}

/// Outcome of comparing a machine run against the oracle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Match,
    Mismatch { generation: usize, cell: usize },
    Fault { fault: String, at: usize },
}

impl Verdict {
    pub fn is_match(&self) -> bool {
        *self == Verdict::Match
    }
}

/// Everything learned from one differential run. Wall-clock time lives in
/// `timing` so the rest can be compared byte for byte.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub program_sha256: String,
    pub program_len: usize,
    pub rule: u8,
    pub width: usize,
    pub iterations: usize,
    pub initial_row: String,
    pub status: String,
    pub stop_message: Option<String>,
    pub steps: u64,
    pub nodes_created: u64,
    /// Reachable nodes once each generation is complete, generation 0 first.
    pub reachable_per_generation: Vec<usize>,
    pub final_reachable: usize,
    /// Rows read back from the graph, generation 0 first.
    pub rows: Vec<String>,
    pub oracle_rows: Vec<String>,
    pub verdict: Verdict,
    pub timing: Timing,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_micros: u64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// The report with timing cleared.
    pub fn without_timing(&self) -> RunReport {
        RunReport {
            timing: Timing::default(),
            ..self.clone()
        }
    }
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Result of [`diff_run`]: the report plus the final machine, for DOT dumps.
pub struct DiffRun {
    pub report: RunReport,
    pub machine: Machine,
}

/// Generates, runs and verifies `iterations` steps of `rule` from `row`.
pub fn diff_run(row: &Row, rule: RuleNumber, iterations: usize, limits: Limits) -> DiffRun {
    run_plan(&EmissionPlan::new(row.clone(), rule, iterations), rule, limits)
}

/// [`diff_run`] with a caller-supplied update block, which is still judged
/// against `rule`. Used to check that broken blocks are caught.
pub fn diff_run_with_block(
    row: &Row,
    rule: RuleNumber,
    block: UpdateBlock,
    iterations: usize,
    limits: Limits,
) -> DiffRun {
    run_plan(&EmissionPlan::with_block(row.clone(), block, iterations), rule, limits)
}

fn run_plan(plan: &EmissionPlan, rule: RuleNumber, limits: Limits) -> DiffRun {
    let started = Instant::now();
    let program = plan.emit();
    let program_sha256 = sha256_hex(&render(&program));
    let program_len = program.len();
    let width = plan.width();
    let iterations = plan.iterations();

    let mut machine = Machine::load(program, StorageGraph::new(Alphabet::default()))
        .expect("generated programs use the default alphabet");
    machine.set_limits(limits);

    // Generation t is complete when the pc reaches the start of t + 1.
    let mut boundaries = (1..=iterations + 1).map(|t| plan.generation_start(t)).peekable();
    let mut reachable_per_generation = Vec::with_capacity(iterations + 1);
    while machine.is_running() {
        if boundaries.peek() == Some(&machine.pc()) {
            boundaries.next();
            reachable_per_generation.push(machine.graph().reachable_count());
        }
        machine.step().expect("running machine accepts a step");
    }

    let oracle = evolve(plan.row(), rule, iterations);
    let (status, stop_message) = match machine.status() {
        MachineStatus::Halted(HaltReason::Stop(m)) => ("halted".to_owned(), Some(m.clone())),
        MachineStatus::Halted(HaltReason::EndOfProgram) => ("halted".to_owned(), None),
        MachineStatus::Faulted(_) => ("faulted".to_owned(), None),
        MachineStatus::Running => unreachable!("loop exits on terminal status"),
    };

    let mut rows = Vec::new();
    let verdict = match machine.status() {
        MachineStatus::Faulted(f) => Verdict::Fault {
            fault: f.kind.as_str().to_owned(),
            at: f.at,
        },
        _ => match read_generations(machine.graph(), width, iterations) {
            Ok(extracted) => {
                rows = extracted.iter().map(Row::to_string).collect();
                first_mismatch(&extracted, &oracle)
            }
            Err(_) => Verdict::Mismatch {
                generation: iterations,
                cell: 0,
            },
        },
    };

    let counters = machine.counters();
    let report = RunReport {
        program_sha256,
        program_len,
        rule: rule.value(),
        width,
        iterations,
        initial_row: plan.row().to_string(),
        status,
        stop_message,
        steps: counters.steps,
        nodes_created: counters.nodes_created,
        reachable_per_generation,
        final_reachable: machine.graph().reachable_count(),
        rows,
        oracle_rows: oracle.iter().map(Row::to_string).collect(),
        verdict,
        timing: Timing {
            wall_micros: started.elapsed().as_micros() as u64,
        },
    };
    DiffRun { report, machine }
}

/// Reads generations `0..=iterations` from a finished graph: the center is
/// cell 0 of the last generation and each cell 0 reaches its predecessor by `s`.
pub fn read_generations(
    graph: &StorageGraph,
    width: usize,
    iterations: usize,
) -> Result<Vec<Row>, ExtractError> {
    let s = Direction::new('s').expect("static");
    let mut rows = Vec::with_capacity(iterations + 1);
    let mut start = graph.center();
    for t in (0..=iterations).rev() {
        rows.push(extract_row(graph, start, width)?);
        if t > 0 {
            start = graph
                .edge(start, s)
                .ok()
                .flatten()
                .ok_or(ExtractError::MissingEdge(start, 's'))?;
        }
    }
    rows.reverse();
    Ok(rows)
}

fn first_mismatch(extracted: &[Row], oracle: &[Row]) -> Verdict {
    for (g, (got, want)) in extracted.iter().zip(oracle).enumerate() {
        if let Some(cell) = got.first_difference(want) {
            return Verdict::Mismatch { generation: g, cell };
        }
    }
    if extracted.len() != oracle.len() {
        return Verdict::Mismatch {
            generation: extracted.len().min(oracle.len()),
            cell: 0,
        };
    }
    Verdict::Match
}

/// Generations stacked top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpacetimeDiagram {
    rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("row {index} has width {found}, expected {expected}")]
pub struct RaggedDiagram {
    pub index: usize,
    pub expected: usize,
    pub found: usize,
}

impl SpacetimeDiagram {
    pub fn new(rows: Vec<Row>) -> Result<Self, RaggedDiagram> {
        if let Some(first) = rows.first() {
            let expected = first.width();
            if let Some((index, r)) = rows.iter().enumerate().find(|(_, r)| r.width() != expected) {
                return Err(RaggedDiagram {
                    index,
                    expected,
                    found: r.width(),
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagramFormat {
    /// `.` for off, `#` for on, one generation per line.
    Text,
    /// Plain PBM (`P1`).
    Pbm,
}

pub fn render_spacetime(diagram: &SpacetimeDiagram, format: DiagramFormat) -> Vec<u8> {
    let mut out = String::new();
    match format {
        DiagramFormat::Text => {
            for row in &diagram.rows {
                out.extend(row.cells().iter().map(|&c| if c { '#' } else { '.' }));
                out.push('\n');
            }
        }
        DiagramFormat::Pbm => {
            let width = diagram.rows.first().map_or(0, Row::width);
            let _ = writeln!(out, "P1\n{width} {}", diagram.rows.len());
            for row in &diagram.rows {
                let bits: Vec<&str> = row.cells().iter().map(|&c| if c { "1" } else { "0" }).collect();
                out.push_str(&bits.join(" "));
                out.push('\n');
            }
        }
    }
    out.into_bytes()
}

/// Parameters for an all-rules differential sweep.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub rules: RangeInclusive<u8>,
    pub widths: RangeInclusive<usize>,
    pub iterations: usize,
    /// Random initial rows per (rule, width).
    pub samples: usize,
    pub seed: u64,
    pub limits: Limits,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            rules: 0..=255,
            widths: 3..=16,
            iterations: 16,
            samples: 4,
            seed: 110,
            limits: Limits::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepCase {
    pub rule: u8,
    pub width: usize,
    pub sample: usize,
    pub row: Row,
}

/// Initial row for one sweep case. Depends only on the seed and the case
/// coordinates, so cases can run in any order.
pub fn sweep_row(seed: u64, rule: u8, width: usize, sample: usize) -> Row {
    let case_seed = seed ^ ((rule as u64) << 48 | (width as u64) << 24 | sample as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
    Row::random(width, &mut rng).expect("sweep widths are >= 1")
}

pub fn sweep_cases(config: &SweepConfig) -> Vec<SweepCase> {
    let mut cases = Vec::new();
    for rule in config.rules.clone() {
        for width in config.widths.clone() {
            for sample in 0..config.samples {
                cases.push(SweepCase {
                    rule,
                    width,
                    sample,
                    row: sweep_row(config.seed, rule, width, sample),
                });
            }
        }
    }
    cases
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WidthSummary {
    pub width: usize,
    pub cases: usize,
    pub matches: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSummary {
    pub cases: usize,
    pub matches: usize,
    pub by_width: Vec<WidthSummary>,
    /// Failing cases, in case order.
    pub failures: Vec<(SweepCase, Verdict)>,
}

impl SweepSummary {
    pub fn all_match(&self) -> bool {
        self.cases == self.matches
    }
}

/// Runs every case in parallel and reduces to a summary.
pub fn sweep(config: &SweepConfig) -> SweepSummary {
    let cases = sweep_cases(config);
    let verdicts: Vec<Verdict> = cases
        .par_iter()
        .map(|c| {
            diff_run(&c.row, RuleNumber::new(c.rule), config.iterations, config.limits)
                .report
                .verdict
        })
        .collect();

    let by_width = config
        .widths
        .clone()
        .map(|width| {
            let (cases_w, matches) = cases
                .iter()
                .zip(&verdicts)
                .filter(|(c, _)| c.width == width)
                .fold((0, 0), |(n, m), (_, v)| (n + 1, m + v.is_match() as usize));
            WidthSummary {
                width,
                cases: cases_w,
                matches,
            }
        })
        .collect();
    let matches = verdicts.iter().filter(|v| v.is_match()).count();
    let failures = cases
        .into_iter()
        .zip(verdicts)
        .filter(|(_, v)| !v.is_match())
        .collect::<Vec<_>>();
    SweepSummary {
        cases: matches + failures.len(),
        matches,
        by_width,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::{corpus_listing1, gen_update_block};

    fn row(s: &str) -> Row {
        s.parse().unwrap()
    }

    #[test]
    fn extract_after_listing1() {
        let mut m = Machine::load(corpus_listing1(), StorageGraph::new(Alphabet::default())).unwrap();
        m.run(Limits::default());
        let g = m.graph();
        assert_eq!(extract_row(g, g.center(), 7).unwrap(), row("0001000"));
        assert!(matches!(
            extract_row(g, g.center(), 6),
            Err(ExtractError::MalformedRing { .. })
        ));
        assert!(matches!(
            extract_row(g, g.center(), 8),
            Err(ExtractError::MalformedRing { .. })
        ));
        assert_eq!(extract_row(g, g.center(), 0), Err(ExtractError::ZeroWidth));
        assert!(matches!(
            extract_row(g, g.origin(), 1),
            Err(ExtractError::MissingEdge(_, 'n'))
        ));
    }

    #[test]
    fn all_self_loops_read_as_zero() {
        let mut g = StorageGraph::new(Alphabet::default());
        let a = g.add_node(None, g.origin()).unwrap();
        let b = g.add_node(None, a).unwrap();
        for (x, y) in [(a, b), (b, a)] {
            g.set_edge(x, Direction::new('n').unwrap(), x).unwrap();
            g.set_edge(x, Direction::new('e').unwrap(), y).unwrap();
        }
        assert_eq!(extract_row(&g, a, 2).unwrap(), row("00"));
    }

    #[test]
    fn diff_run_matches_oracle() {
        let run = diff_run(&row("0001000"), RuleNumber::new(110), 5, Limits::default());
        let r = &run.report;
        assert_eq!(r.verdict, Verdict::Match);
        assert_eq!(r.rows[1], "0011000");
        assert_eq!(r.reachable_per_generation, vec![8, 15, 22, 29, 36, 43]);
        assert_eq!(r.final_reachable, 43);
        assert_eq!(r.stop_message.as_deref(), Some("done"));
        assert_eq!(r.nodes_created, 42);
    }

    #[test]
    fn identity_rule_keeps_generation_zero() {
        let start = row("1101001");
        let run = diff_run(&start, RuleNumber::new(204), 5, Limits::default());
        assert!(run.report.verdict.is_match());
        assert!(run.report.rows.iter().all(|r| *r == start.to_string()));
    }

    #[test]
    fn corrupted_block_is_caught() {
        // Rule 111 differs from 110 only on 000 -> 1.
        let run = diff_run_with_block(
            &row("0001000"),
            RuleNumber::new(110),
            gen_update_block(RuleNumber::new(111)),
            3,
            Limits::default(),
        );
        assert_eq!(run.report.verdict, Verdict::Mismatch { generation: 1, cell: 0 });
    }

    #[test]
    fn faults_surface_in_the_verdict() {
        let limits = Limits { max_steps: 50, ..Limits::default() };
        let run = diff_run(&row("0001000"), RuleNumber::new(110), 2, limits);
        assert_eq!(run.report.status, "faulted");
        assert!(matches!(run.report.verdict, Verdict::Fault { ref fault, .. } if fault == "step limit"));
        assert_eq!(run.report.steps, 50);
    }

    #[test]
    fn report_json_round_trip() {
        let run = diff_run(&row("0110"), RuleNumber::new(30), 3, Limits::default());
        let json = run.report.to_json();
        assert_eq!(RunReport::from_json(&json).unwrap(), run.report);
        assert!(json.find("\"program_sha256\"").unwrap() < json.find("\"verdict\"").unwrap());
    }

    #[test]
    fn diagrams() {
        let d = SpacetimeDiagram::new(vec![row("0101")]).unwrap();
        assert_eq!(render_spacetime(&d, DiagramFormat::Text), b".#.#\n");
        let d = SpacetimeDiagram::new(vec![row("11"), row("11")]).unwrap();
        assert_eq!(render_spacetime(&d, DiagramFormat::Pbm), b"P1\n2 2\n1 1\n1 1\n");
        let d = SpacetimeDiagram::new(evolve(&row("0001000"), RuleNumber::new(110), 2)).unwrap();
        assert_eq!(
            render_spacetime(&d, DiagramFormat::Text),
            b"...#...\n..##...\n.###...\n"
        );
        assert_eq!(
            SpacetimeDiagram::new(vec![row("1"), row("10")]),
            Err(RaggedDiagram { index: 1, expected: 1, found: 2 })
        );
    }

    #[test]
    fn sweep_rows_depend_only_on_coordinates() {
        assert_eq!(sweep_row(7, 110, 11, 2), sweep_row(7, 110, 11, 2));
        assert_ne!(sweep_row(7, 110, 11, 2), sweep_row(7, 110, 11, 3));
    }

    #[test]
    fn small_sweep() {
        let config = SweepConfig {
            rules: 100..=103,
            widths: 1..=4,
            iterations: 4,
            samples: 2,
            ..SweepConfig::default()
        };
        let summary = sweep(&config);
        assert_eq!(summary.cases, 32);
        assert!(summary.all_match(), "{:?}", summary.failures);
        assert_eq!(summary.by_width.len(), 4);
        assert!(summary.by_width.iter().all(|w| w.cases == 8 && w.matches == 8));
    }
}
