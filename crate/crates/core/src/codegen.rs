//! Compiles an elementary cellular automaton run into a straight-line machine
//! program.
//!
//! Cells are nodes over the alphabet `n s e w`. A row is a ring linked by `e`
//! and `w`. Each cell's `n` edge carries its state: a self-loop is off, any
//! other target is on. Every cell of generation `t + 1` keeps an `s` edge to
//! the cell at the same index in generation `t`; an update block reads the
//! predecessor neighborhood through `s`, `sw` and `se` and writes only the
//! new cell's `n` edge.

use thiserror::Error;

use crate::asm::{parse, Instruction, JumpTarget, Program};
use crate::eca::{rule_table, Row, RuleNumber};
use crate::graph::{Alphabet, Direction, NodeId, Path, StorageGraph};
use crate::vm::{run_block, BlockError, Counters, Limits};

const LISTING1: &str = include_str!("../fixtures/listing1.smm");
const LISTING2: &str = include_str!("../fixtures/listing2.smm");

/// Paths an update block may read.
const BLOCK_READS: [&str; 6] = ["s", "sw", "se", "sn", "swn", "sen"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockShapeError {
    #[error("instruction {0}: update blocks may only contain set and if")]
    ForbiddenInstruction(usize),
    #[error("instruction {0}: jumps must be relative")]
    AbsoluteJump(usize),
    #[error("instruction {0}: jump leaves the block other than one past its end")]
    BadExit(usize),
    #[error("instruction {0}: update blocks may only write the center's n edge")]
    ForbiddenWrite(usize),
    #[error("instruction {0}: path `{1}` is outside the predecessor neighborhood")]
    ForbiddenRead(usize, String),
}

/// A relocatable instruction sequence computing one cell's next state.
///
/// Only `set` and `if` appear; every jump is relative and lands inside the
/// block or exactly one past its end; writes touch only the center's `n`
/// edge; reads stay within the predecessor's neighborhood.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateBlock(Vec<Instruction>);

impl UpdateBlock {
    pub fn new(instructions: Vec<Instruction>) -> Result<Self, BlockShapeError> {
        let alphabet = Alphabet::default();
        let allowed: Vec<Path> = std::iter::once(Path::empty())
            .chain(BLOCK_READS.iter().map(|p| Path::parse_in(p, &alphabet).expect("static path")))
            .collect();
        let len = instructions.len() as i64;
        for (i, ins) in instructions.iter().enumerate() {
            let pc = i + 1;
            let check_read = |p: &Path| {
                if allowed.contains(p) {
                    Ok(())
                } else {
                    Err(BlockShapeError::ForbiddenRead(pc, p.to_string()))
                }
            };
            match ins {
                Instruction::Set { x, d, y } => {
                    if !x.is_empty() || d.symbol() != 'n' {
                        return Err(BlockShapeError::ForbiddenWrite(pc));
                    }
                    check_read(y)?;
                }
                Instruction::If { x, y, target } => {
                    check_read(x)?;
                    check_read(y)?;
                    if !target.is_relative() {
                        return Err(BlockShapeError::AbsoluteJump(pc));
                    }
                    let t = target.resolve(pc);
                    if t < 1 || t > len + 1 {
                        return Err(BlockShapeError::BadExit(pc));
                    }
                }
                _ => return Err(BlockShapeError::ForbiddenInstruction(pc)),
            }
        }
        Ok(Self(instructions))
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The block as a standalone program over `n s e w`.
    pub fn to_program(&self) -> Program {
        Program::new(Alphabet::default(), self.0.clone()).expect("blocks only use n s e w")
    }
}

fn dir(c: char) -> Direction {
    Direction::new(c).expect("static direction")
}

fn path(s: &str) -> Path {
    Path::parse_in(s, &Alphabet::default()).expect("static path")
}

fn repeat(c: char, n: usize) -> Path {
    Path::new(vec![dir(c); n])
}

fn set(x: Path, d: char, y: Path) -> Instruction {
    Instruction::Set { x, d: dir(d), y }
}

fn if_eq(x: &str, y: &str, forward: usize) -> Instruction {
    Instruction::If {
        x: path(x),
        y: path(y),
        target: JumpTarget::Forward(forward),
    }
}

/// A decision tree over the predecessor neighborhood computing `rule`.
///
/// The layout is fixed for every rule (13 instructions): default the new
/// cell to on, test west, then center, then east, and jump either to a
/// trailing `set n` (off) or just past it (on).
pub fn gen_update_block(rule: RuleNumber) -> UpdateBlock {
    const SET_OFF: usize = 13;
    const EXIT: usize = 14;
    let table = rule_table(rule);
    let leaf = |pc: usize, w: usize, c: usize, e: usize| {
        let dest = if table[w << 2 | c << 1 | e] { EXIT } else { SET_OFF };
        dest - pc
    };
    // Tests are equal-paths checks, so a taken branch means "neighbor off".
    let mut code = vec![
        set(Path::empty(), 'n', path("s")), // 1: default on
        if_eq("swn", "sw", 6),              // 2: west off -> 8
        if_eq("sn", "s", 3),                // 3: center off -> 6
    ];
    // 4..7: west on; 9..12: west off.
    for (w, start) in [(1usize, 4usize), (0, 9)] {
        if w == 0 {
            code.push(if_eq("sn", "s", 3)); // 8: center off -> 11
        }
        for (c, pc) in [(1usize, start), (0, start + 2)] {
            code.push(if_eq("sen", "se", leaf(pc, w, c, 0)));
            code.push(if_eq("s", "s", leaf(pc + 1, w, c, 1)));
        }
    }
    code.push(set(Path::empty(), 'n', Path::empty())); // 13: off
    debug_assert_eq!(code.len(), SET_OFF);
    UpdateBlock::new(code).expect("generated block is well formed")
}

fn label(generation: usize, index: usize) -> Instruction {
    Instruction::New {
        label: Some(format!("c{generation}-{index}")),
    }
}

/// Closes the ring while centered on the last cell, then centers on cell 0.
fn ring_closure(width: usize, out: &mut Vec<Instruction>) {
    let back = repeat('w', width - 1);
    out.push(set(Path::empty(), 'e', back.clone()));
    out.push(set(back, 'w', Path::empty()));
    out.push(Instruction::Center { x: path("e") });
}

fn init_body(row: &Row) -> Vec<Instruction> {
    let mut code = Vec::new();
    for (i, &on) in row.cells().iter().enumerate() {
        code.push(label(0, i));
        if !on {
            code.push(set(Path::empty(), 'n', Path::empty()));
        }
        if i > 0 {
            code.push(set(path("w"), 'e', Path::empty()));
        }
    }
    ring_closure(row.width(), &mut code);
    code
}

/// Program building `row` as a ring on a fresh graph, leaving the center on cell 0.
pub fn gen_init(row: &Row) -> Program {
    let mut code = init_body(row);
    code.push(Instruction::Stop {
        message: String::new(),
    });
    Program::new(Alphabet::default(), code).expect("only n s e w used")
}

/// Instruction layout of a generated program.
#[derive(Debug, Clone)]
pub struct EmissionPlan {
    row: Row,
    iterations: usize,
    block: UpdateBlock,
}

impl EmissionPlan {
    pub fn new(row: Row, rule: RuleNumber, iterations: usize) -> Self {
        Self::with_block(row, gen_update_block(rule), iterations)
    }

    /// Uses a caller-supplied update block instead of the generated one.
    pub fn with_block(row: Row, block: UpdateBlock, iterations: usize) -> Self {
        Self {
            row,
            iterations,
            block,
        }
    }

    pub fn width(&self) -> usize {
        self.row.width()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn row(&self) -> &Row {
        &self.row
    }

    pub fn block(&self) -> &UpdateBlock {
        &self.block
    }

    /// Instructions emitted for generation 0, excluding the final stop.
    pub fn init_len(&self) -> usize {
        let w = self.width();
        let off = self.row.cells().iter().filter(|&&c| !c).count();
        w + off + (w - 1) + 3
    }

    /// Instructions emitted per iteration: `width * (block + 3) + 1`.
    pub fn iteration_len(&self) -> usize {
        let b = self.block.len();
        (b + 1) + (self.width() - 1) * (b + 3) + 3
    }

    /// 1-based index of the first instruction of generation `t`, for
    /// `1 <= t <= iterations`. `generation_start(iterations + 1)` is the final stop.
    pub fn generation_start(&self, t: usize) -> usize {
        assert!(t >= 1 && t <= self.iterations + 1, "generation {t} out of range");
        self.init_len() + (t - 1) * self.iteration_len() + 1
    }

    pub fn program_len(&self) -> usize {
        self.init_len() + self.iterations * self.iteration_len() + 1
    }

    pub fn emit(&self) -> Program {
        let width = self.width();
        let mut code = init_body(&self.row);
        for t in 1..=self.iterations {
            // Centered on the previous row's cell 0, so `new` points s there.
            code.push(label(t, 0));
            code.extend_from_slice(self.block.instructions());
            for i in 1..width {
                code.push(label(t, i));
                code.push(set(Path::empty(), 's', path("wse")));
                code.push(set(path("w"), 'e', Path::empty()));
                code.extend_from_slice(self.block.instructions());
            }
            ring_closure(width, &mut code);
        }
        code.push(Instruction::Stop {
            message: "done".to_owned(),
        });
        debug_assert_eq!(code.len(), self.program_len());
        Program::new(Alphabet::default(), code).expect("only n s e w used")
    }
}

/// Unrolled program that builds `row` and applies `rule` `iterations` times.
pub fn gen_program(row: &Row, rule: RuleNumber, iterations: usize) -> Program {
    EmissionPlan::new(row.clone(), rule, iterations).emit()
}

/// The seven-cell initial row builder, verbatim.
pub fn corpus_listing1() -> Program {
    parse(LISTING1).expect("listing1 fixture parses")
}

/// The hand-written Rule 110 update block, verbatim.
pub fn corpus_listing2() -> UpdateBlock {
    let program = parse(LISTING2).expect("listing2 fixture parses");
    UpdateBlock::new(program.into_instructions()).expect("listing2 fixture is a valid block")
}

/// A predecessor ring `W C E` (linked by `e`/`w`, off cells carry an `n`
/// self-loop, on cells point `n` at the Origin) plus a fresh cell whose `s`,
/// `e` and `w` edges point at `C` and whose `n` is a self-loop. The fresh cell
/// is the center; it is returned alongside the graph.
pub fn neighborhood_graph(west: bool, center: bool, east: bool) -> (StorageGraph, NodeId) {
    let mut g = StorageGraph::new(Alphabet::default());
    let origin = g.origin();
    let cells: Vec<NodeId> = ["W", "C", "E"]
        .into_iter()
        .map(|l| g.add_node(Some(l.to_owned()), origin).expect("origin exists"))
        .collect();
    for (i, &on) in [west, center, east].iter().enumerate() {
        let node = cells[i];
        g.set_edge(node, dir('e'), cells[(i + 1) % 3]).expect("ring");
        g.set_edge(node, dir('w'), cells[(i + 2) % 3]).expect("ring");
        g.set_edge(node, dir('n'), if on { origin } else { node }).expect("state");
    }
    let fresh = g.add_node(Some("N".to_owned()), cells[1]).expect("C exists");
    g.set_edge(fresh, dir('n'), fresh).expect("fresh");
    g.set_center(fresh).expect("fresh");
    (g, fresh)
}

/// The next-state table a block computes, indexed by `4*west + 2*center + east`,
/// found by running it on each of the eight [`neighborhood_graph`]s.
pub fn block_truth_table(block: &UpdateBlock) -> Result<[bool; 8], BlockError> {
    let mut table = [false; 8];
    for (idx, slot) in table.iter_mut().enumerate() {
        let (mut g, fresh) = neighborhood_graph(idx & 4 != 0, idx & 2 != 0, idx & 1 != 0);
        run_block(&mut g, block.instructions(), &Limits::default(), &mut Counters::default())?;
        *slot = g.edge(fresh, dir('n')).expect("n is declared") != Some(fresh);
    }
    Ok(table)
}

/// Raw text of the fixtures, for round-trip tests and the CLI.
pub fn corpus_sources() -> [(&'static str, &'static str); 2] {
    [("listing1.smm", LISTING1), ("listing2.smm", LISTING2)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::render;

    #[test]
    fn listings_parse() {
        let l1 = corpus_listing1();
        assert_eq!(l1.len(), 23);
        assert_eq!(l1.instructions()[10], Instruction::Center { x: path("www") });
        let l2 = corpus_listing2();
        assert_eq!(l2.len(), 15);
        assert_eq!(l2.instructions()[0], set(Path::empty(), 'n', path("s")));
        assert_eq!(l2.instructions()[13], Instruction::If {
            x: path("sen"),
            y: path("se"),
            target: JumpTarget::Backward(2),
        });
    }

    #[test]
    fn listing2_decodes_to_rule_110() {
        assert_eq!(block_truth_table(&corpus_listing2()).unwrap(), rule_table(RuleNumber::new(110)));
    }

    #[test]
    fn generated_tables() {
        for rule in [0u8, 110, 204, 255, 30] {
            let rule = RuleNumber::new(rule);
            assert_eq!(block_truth_table(&gen_update_block(rule)).unwrap(), rule_table(rule));
        }
    }

    #[test]
    fn block_shape_rejections() {
        let bad = |src: &str| UpdateBlock::new(parse(src).unwrap().into_instructions()).unwrap_err();
        assert_eq!(bad("new"), BlockShapeError::ForbiddenInstruction(1));
        assert_eq!(bad("if s s 1"), BlockShapeError::AbsoluteJump(1));
        assert_eq!(bad("if s s +3"), BlockShapeError::BadExit(1));
        assert_eq!(bad("set n\nif s s -2"), BlockShapeError::BadExit(2));
        assert_eq!(bad("set sn"), BlockShapeError::ForbiddenWrite(1));
        assert_eq!(bad("set e"), BlockShapeError::ForbiddenWrite(1));
        assert_eq!(bad("set n ss"), BlockShapeError::ForbiddenRead(1, "ss".into()));
    }

    #[test]
    fn generated_blocks_have_fixed_shape() {
        for rule in RuleNumber::all() {
            let b = gen_update_block(rule);
            assert_eq!(b.len(), 13);
            assert!(b.instructions().iter().all(|i| matches!(i, Instruction::Set { .. } | Instruction::If { .. })));
        }
    }

    #[test]
    fn block_110_text() {
        let text = render(&gen_update_block(RuleNumber::new(110)).to_program());
        assert_eq!(
            text,
            "1 set n s\n2 if swn sw +6\n3 if sn s +3\n4 if sen se +10\n5 if s s +8\n\
             6 if sen se +7\n7 if s s +7\n8 if sn s +3\n9 if sen se +5\n10 if s s +4\n\
             11 if sen se +2\n12 if s s +2\n13 set n\n"
        );
    }

    #[test]
    fn init_layout() {
        let p = gen_init(&"0001000".parse().unwrap());
        assert_eq!(
            render(&p),
            "1 new c0-0\n2 set n\n3 new c0-1\n4 set n\n5 set we\n6 new c0-2\n7 set n\n8 set we\n\
             9 new c0-3\n10 set we\n11 new c0-4\n12 set n\n13 set we\n14 new c0-5\n15 set n\n16 set we\n\
             17 new c0-6\n18 set n\n19 set we\n20 set e wwwwww\n21 set wwwwwww\n22 ctr e\n23 stop\n"
        );
        let single = gen_init(&"1".parse().unwrap());
        assert_eq!(render(&single), "1 new c0-0\n2 set e\n3 set w\n4 ctr e\n5 stop\n");
    }

    #[test]
    fn plan_arithmetic() {
        let row: Row = "0001000".parse().unwrap();
        let plan = EmissionPlan::new(row.clone(), RuleNumber::new(110), 3);
        assert_eq!(plan.iteration_len(), 16 * 7 + 1);
        let listing = EmissionPlan::with_block(row, corpus_listing2(), 3);
        assert_eq!(listing.iteration_len(), 127);
        for p in [&plan, &listing] {
            let prog = p.emit();
            assert_eq!(prog.len(), p.program_len());
            assert_eq!(p.init_len(), 22);
            assert_eq!(prog.get(p.generation_start(1)), Some(&label(1, 0)));
            assert_eq!(prog.get(p.generation_start(3)), Some(&label(3, 0)));
            assert!(matches!(prog.get(p.generation_start(4)), Some(Instruction::Stop { .. })));
        }
    }
}
