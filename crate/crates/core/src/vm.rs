//! Stepping interpreter.
//!
//! A [`Machine`] owns a program and the graph it rewrites. Each step executes
//! exactly one instruction. Jumping past the last instruction halts cleanly;
//! jumping below line 1 faults. `if` compares resolved paths with `Nil`
//! treated as an ordinary value, while `set` and `center` fault on `Nil`.

use std::fmt;

use thiserror::Error;

use crate::asm::{Instruction, Program};
use crate::graph::{Direction, NodeId, NodeRef, StorageGraph};

/// Execution budget for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Instructions executed before the machine faults with [`FaultKind::StepLimit`].
    pub max_steps: u64,
    /// Nodes the machine may create before faulting with [`FaultKind::NodeLimit`].
    pub max_nodes: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_steps: 10_000_000,
            max_nodes: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HaltReason {
    Stop(String),
    EndOfProgram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultKind {
    InvalidPathInSet,
    InvalidPathInCenter,
    JumpBeforeStart,
    StepLimit,
    NodeLimit,
}

impl FaultKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FaultKind::InvalidPathInSet => "invalid path in set",
            FaultKind::InvalidPathInCenter => "invalid path in center",
            FaultKind::JumpBeforeStart => "jump before start",
            FaultKind::StepLimit => "step limit",
            FaultKind::NodeLimit => "node limit",
        }
    }
}

/// A runtime fault at a 1-based instruction index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{} at instruction {at}", kind.as_str())]
pub struct Fault {
    pub kind: FaultKind,
    pub at: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MachineStatus {
    Running,
    Halted(HaltReason),
    Faulted(Fault),
}

impl MachineStatus {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, MachineStatus::Running)
    }
}

impl fmt::Display for MachineStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MachineStatus::Running => f.write_str("running"),
            MachineStatus::Halted(HaltReason::Stop(m)) if m.is_empty() => f.write_str("halted: stop"),
            MachineStatus::Halted(HaltReason::Stop(m)) => write!(f, "halted: stop \"{m}\""),
            MachineStatus::Halted(HaltReason::EndOfProgram) => f.write_str("halted: end of program"),
            MachineStatus::Faulted(fault) => write!(f, "faulted: {fault}"),
        }
    }
}

/// Work done so far. Only instructions that complete without faulting count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub steps: u64,
    pub nodes_created: u64,
}

/// One executed instruction, as seen by a tracer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub pc: usize,
    pub instruction: Instruction,
    /// `new`: the created node. `set`/`if`: p(x), p(y). `ctr`: p(x).
    pub operands: Vec<NodeRef>,
    pub center_before: NodeId,
    pub center_after: NodeId,
    /// `Some(taken)` for `if`.
    pub branch: Option<bool>,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>5} {}", self.pc, self.instruction)?;
        if !self.operands.is_empty() {
            f.write_str(" |")?;
            for op in &self.operands {
                write!(f, " {op}")?;
            }
        }
        write!(f, " | center {}->{}", self.center_before, self.center_after)?;
        match self.branch {
            Some(true) => f.write_str(" | taken"),
            Some(false) => f.write_str(" | not taken"),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VmError {
    #[error("program uses direction `{0}` which the graph does not declare")]
    AlphabetMismatch(Direction),
    #[error("machine is not running ({0})")]
    NotRunning(MachineStatus),
}

enum Flow {
    Next,
    Goto(i64),
    Stop(String),
}

struct Effect {
    flow: Flow,
    operands: [Option<NodeRef>; 2],
    branch: Option<bool>,
}

/// Applies one instruction's effect to `graph`.
fn exec(
    graph: &mut StorageGraph,
    ins: &Instruction,
    pc: usize,
    counters: &mut Counters,
    limits: &Limits,
) -> Result<Effect, FaultKind> {
    if counters.steps >= limits.max_steps {
        return Err(FaultKind::StepLimit);
    }
    let effect = match ins {
        Instruction::New { label } => {
            if counters.nodes_created >= limits.max_nodes {
                return Err(FaultKind::NodeLimit);
            }
            let prev = graph.center();
            let id = graph
                .add_node(label.clone(), prev)
                .expect("center always names an existing node");
            graph.set_center(id).expect("fresh node exists");
            counters.nodes_created += 1;
            Effect {
                flow: Flow::Next,
                operands: [Some(NodeRef::Node(id)), None],
                branch: None,
            }
        }
        Instruction::Set { x, d, y } => {
            let (px, py) = (graph.resolve(x), graph.resolve(y));
            let (Some(node), Some(target)) = (px.node(), py.node()) else {
                return Err(FaultKind::InvalidPathInSet);
            };
            graph
                .set_edge(node, *d, target)
                .expect("resolved nodes exist and d was checked at load");
            Effect {
                flow: Flow::Next,
                operands: [Some(px), Some(py)],
                branch: None,
            }
        }
        Instruction::Center { x } => {
            let px = graph.resolve(x);
            let node = px.node().ok_or(FaultKind::InvalidPathInCenter)?;
            graph.set_center(node).expect("resolved node exists");
            Effect {
                flow: Flow::Next,
                operands: [Some(px), None],
                branch: None,
            }
        }
        Instruction::If { x, y, target } => {
            let (px, py) = (graph.resolve(x), graph.resolve(y));
            let taken = px == py;
            let t = target.resolve(pc);
            if taken && t < 1 {
                return Err(FaultKind::JumpBeforeStart);
            }
            Effect {
                flow: if taken { Flow::Goto(t) } else { Flow::Next },
                operands: [Some(px), Some(py)],
                branch: Some(taken),
            }
        }
        Instruction::Stop { message } => Effect {
            flow: Flow::Stop(message.clone()),
            operands: [None, None],
            branch: None,
        },
    };
    counters.steps += 1;
    Ok(effect)
}

fn check_alphabet<'a>(
    instructions: impl IntoIterator<Item = &'a Instruction>,
    graph: &StorageGraph,
) -> Result<(), VmError> {
    for ins in instructions {
        if let Some(d) = ins.directions().into_iter().find(|&d| !graph.alphabet().contains(d)) {
            return Err(VmError::AlphabetMismatch(d));
        }
    }
    Ok(())
}

/// How a block finished.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockExit {
    /// Control left the block past its last instruction.
    FellThrough,
    /// The block executed `stop`.
    Stopped(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockError {
    #[error("block uses direction `{0}` which the graph does not declare")]
    AlphabetMismatch(Direction),
    #[error(transparent)]
    Fault(#[from] Fault),
}

/// Executes `block` against `graph` as if it were spliced in at the current
/// point. Any jump beyond the block's end is a normal exit. Fault positions
/// are block-relative.
pub fn run_block(
    graph: &mut StorageGraph,
    block: &[Instruction],
    limits: &Limits,
    counters: &mut Counters,
) -> Result<BlockExit, BlockError> {
    check_alphabet(block, graph).map_err(|e| match e {
        VmError::AlphabetMismatch(d) => BlockError::AlphabetMismatch(d),
        VmError::NotRunning(_) => unreachable!("alphabet check only reports mismatches"),
    })?;
    Ok(exec_block(graph, block, limits, counters)?)
}

fn exec_block(
    graph: &mut StorageGraph,
    block: &[Instruction],
    limits: &Limits,
    counters: &mut Counters,
) -> Result<BlockExit, Fault> {
    let len = block.len() as i64;
    let mut pc: i64 = 1;
    while pc <= len {
        let at = pc as usize;
        let effect = exec(graph, &block[at - 1], at, counters, limits).map_err(|kind| Fault { kind, at })?;
        pc = match effect.flow {
            Flow::Next => pc + 1,
            Flow::Goto(t) => t,
            Flow::Stop(msg) => return Ok(BlockExit::Stopped(msg)),
        };
    }
    Ok(BlockExit::FellThrough)
}

/// Program + graph + control state.
#[derive(Debug, Clone)]
pub struct Machine {
    graph: StorageGraph,
    program: Program,
    pc: usize,
    status: MachineStatus,
    counters: Counters,
    limits: Limits,
}

impl Machine {
    /// Prepares `program` to run on `graph` with default limits.
    pub fn load(program: Program, graph: StorageGraph) -> Result<Self, VmError> {
        if let Some(d) = program.alphabet().iter().find(|d| !graph.alphabet().contains(*d)) {
            return Err(VmError::AlphabetMismatch(d));
        }
        check_alphabet(program.instructions(), &graph)?;
        let status = if program.is_empty() {
            MachineStatus::Halted(HaltReason::EndOfProgram)
        } else {
            MachineStatus::Running
        };
        Ok(Self {
            graph,
            program,
            pc: 1,
            status,
            counters: Counters::default(),
            limits: Limits::default(),
        })
    }

    pub fn graph(&self) -> &StorageGraph {
        &self.graph
    }

    pub fn into_graph(self) -> StorageGraph {
        self.graph
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn pc(&self) -> usize {
        self.pc
    }

    pub fn status(&self) -> &MachineStatus {
        &self.status
    }

    pub fn is_running(&self) -> bool {
        self.status == MachineStatus::Running
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    pub fn set_limits(&mut self, limits: Limits) {
        self.limits = limits;
    }

    fn advance(&mut self, flow: Flow) {
        let len = self.program.len();
        match flow {
            Flow::Next => self.pc += 1,
            Flow::Goto(t) => self.pc = usize::try_from(t).expect("negative targets fault in exec"),
            Flow::Stop(msg) => {
                self.status = MachineStatus::Halted(HaltReason::Stop(msg));
                return;
            }
        }
        if self.pc > len {
            self.status = MachineStatus::Halted(HaltReason::EndOfProgram);
        }
    }

    fn step_inner(&mut self, trace: bool) -> Result<Option<TraceEvent>, VmError> {
        if self.status.is_terminal() {
            return Err(VmError::NotRunning(self.status.clone()));
        }
        let pc = self.pc;
        let center_before = self.graph.center();
        let ins = &self.program.instructions()[pc - 1];
        match exec(&mut self.graph, ins, pc, &mut self.counters, &self.limits) {
            Ok(effect) => {
                let event = trace.then(|| TraceEvent {
                    pc,
                    instruction: ins.clone(),
                    operands: effect.operands.iter().flatten().copied().collect(),
                    center_before,
                    center_after: self.graph.center(),
                    branch: effect.branch,
                });
                self.advance(effect.flow);
                Ok(event)
            }
            Err(kind) => {
                self.status = MachineStatus::Faulted(Fault { kind, at: pc });
                Ok(None)
            }
        }
    }

    /// Executes one instruction. Faults become the machine's status; stepping
    /// a halted or faulted machine is an error.
    pub fn step(&mut self) -> Result<(), VmError> {
        self.step_inner(false).map(|_| ())
    }

    /// Like [`Machine::step`], returning a trace event unless the step faulted.
    pub fn step_traced(&mut self) -> Result<Option<TraceEvent>, VmError> {
        self.step_inner(true)
    }

    /// Steps until the machine halts or faults.
    pub fn run(&mut self, limits: Limits) -> &MachineStatus {
        self.limits = limits;
        while self.is_running() {
            self.step_inner(false).expect("running machine accepts a step");
        }
        &self.status
    }

    /// [`Machine::run`], handing every executed instruction to `sink` in order.
    pub fn run_traced(&mut self, limits: Limits, mut sink: impl FnMut(&TraceEvent)) -> &MachineStatus {
        self.limits = limits;
        while self.is_running() {
            if let Some(ev) = self.step_inner(true).expect("running machine accepts a step") {
                sink(&ev);
            }
        }
        &self.status
    }

    /// Runs `block` against this machine's graph without moving the program
    /// counter. Counters and limits are shared with the main program. A fault
    /// inside the block faults the machine, reported at the block-relative index.
    pub fn run_block(&mut self, block: &[Instruction]) -> Result<BlockExit, VmError> {
        if self.status.is_terminal() {
            return Err(VmError::NotRunning(self.status.clone()));
        }
        check_alphabet(block, &self.graph)?;
        match exec_block(&mut self.graph, block, &self.limits, &mut self.counters) {
            Ok(BlockExit::Stopped(msg)) => {
                self.status = MachineStatus::Halted(HaltReason::Stop(msg.clone()));
                Ok(BlockExit::Stopped(msg))
            }
            Ok(exit) => Ok(exit),
            Err(fault) => {
                self.status = MachineStatus::Faulted(fault);
                Err(VmError::NotRunning(self.status.clone()))
            }
        }
    }
}
