//! Storage modification machines and elementary cellular automata.
//!
//! - [`graph`]: the pointer-graph memory with a movable center.
//! - [`asm`]: the text format for machine programs.
//! - [`vm`]: a stepping interpreter with limits and tracing.
//! - [`eca`]: a direct array simulator for the 256 elementary rules.
//! - [`codegen`]: compiles a rule and an initial row into a machine program.
//! - [`harness`]: runs generated programs and checks them against [`eca`].

pub mod asm;
pub mod codegen;
pub mod eca;
pub mod graph;
pub mod harness;
pub mod vm;

pub use asm::{parse, render, validate, Instruction, JumpTarget, Program};
pub use eca::{Row, RuleNumber};
pub use graph::{Alphabet, Direction, NodeId, NodeRef, Path, StorageGraph};
pub use vm::{Fault, FaultKind, HaltReason, Limits, Machine, MachineStatus};
