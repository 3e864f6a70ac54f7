//! The two hand-written programs, executed and decoded.

mod common;

use common::{dir, path, run_listing1};
use smm_core::asm::{validate, DiagnosticKind, Severity};
use smm_core::codegen::{block_truth_table, corpus_listing1, corpus_listing2, gen_update_block};
use smm_core::eca::rule_table;
use smm_core::harness::extract_row;
use smm_core::{Alphabet, HaltReason, Limits, Machine, MachineStatus, NodeRef, RuleNumber, StorageGraph};

#[test]
fn listing1_halts_after_23_steps() {
    let m = run_listing1();
    assert_eq!(m.status(), &MachineStatus::Halted(HaltReason::Stop(String::new())));
    assert_eq!(m.counters().steps, 23);
    assert_eq!(m.counters().nodes_created, 7);
    assert_eq!(m.graph().reachable_count(), 8);
}

#[test]
fn listing1_builds_a_ring() {
    let m = run_listing1();
    let g = m.graph();
    let center = NodeRef::Node(g.center());
    assert_eq!(g.resolve(&path("eeeeeee")), center);
    assert_eq!(g.resolve(&path("wwwwwww")), center);
    for k in 1..7 {
        let e = "e".repeat(k);
        assert_ne!(g.resolve(&path(&e)), center, "ring shorter than 7 at e^{k}");
        let walked = g.resolve(&path(&e)).node().unwrap();
        assert_eq!(g.resolve_from(walked, &path("w")), g.resolve(&path(&"e".repeat(k - 1))));
    }
    assert_eq!(g.label(g.center()), Some("left3-T0"));
}

#[test]
fn listing1_state_encoding() {
    let m = run_listing1();
    let g = m.graph();
    let ring: Vec<_> = (0..7).map(|k| g.resolve(&path(&"e".repeat(k))).node().unwrap()).collect();
    let non_self: Vec<_> = ring
        .iter()
        .filter(|&&id| g.edge(id, dir('n')).unwrap() != Some(id))
        .collect();
    assert_eq!(non_self.len(), 1);
    assert_eq!(g.label(*non_self[0]), Some("center-T0"));
    assert_eq!(extract_row(g, g.center(), 7).unwrap().to_string(), "0001000");
}

#[test]
fn listing1_recenters_on_first_cell_at_line_11() {
    let mut m = Machine::load(corpus_listing1(), StorageGraph::new(Alphabet::default())).unwrap();
    for _ in 0..11 {
        m.step().unwrap();
    }
    assert_eq!(m.graph().label(m.graph().center()), Some("center-T0"));
}

#[test]
fn listing1_dot() {
    let m = run_listing1();
    let dot = m.graph().to_dot();
    let vertices = dot.lines().filter(|l| l.contains("[label=") && !l.contains("->")).count();
    assert_eq!(vertices, 8);
    assert_eq!(dot.matches(" -> ").count(), 28);
    assert_eq!(dot.matches("doublecircle").count(), 1);
}

#[test]
fn listing2_truth_table_is_rule_110() {
    let table = block_truth_table(&corpus_listing2()).unwrap();
    assert_eq!(table, rule_table(RuleNumber::new(110)));
    // 111 -> off, 001 -> on
    assert!(!table[0b111]);
    assert!(table[0b001]);
}

#[test]
fn generated_110_block_agrees_with_listing2() {
    assert_eq!(
        block_truth_table(&gen_update_block(RuleNumber::new(110))).unwrap(),
        block_truth_table(&corpus_listing2()).unwrap()
    );
    assert_eq!(block_truth_table(&gen_update_block(RuleNumber::new(0))).unwrap(), [false; 8]);
    let identity = block_truth_table(&gen_update_block(RuleNumber::new(204))).unwrap();
    for (idx, on) in identity.iter().enumerate() {
        assert_eq!(*on, idx & 2 != 0);
    }
}

#[test]
fn validation_of_the_listings() {
    assert!(validate(&corpus_listing1()).is_empty());
    let diags = validate(&corpus_listing2().to_program());
    assert!(diags.iter().all(|d| d.severity < Severity::Error));
    let exits: Vec<_> = diags.iter().map(|d| (d.at, d.kind.clone())).collect();
    assert_eq!(
        exits,
        vec![
            (9, DiagnosticKind::ExitJump { target: 16 }),
            (13, DiagnosticKind::ExitJump { target: 16 }),
        ]
    );
}

#[test]
fn listing_round_trip_through_render() {
    for program in [corpus_listing1(), corpus_listing2().to_program()] {
        let text = smm_core::render(&program);
        assert_eq!(smm_core::parse(&text).unwrap(), program);
    }
    let l1 = Machine::load(corpus_listing1(), StorageGraph::new(Alphabet::default())).unwrap();
    assert!(l1.is_running());
    assert_eq!(l1.pc(), 1);
    let _ = Limits::default();
}
