//! Generated programs against the array simulator.

mod common;

use proptest::prelude::*;
use smm_core::codegen::{
    block_truth_table, corpus_listing2, gen_init, gen_program, gen_update_block, neighborhood_graph, EmissionPlan,
};
use smm_core::eca::{evolve, rule_table};
use smm_core::harness::{extract_row, read_generations};
use smm_core::{Alphabet, Instruction, Limits, Machine, MachineStatus, NodeId, Row, RuleNumber, StorageGraph};

fn run(program: smm_core::Program) -> Machine {
    let mut m = Machine::load(program, StorageGraph::new(Alphabet::default())).unwrap();
    m.run(Limits::default());
    assert!(matches!(m.status(), MachineStatus::Halted(_)), "{}", m.status());
    m
}

fn arb_row(max: usize) -> impl Strategy<Value = Row> {
    prop::collection::vec(any::<bool>(), 1..=max).prop_map(|v| Row::new(v).unwrap())
}

#[test]
fn init_of_listing1_row() {
    let row: Row = "0001000".parse().unwrap();
    let m = run(gen_init(&row));
    let g = m.graph();
    assert_eq!(extract_row(g, g.center(), 7).unwrap(), row);
    assert_eq!(g.reachable_count(), 8);
    assert_eq!(g.label(g.center()), Some("c0-0"));
}

#[test]
fn init_width_one_is_a_self_ring() {
    let m = run(gen_init(&"1".parse().unwrap()));
    let g = m.graph();
    let c = g.center();
    assert_eq!(g.edge(c, common::dir('e')).unwrap(), Some(c));
    assert_eq!(g.edge(c, common::dir('w')).unwrap(), Some(c));
    assert_eq!(extract_row(g, c, 1).unwrap().to_string(), "1");
}

#[test]
fn one_step_of_110() {
    let row: Row = "0001000".parse().unwrap();
    let m = run(gen_program(&row, RuleNumber::new(110), 1));
    let g = m.graph();
    assert_eq!(extract_row(g, g.center(), 7).unwrap().to_string(), "0011000");
}

#[test]
fn instruction_counts_per_iteration() {
    let row: Row = "0001000".parse().unwrap();
    // With the 15-instruction hand-written block: 16 for cell 0, 18 per other
    // cell, 2 closures and a recenter.
    let listing = EmissionPlan::with_block(row.clone(), corpus_listing2(), 2);
    assert_eq!(listing.iteration_len(), 18 * 7 + 1);
    assert_eq!(listing.emit().len(), listing.init_len() + 2 * 127 + 1);
    // Generated blocks are 13 long.
    let generated = EmissionPlan::new(row, RuleNumber::new(110), 2);
    assert_eq!(generated.iteration_len(), 16 * 7 + 1);
}

#[test]
fn listing2_block_drives_the_full_program() {
    let row = Row::single_on(21).unwrap();
    let m = run(EmissionPlan::with_block(row.clone(), corpus_listing2(), 9).emit());
    let rows = read_generations(m.graph(), 21, 9).unwrap();
    assert_eq!(rows, evolve(&row, RuleNumber::new(110), 9));
    assert_eq!(m.graph().reachable_count(), 211);
}

#[test]
fn generated_blocks_never_create_or_move() {
    for rule in RuleNumber::all() {
        let block = gen_update_block(rule);
        assert!(!block
            .instructions()
            .iter()
            .any(|i| matches!(i, Instruction::New { .. } | Instruction::Center { .. } | Instruction::Stop { .. })));
        assert_eq!(block_truth_table(&block).unwrap(), rule_table(rule), "rule {rule}");
    }
}

/// Edges of every node that exists when generation `t + 1` starts must be
/// untouched by the rest of the run.
fn assert_old_generations_immutable(row: &Row, rule: RuleNumber, iterations: usize) {
    let plan = EmissionPlan::new(row.clone(), rule, iterations);
    let mut m = Machine::load(plan.emit(), StorageGraph::new(Alphabet::default())).unwrap();
    let starts: Vec<usize> = (1..=iterations).map(|t| plan.generation_start(t)).collect();
    let mut snapshots = Vec::new();
    while m.is_running() {
        if starts.contains(&m.pc()) {
            let g = m.graph();
            let nodes: Vec<_> = g.node_ids().map(|id| (id, g.node(id).unwrap().clone())).collect();
            snapshots.push(nodes);
        }
        m.step().unwrap();
    }
    let g = m.graph();
    for snap in snapshots {
        for (id, node) in snap {
            assert_eq!(g.node(id).unwrap(), &node, "node {id} changed");
        }
    }
}

#[test]
fn old_generations_are_not_modified() {
    assert_old_generations_immutable(&"0110100101".parse().unwrap(), RuleNumber::new(110), 6);
    assert_old_generations_immutable(&"1".parse().unwrap(), RuleNumber::new(1), 3);
}

#[test]
fn relocation_does_not_change_the_effect() {
    let block = gen_update_block(RuleNumber::new(30));
    for idx in 0..8 {
        let (base, _) = neighborhood_graph(idx & 4 != 0, idx & 2 != 0, idx & 1 != 0);
        let at_zero = common::run_spliced(&block, 0, base.clone());
        for offset in [1, 5, 17] {
            assert_eq!(common::run_spliced(&block, offset, base.clone()), at_zero);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn init_round_trips(row in arb_row(16)) {
        let m = run(gen_init(&row));
        let g = m.graph();
        prop_assert_eq!(extract_row(g, g.center(), row.width()).unwrap(), row.clone());
        prop_assert_eq!(g.reachable_count(), row.width() + 1);
    }

    #[test]
    fn program_matches_oracle(row in arb_row(9), rule in any::<u8>(), iterations in 0usize..6) {
        let rule = RuleNumber::new(rule);
        let m = run(gen_program(&row, rule, iterations));
        let rows = read_generations(m.graph(), row.width(), iterations).unwrap();
        prop_assert_eq!(rows, evolve(&row, rule, iterations));
        prop_assert_eq!(m.graph().reachable_count(), row.width() * (iterations + 1) + 1);
        prop_assert_eq!(m.counters().nodes_created as usize, row.width() * (iterations + 1));
    }

    #[test]
    fn splice_offset_is_irrelevant(rule in any::<u8>(), idx in 0usize..8, offset in 0usize..40) {
        let block = gen_update_block(RuleNumber::new(rule));
        let (base, fresh) = neighborhood_graph(idx & 4 != 0, idx & 2 != 0, idx & 1 != 0);
        let spliced = common::run_spliced(&block, offset, base.clone());
        let direct = common::run_spliced(&block, 0, base);
        prop_assert_eq!(&spliced, &direct);
        // Only the fresh cell's n edge may differ from the starting graph.
        let (start, _) = neighborhood_graph(idx & 4 != 0, idx & 2 != 0, idx & 1 != 0);
        for id in start.node_ids().filter(|&id| id != fresh) {
            prop_assert_eq!(spliced.node(id).unwrap(), start.node(id).unwrap());
        }
        prop_assert_eq!(spliced.center(), fresh);
        prop_assert_eq!(spliced.node_count(), start.node_count());
        let _: NodeId = fresh;
    }
}
