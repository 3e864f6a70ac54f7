#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use smm_core::codegen::{corpus_listing1, UpdateBlock};
use smm_core::{Alphabet, Direction, Instruction, JumpTarget, Limits, Machine, Path, Program, StorageGraph};

pub fn dir(c: char) -> Direction {
    Direction::new(c).unwrap()
}

pub fn path(s: &str) -> Path {
    Path::parse_in(s, &Alphabet::default()).unwrap()
}

pub fn run_listing1() -> Machine {
    let mut m = Machine::load(corpus_listing1(), StorageGraph::new(Alphabet::default())).unwrap();
    m.run(Limits::default());
    m
}

fn random_path(rng: &mut impl Rng, alphabet: &[Direction], max: usize) -> Path {
    let len = rng.gen_range(0..=max);
    Path::new((0..len).map(|_| *alphabet.choose(rng).unwrap()).collect())
}

fn random_label(rng: &mut impl Rng) -> String {
    let words = ["a", "cell-7", "x y", "center-T0", "Origin", "q_1"];
    words.choose(rng).unwrap().to_string()
}

/// A random program over a random alphabet drawn from `pool`.
pub fn random_program(rng: &mut impl Rng) -> Program {
    let pool: Vec<char> = "nsewBTxyz01".chars().collect();
    let k = rng.gen_range(1..=5);
    let mut symbols = pool.clone();
    symbols.shuffle(rng);
    let dirs: Vec<Direction> = symbols[..k].iter().map(|&c| dir(c)).collect();
    let alphabet = if rng.gen_bool(0.5) {
        Alphabet::default()
    } else {
        Alphabet::new(dirs).unwrap()
    };
    let dirs: Vec<Direction> = alphabet.iter().collect();
    let len = rng.gen_range(0..30);
    let code = (0..len)
        .map(|_| match rng.gen_range(0..5) {
            0 => Instruction::New {
                label: rng.gen_bool(0.7).then(|| random_label(rng)),
            },
            1 => Instruction::Set {
                x: random_path(rng, &dirs, 3),
                d: *dirs.choose(rng).unwrap(),
                y: random_path(rng, &dirs, 3),
            },
            2 => {
                let mut x = random_path(rng, &dirs, 3);
                if x.is_empty() {
                    x = Path::new(vec![dirs[0]]);
                }
                Instruction::Center { x }
            }
            3 => {
                let m = rng.gen_range(1..40);
                Instruction::If {
                    x: random_path(rng, &dirs, 3),
                    y: random_path(rng, &dirs, 3),
                    target: match rng.gen_range(0..3) {
                        0 => JumpTarget::Absolute(m),
                        1 => JumpTarget::Forward(m),
                        _ => JumpTarget::Backward(m),
                    },
                }
            }
            _ => Instruction::Stop {
                message: ["", "done", "all  done", "x"].choose(rng).unwrap().to_string(),
            },
        })
        .collect();
    Program::new(alphabet, code).unwrap()
}

/// `set`/`if` filler that only jumps to the next line and never writes.
pub fn filler(n: usize) -> Vec<Instruction> {
    vec![
        Instruction::If {
            x: path("s"),
            y: path("s"),
            target: JumpTarget::Forward(1),
        };
        n
    ]
}

/// Splices `block` after `offset` filler instructions and runs it to the end.
pub fn run_spliced(block: &UpdateBlock, offset: usize, graph: StorageGraph) -> StorageGraph {
    let mut code = filler(offset);
    code.extend_from_slice(block.instructions());
    code.push(Instruction::Stop { message: "spliced".into() });
    let program = Program::new(Alphabet::default(), code).unwrap();
    let mut m = Machine::load(program, graph).unwrap();
    m.run(Limits::default());
    assert_eq!(m.status().to_string(), "halted: stop \"spliced\"");
    m.into_graph()
}
