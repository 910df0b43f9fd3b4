//! Machines shipped with the crate, parsed from the JSON files in `fixtures/`.
//!
//! - PARITY: accepts words with an even number of 1s; leaves both stacks alone.
//! - INCREMENT: one-tape binary increment, least significant bit first.
//! - ALTERNATOR: pushes 1, 0, 1, 0, ... on stack a forever, checking the top
//!   before every push and rejecting if it reads anything unexpected.
//! - PUSH_ONE: pushes 1 on stack a every step, ignoring everything it reads.

use super::file::{parse_machine, MachineFile};
use super::{TuringMachine, TwoStackPda};

pub const PARITY_JSON: &str = include_str!("../../fixtures/parity.json");
pub const INCREMENT_JSON: &str = include_str!("../../fixtures/increment.json");
pub const ALTERNATOR_JSON: &str = include_str!("../../fixtures/alternator.json");
pub const PUSH_ONE_JSON: &str = include_str!("../../fixtures/push_one.json");

fn pda(json: &str) -> TwoStackPda {
    match parse_machine(json).expect("fixture parses") {
        MachineFile::Pda(f) => f.to_pda().expect("fixture is well formed"),
        MachineFile::Tm(_) => panic!("fixture is not a pda"),
    }
}

pub fn parity() -> TwoStackPda {
    pda(PARITY_JSON)
}

pub fn alternator() -> TwoStackPda {
    pda(ALTERNATOR_JSON)
}

pub fn push_one() -> TwoStackPda {
    pda(PUSH_ONE_JSON)
}

pub fn increment() -> TuringMachine {
    match parse_machine(INCREMENT_JSON).expect("fixture parses") {
        MachineFile::Tm(f) => f.to_tm().expect("fixture is well formed"),
        MachineFile::Pda(_) => panic!("fixture is not a tm"),
    }
}
