//! Turing machines, two-stack pushdown automata, and their direct simulators.
//!
//! The simulators here are the ground truth every probabilistic run is
//! checked against.

mod file;
pub mod fixtures;
mod pda;
mod tm;

pub use file::{
    load_machine, parse_machine, MachineFile, MachineFileError, PdaFile, PdaRecord, TmFile,
    TmRecord,
};
pub use pda::{
    pda_run, pda_step, pda_trace, validate_pda, Guard, PdaConfig, PdaRule, PdaRun, PdaViolation,
    StackRead, Transition, TwoStackPda,
};
pub use tm::{tm_run, tm_step, tm_trace, validate_tm, Move, TmConfig, TmRule, TmRun, TmViolation, TuringMachine};

use serde::{Deserialize, Serialize};
use std::fmt;

pub const HALT_REJECT: &str = "halt_0";
pub const HALT_ACCEPT: &str = "halt_1";

pub fn is_halt_state(state: &str) -> bool {
    state == HALT_REJECT || state == HALT_ACCEPT
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InputSymbol {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "end")]
    End,
}

impl InputSymbol {
    pub const ALL: [InputSymbol; 3] = [InputSymbol::Zero, InputSymbol::One, InputSymbol::End];

    pub fn label(self) -> &'static str {
        match self {
            InputSymbol::Zero => "0",
            InputSymbol::One => "1",
            InputSymbol::End => "end",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|i| i.label() == s)
    }

    pub fn from_bit(b: bool) -> Self {
        if b {
            InputSymbol::One
        } else {
            InputSymbol::Zero
        }
    }

    /// The symbol read at 1-based step `step`: the user's bits, then `end` forever.
    pub fn at(inputs: &[InputSymbol], step: usize) -> InputSymbol {
        inputs.get(step - 1).copied().unwrap_or(InputSymbol::End)
    }
}

impl fmt::Display for InputSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Maps a `{0,1}` word to input symbols (without the trailing `end`s).
pub fn inputs_from_bits(bits: &crate::stack_codec::BitString) -> Vec<InputSymbol> {
    bits.bits().iter().map(|&b| InputSymbol::from_bit(b)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub enum StackAction {
    #[serde(rename = "push_0")]
    Push0,
    #[serde(rename = "push_1")]
    Push1,
    #[serde(rename = "pop")]
    Pop,
    #[serde(rename = "noop")]
    #[default]
    Noop,
}

impl StackAction {
    pub const ALL: [StackAction; 4] = [
        StackAction::Push0,
        StackAction::Push1,
        StackAction::Pop,
        StackAction::Noop,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StackAction::Push0 => "push_0",
            StackAction::Push1 => "push_1",
            StackAction::Pop => "pop",
            StackAction::Noop => "noop",
        }
    }

    pub fn push(bit: bool) -> Self {
        if bit {
            StackAction::Push1
        } else {
            StackAction::Push0
        }
    }
}


impl fmt::Display for StackAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
}

impl Verdict {
    pub fn from_halt_state(state: &str) -> Option<Verdict> {
        match state {
            HALT_ACCEPT => Some(Verdict::Accept),
            HALT_REJECT => Some(Verdict::Reject),
            _ => None,
        }
    }
}

/// Result of a bounded direct run. `step` counts transitions taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    Halted { verdict: Verdict, step: usize },
    Timeout { steps: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MachineError {
    #[error("machine is already halted in {state}")]
    HaltedMachine { state: String },
    #[error("pop on empty stack {stack}")]
    PopOnEmpty { stack: char },
    #[error("no transition for {0}")]
    MissingTransition(String),
    #[error("max_steps must be at least 1")]
    ZeroMaxSteps,
}
