use super::{is_halt_state, MachineError, RunOutcome, Verdict, HALT_ACCEPT, HALT_REJECT};
use crate::stack_codec::BitString;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Move {
    L,
    R,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmRule {
    pub next: String,
    pub write: bool,
    pub head_move: Move,
}

/// One-tape machine over `{0, 1}` with blank `0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuringMachine {
    states: Vec<String>,
    initial: String,
    rules: Vec<((String, bool), TmRule)>,
    index: BTreeMap<(String, bool), usize>,
    conflicts: Vec<usize>,
}

impl TuringMachine {
    pub fn new(
        states: Vec<String>,
        initial: impl Into<String>,
        transitions: Vec<((String, bool), TmRule)>,
    ) -> Self {
        let mut index: BTreeMap<(String, bool), usize> = BTreeMap::new();
        let mut conflicts = Vec::new();
        let mut rules: Vec<((String, bool), TmRule)> = Vec::new();
        for (key, rule) in transitions {
            match index.get(&key) {
                Some(&i) if rules[i].1 == rule => {}
                Some(_) => {
                    conflicts.push(rules.len());
                    rules.push((key, rule));
                }
                None => {
                    index.insert(key.clone(), rules.len());
                    rules.push((key, rule));
                }
            }
        }
        TuringMachine {
            states,
            initial: initial.into(),
            rules,
            index,
            conflicts,
        }
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn initial(&self) -> &str {
        &self.initial
    }

    pub fn rules(&self) -> &[((String, bool), TmRule)] {
        &self.rules
    }

    pub fn rule(&self, state: &str, read: bool) -> Option<&TmRule> {
        self.index
            .get(&(state.to_string(), read))
            .map(|&i| &self.rules[i].1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TmViolation {
    DuplicateState(String),
    UnknownInitial(String),
    MissingHaltState(&'static str),
    UnknownState { state: String, read: bool, name: String },
    HaltHasTransitions { state: String, read: bool },
    TotalityViolation { state: String, read: bool },
    ConflictingRules { state: String, read: bool },
}

impl fmt::Display for TmViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TmViolation::DuplicateState(s) => write!(f, "DuplicateState: {s}"),
            TmViolation::UnknownInitial(s) => write!(f, "UnknownInitial: {s}"),
            TmViolation::MissingHaltState(s) => write!(f, "MissingHaltState: {s}"),
            TmViolation::UnknownState { state, read, name } => {
                write!(f, "UnknownState: {name} in rule ({state}, {})", *read as u8)
            }
            TmViolation::HaltHasTransitions { state, read } => {
                write!(f, "HaltHasTransitions: ({state}, {})", *read as u8)
            }
            TmViolation::TotalityViolation { state, read } => {
                write!(f, "TotalityViolation: no rule for ({state}, {})", *read as u8)
            }
            TmViolation::ConflictingRules { state, read } => {
                write!(f, "ConflictingRules: ({state}, {})", *read as u8)
            }
        }
    }
}

pub fn validate_tm(tm: &TuringMachine) -> Vec<TmViolation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for s in &tm.states {
        if !seen.insert(s.as_str()) {
            out.push(TmViolation::DuplicateState(s.clone()));
        }
    }
    if !seen.contains(tm.initial.as_str()) {
        out.push(TmViolation::UnknownInitial(tm.initial.clone()));
    }
    for h in [HALT_REJECT, HALT_ACCEPT] {
        if !seen.contains(h) {
            out.push(TmViolation::MissingHaltState(h));
        }
    }
    for ((state, read), rule) in &tm.rules {
        for name in [state, &rule.next] {
            if !seen.contains(name.as_str()) {
                out.push(TmViolation::UnknownState {
                    state: state.clone(),
                    read: *read,
                    name: name.clone(),
                });
            }
        }
        if is_halt_state(state) {
            out.push(TmViolation::HaltHasTransitions { state: state.clone(), read: *read });
        }
    }
    for &i in &tm.conflicts {
        let (state, read) = tm.rules[i].0.clone();
        out.push(TmViolation::ConflictingRules { state, read });
    }
    for s in tm.states.iter().filter(|s| !is_halt_state(s)) {
        for read in [false, true] {
            if tm.rule(s, read).is_none() {
                out.push(TmViolation::TotalityViolation { state: s.clone(), read });
            }
        }
    }
    out
}

/// Tape split around the head. `left` lists cells leftwards from the head
/// (nearest first); `right` lists cells rightwards. Unvisited cells are blank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmConfig {
    pub state: String,
    pub left: BitString,
    pub head: bool,
    pub right: BitString,
}

impl TmConfig {
    /// Input written from cell 0 rightwards, head on cell 0.
    pub fn initial(tm: &TuringMachine, input: &BitString) -> Self {
        let mut right = input.clone();
        let head = right.pop().unwrap_or(false);
        TmConfig {
            state: tm.initial.clone(),
            left: BitString::new(),
            head,
            right,
        }
    }

    /// The tape as two stacks (left of head, head and rightwards), with
    /// blank cells at the bottom dropped.
    pub fn as_stacks(&self) -> (BitString, BitString) {
        let mut b = self.right.clone();
        b.push(self.head);
        (self.left.trim_bottom_zeros(), b.trim_bottom_zeros())
    }
}

pub fn tm_step(tm: &TuringMachine, config: &TmConfig) -> Result<TmConfig, MachineError> {
    if is_halt_state(&config.state) {
        return Err(MachineError::HaltedMachine {
            state: config.state.clone(),
        });
    }
    let rule = tm.rule(&config.state, config.head).ok_or_else(|| {
        MachineError::MissingTransition(format!("({}, {})", config.state, config.head as u8))
    })?;
    let mut next = config.clone();
    next.state = rule.next.clone();
    match rule.head_move {
        Move::R => {
            next.left.push(rule.write);
            next.head = next.right.pop().unwrap_or(false);
        }
        Move::L => {
            next.right.push(rule.write);
            next.head = next.left.pop().unwrap_or(false);
        }
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmRun {
    pub configs: Vec<TmConfig>,
    pub outcome: RunOutcome,
}

pub fn tm_trace(tm: &TuringMachine, input: &BitString, max_steps: usize) -> Result<TmRun, MachineError> {
    if max_steps == 0 {
        return Err(MachineError::ZeroMaxSteps);
    }
    let mut configs = vec![TmConfig::initial(tm, input)];
    for step in 0..=max_steps {
        let cur = configs.last().expect("nonempty");
        if let Some(verdict) = Verdict::from_halt_state(&cur.state) {
            return Ok(TmRun {
                configs,
                outcome: RunOutcome::Halted { verdict, step },
            });
        }
        if step == max_steps {
            break;
        }
        let next = tm_step(tm, cur)?;
        configs.push(next);
    }
    Ok(TmRun {
        configs,
        outcome: RunOutcome::Timeout { steps: max_steps },
    })
}

pub fn tm_run(tm: &TuringMachine, input: &BitString, max_steps: usize) -> Result<RunOutcome, MachineError> {
    tm_trace(tm, input, max_steps).map(|r| r.outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::fixtures;

    #[test]
    fn increment_on_zero_writes_one_and_halts() {
        let tm = fixtures::increment();
        assert!(validate_tm(&tm).is_empty());
        let c0 = TmConfig::initial(&tm, &"0".parse().unwrap());
        let c1 = tm_step(&tm, &c0).unwrap();
        assert_eq!(c1.state, HALT_ACCEPT);
        assert_eq!(c1.as_stacks(), (BitString::new(), "01".parse().unwrap()));
        // the written 1 sits right of the head after the left move
        assert_eq!(c1.right.to_string(), "1");
        assert!(matches!(tm_step(&tm, &c1), Err(MachineError::HaltedMachine { .. })));
    }

    #[test]
    fn increment_carries() {
        let tm = fixtures::increment();
        let run = tm_trace(&tm, &"11".parse().unwrap(), 20).unwrap();
        assert_eq!(run.outcome, RunOutcome::Halted { verdict: Verdict::Accept, step: 3 });
        let last = run.configs.last().unwrap();
        // LSB first: 11 (=3) becomes 001 (=4)
        let (a, b) = last.as_stacks();
        assert_eq!(a.to_string(), "");
        assert_eq!(b.to_string(), "01");
        assert_eq!(last.left.to_string(), "0");
    }

    #[test]
    fn left_move_at_leftmost_cell_reads_blank() {
        let states = ["s", HALT_REJECT, HALT_ACCEPT].map(String::from).to_vec();
        let tm = TuringMachine::new(
            states,
            "s",
            vec![
                (("s".into(), true), TmRule { next: "s".into(), write: true, head_move: Move::L }),
                (("s".into(), false), TmRule { next: HALT_ACCEPT.into(), write: false, head_move: Move::R }),
            ],
        );
        let c0 = TmConfig::initial(&tm, &"1".parse().unwrap());
        let c1 = tm_step(&tm, &c0).unwrap();
        assert!(!c1.head);
        assert!(c1.left.is_empty());
        assert_eq!(c1.right.to_string(), "1");
    }

    #[test]
    fn validator() {
        let states = ["s", HALT_REJECT, HALT_ACCEPT].map(String::from).to_vec();
        let tm = TuringMachine::new(
            states,
            "s",
            vec![(("s".into(), true), TmRule { next: "t".into(), write: true, head_move: Move::L })],
        );
        let v = validate_tm(&tm);
        assert!(v.contains(&TmViolation::TotalityViolation { state: "s".into(), read: false }));
        assert!(v.iter().any(|x| matches!(x, TmViolation::UnknownState { .. })));
    }
}
