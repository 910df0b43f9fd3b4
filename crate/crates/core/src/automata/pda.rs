use super::{is_halt_state, InputSymbol, MachineError, RunOutcome, StackAction, Verdict, HALT_ACCEPT, HALT_REJECT};
use crate::stack_codec::BitString;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// What the control sees of one stack. When `empty` is set the top bit is
/// forced to 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StackRead {
    top: bool,
    empty: bool,
}

impl StackRead {
    pub const EMPTY: StackRead = StackRead { top: false, empty: true };
    pub const TOP0: StackRead = StackRead { top: false, empty: false };
    pub const TOP1: StackRead = StackRead { top: true, empty: false };
    pub const ALL: [StackRead; 3] = [StackRead::EMPTY, StackRead::TOP0, StackRead::TOP1];

    pub fn new(top: bool, empty: bool) -> Self {
        StackRead {
            top: top && !empty,
            empty,
        }
    }

    pub fn of(stack: &BitString) -> Self {
        match stack.top() {
            None => StackRead::EMPTY,
            Some(b) => StackRead::new(b, false),
        }
    }

    pub fn top(self) -> bool {
        self.top
    }

    pub fn empty(self) -> bool {
        self.empty
    }
}

impl fmt::Display for StackRead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.empty {
            f.write_str("empty")
        } else {
            write!(f, "top={}", self.top as u8)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Guard {
    pub state: String,
    pub a: StackRead,
    pub b: StackRead,
    pub input: InputSymbol,
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, a:{}, b:{}, in:{})",
            self.state, self.a, self.b, self.input
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PdaRule {
    pub next: String,
    pub action_a: StackAction,
    pub action_b: StackAction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub guard: Guard,
    pub rule: PdaRule,
}

/// Deterministic two-stack machine over the input alphabet `{0, 1, end}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoStackPda {
    states: Vec<String>,
    initial: String,
    transitions: Vec<Transition>,
    index: BTreeMap<Guard, usize>,
    conflicts: Vec<(usize, usize)>,
}

impl TwoStackPda {
    pub fn new(states: Vec<String>, initial: impl Into<String>, transitions: Vec<Transition>) -> Self {
        let mut index = BTreeMap::new();
        let mut conflicts = Vec::new();
        let mut kept = Vec::with_capacity(transitions.len());
        for t in transitions {
            match index.get(&t.guard) {
                Some(&i) => {
                    let existing: &Transition = &kept[i];
                    if existing.rule != t.rule {
                        conflicts.push((i, kept.len()));
                        kept.push(t);
                    }
                }
                None => {
                    index.insert(t.guard.clone(), kept.len());
                    kept.push(t);
                }
            }
        }
        TwoStackPda {
            states,
            initial: initial.into(),
            transitions: kept,
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

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn rule(&self, guard: &Guard) -> Option<&PdaRule> {
        self.index.get(guard).map(|&i| &self.transitions[i].rule)
    }

    /// Every canonical guard of a non-halt state (27 per state).
    pub fn canonical_guards(&self) -> impl Iterator<Item = Guard> + '_ {
        self.states
            .iter()
            .filter(|s| !is_halt_state(s))
            .flat_map(|s| {
                StackRead::ALL.into_iter().flat_map(move |a| {
                    StackRead::ALL.into_iter().flat_map(move |b| {
                        InputSymbol::ALL.into_iter().map(move |input| Guard {
                            state: s.clone(),
                            a,
                            b,
                            input,
                        })
                    })
                })
            })
    }

    pub fn initial_config(&self) -> PdaConfig {
        PdaConfig {
            state: self.initial.clone(),
            stack_a: BitString::new(),
            stack_b: BitString::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PdaViolation {
    DuplicateState(String),
    UnknownInitial(String),
    MissingHaltState(&'static str),
    UnknownState { guard: Guard, name: String },
    HaltHasTransitions(Guard),
    TotalityViolation(Guard),
    PopOnEmptyGuard { guard: Guard, stack: char },
    ConflictingRules(Guard),
}

impl fmt::Display for PdaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PdaViolation::DuplicateState(s) => write!(f, "DuplicateState: {s}"),
            PdaViolation::UnknownInitial(s) => write!(f, "UnknownInitial: {s}"),
            PdaViolation::MissingHaltState(s) => write!(f, "MissingHaltState: {s}"),
            PdaViolation::UnknownState { guard, name } => {
                write!(f, "UnknownState: {name} in transition {guard}")
            }
            PdaViolation::HaltHasTransitions(g) => write!(f, "HaltHasTransitions: {g}"),
            PdaViolation::TotalityViolation(g) => write!(f, "TotalityViolation: no rule for {g}"),
            PdaViolation::PopOnEmptyGuard { guard, stack } => {
                write!(f, "PopOnEmptyGuard: {guard} pops empty stack {stack}")
            }
            PdaViolation::ConflictingRules(g) => write!(f, "ConflictingRules: {g}"),
        }
    }
}

pub fn validate_pda(pda: &TwoStackPda) -> Vec<PdaViolation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for s in &pda.states {
        if !seen.insert(s.as_str()) {
            out.push(PdaViolation::DuplicateState(s.clone()));
        }
    }
    if !seen.contains(pda.initial.as_str()) {
        out.push(PdaViolation::UnknownInitial(pda.initial.clone()));
    }
    for h in [HALT_REJECT, HALT_ACCEPT] {
        if !seen.contains(h) {
            out.push(PdaViolation::MissingHaltState(h));
        }
    }
    for t in &pda.transitions {
        let g = &t.guard;
        for name in [&g.state, &t.rule.next] {
            if !seen.contains(name.as_str()) {
                out.push(PdaViolation::UnknownState {
                    guard: g.clone(),
                    name: name.clone(),
                });
            }
        }
        if is_halt_state(&g.state) {
            out.push(PdaViolation::HaltHasTransitions(g.clone()));
        }
        if g.a.empty() && t.rule.action_a == StackAction::Pop {
            out.push(PdaViolation::PopOnEmptyGuard { guard: g.clone(), stack: 'a' });
        }
        if g.b.empty() && t.rule.action_b == StackAction::Pop {
            out.push(PdaViolation::PopOnEmptyGuard { guard: g.clone(), stack: 'b' });
        }
    }
    for &(_, j) in &pda.conflicts {
        out.push(PdaViolation::ConflictingRules(pda.transitions[j].guard.clone()));
    }
    let mut dedup = BTreeSet::new();
    for g in pda.canonical_guards() {
        if dedup.insert(g.clone()) && !pda.index.contains_key(&g) {
            out.push(PdaViolation::TotalityViolation(g));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PdaConfig {
    pub state: String,
    pub stack_a: BitString,
    pub stack_b: BitString,
}

fn apply(stack: &mut BitString, action: StackAction, name: char) -> Result<(), MachineError> {
    match action {
        StackAction::Push0 => stack.push(false),
        StackAction::Push1 => stack.push(true),
        StackAction::Pop => {
            stack.pop().ok_or(MachineError::PopOnEmpty { stack: name })?;
        }
        StackAction::Noop => {}
    }
    Ok(())
}

/// One transition: read both tops and the input, then apply the state
/// change and both stack actions together.
pub fn pda_step(
    pda: &TwoStackPda,
    config: &PdaConfig,
    input: InputSymbol,
) -> Result<PdaConfig, MachineError> {
    if is_halt_state(&config.state) {
        return Err(MachineError::HaltedMachine {
            state: config.state.clone(),
        });
    }
    let guard = Guard {
        state: config.state.clone(),
        a: StackRead::of(&config.stack_a),
        b: StackRead::of(&config.stack_b),
        input,
    };
    let rule = pda
        .rule(&guard)
        .ok_or_else(|| MachineError::MissingTransition(guard.to_string()))?;
    let mut next = PdaConfig {
        state: rule.next.clone(),
        stack_a: config.stack_a.clone(),
        stack_b: config.stack_b.clone(),
    };
    apply(&mut next.stack_a, rule.action_a, 'a')?;
    apply(&mut next.stack_b, rule.action_b, 'b')?;
    Ok(next)
}

/// Full trajectory of a bounded run; `configs[i]` is the configuration after
/// `i` transitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PdaRun {
    pub configs: Vec<PdaConfig>,
    pub outcome: RunOutcome,
}

pub fn pda_trace(
    pda: &TwoStackPda,
    inputs: &[InputSymbol],
    max_steps: usize,
) -> Result<PdaRun, MachineError> {
    if max_steps == 0 {
        return Err(MachineError::ZeroMaxSteps);
    }
    let mut configs = vec![pda.initial_config()];
    for step in 0..=max_steps {
        let cur = configs.last().expect("nonempty");
        if let Some(verdict) = Verdict::from_halt_state(&cur.state) {
            return Ok(PdaRun {
                configs,
                outcome: RunOutcome::Halted { verdict, step },
            });
        }
        if step == max_steps {
            break;
        }
        let next = pda_step(pda, cur, InputSymbol::at(inputs, step + 1))?;
        configs.push(next);
    }
    Ok(PdaRun {
        configs,
        outcome: RunOutcome::Timeout { steps: max_steps },
    })
}

pub fn pda_run(
    pda: &TwoStackPda,
    inputs: &[InputSymbol],
    max_steps: usize,
) -> Result<RunOutcome, MachineError> {
    pda_trace(pda, inputs, max_steps).map(|r| r.outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::fixtures;

    fn tiny() -> TwoStackPda {
        // q0 on empty/empty/0 pushes 1 on a, then q1 pops a and halts.
        let mut ts = Vec::new();
        for a in StackRead::ALL {
            for b in StackRead::ALL {
                for input in InputSymbol::ALL {
                    let (next, action_a) = if a.empty() { ("q1", StackAction::Push1) } else { ("q1", StackAction::Noop) };
                    ts.push(Transition {
                        guard: Guard { state: "q0".into(), a, b, input },
                        rule: PdaRule { next: next.into(), action_a, action_b: StackAction::Noop },
                    });
                    let (next, action_a) = if a.empty() { (HALT_REJECT, StackAction::Noop) } else { (HALT_ACCEPT, StackAction::Pop) };
                    ts.push(Transition {
                        guard: Guard { state: "q1".into(), a, b, input },
                        rule: PdaRule { next: next.into(), action_a, action_b: StackAction::Noop },
                    });
                }
            }
        }
        let states = ["q0", "q1", HALT_REJECT, HALT_ACCEPT].map(String::from).to_vec();
        TwoStackPda::new(states, "q0", ts)
    }

    #[test]
    fn single_rule_application() {
        let pda = tiny();
        assert!(validate_pda(&pda).is_empty());
        let c0 = pda.initial_config();
        let c1 = pda_step(&pda, &c0, InputSymbol::Zero).unwrap();
        assert_eq!(c1.state, "q1");
        assert_eq!(c1.stack_a.to_string(), "1");
        assert_eq!(c1.stack_b.to_string(), "");
        let c2 = pda_step(&pda, &c1, InputSymbol::Zero).unwrap();
        assert_eq!(c2.stack_a.to_string(), "");
        assert_eq!(c2.state, HALT_ACCEPT);
        assert!(matches!(
            pda_step(&pda, &c2, InputSymbol::End),
            Err(MachineError::HaltedMachine { .. })
        ));
    }

    #[test]
    fn step_is_deterministic() {
        let pda = fixtures::parity();
        let c = pda.initial_config();
        let a = pda_step(&pda, &c, InputSymbol::One).unwrap();
        let b = pda_step(&pda, &c, InputSymbol::One).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parity_runs() {
        let pda = fixtures::parity();
        let bits = |s: &str| crate::automata::inputs_from_bits(&s.parse().unwrap());
        assert_eq!(
            pda_run(&pda, &bits("1101"), 100),
            Ok(RunOutcome::Halted { verdict: Verdict::Reject, step: 5 })
        );
        assert_eq!(
            pda_run(&pda, &bits("11"), 100),
            Ok(RunOutcome::Halted { verdict: Verdict::Accept, step: 3 })
        );
        assert_eq!(
            pda_run(&pda, &bits("1101"), 1),
            Ok(RunOutcome::Timeout { steps: 1 })
        );
        assert_eq!(pda_run(&pda, &[], 0), Err(MachineError::ZeroMaxSteps));
    }

    #[test]
    fn initial_halt_reports_step_zero() {
        let states = vec![HALT_REJECT.to_string(), HALT_ACCEPT.to_string()];
        let pda = TwoStackPda::new(states, HALT_ACCEPT, vec![]);
        assert!(validate_pda(&pda).is_empty());
        assert_eq!(
            pda_run(&pda, &[], 1),
            Ok(RunOutcome::Halted { verdict: Verdict::Accept, step: 0 })
        );
    }

    #[test]
    fn validator_reports_violations() {
        assert!(validate_pda(&fixtures::parity()).is_empty());

        let mut ts: Vec<Transition> = tiny().transitions().to_vec();
        let g = Guard { state: "q0".into(), a: StackRead::EMPTY, b: StackRead::EMPTY, input: InputSymbol::Zero };
        let pos = ts.iter().position(|t| t.guard == g).unwrap();
        ts[pos].rule.action_a = StackAction::Pop;
        let states = tiny().states().to_vec();
        let v = validate_pda(&TwoStackPda::new(states.clone(), "q0", ts.clone()));
        assert_eq!(v, vec![PdaViolation::PopOnEmptyGuard { guard: g.clone(), stack: 'a' }]);

        ts.remove(pos);
        let v = validate_pda(&TwoStackPda::new(states.clone(), "q0", ts.clone()));
        assert_eq!(v, vec![PdaViolation::TotalityViolation(g.clone())]);

        let mut extra = ts.clone();
        extra.push(Transition {
            guard: Guard { state: "q0".into(), a: StackRead::TOP1, b: StackRead::EMPTY, input: InputSymbol::One },
            rule: PdaRule { next: HALT_ACCEPT.into(), action_a: StackAction::Push0, action_b: StackAction::Noop },
        });
        let v = validate_pda(&TwoStackPda::new(states, "q0", extra));
        assert!(v.iter().any(|x| matches!(x, PdaViolation::ConflictingRules(_))));
    }

    #[test]
    fn pop_on_empty_when_validator_bypassed() {
        let states = tiny().states().to_vec();
        let mut ts: Vec<Transition> = tiny().transitions().to_vec();
        for t in ts.iter_mut().filter(|t| t.guard.state == "q0") {
            t.rule.action_a = StackAction::Pop;
        }
        let pda = TwoStackPda::new(states, "q0", ts);
        assert_eq!(
            pda_step(&pda, &pda.initial_config(), InputSymbol::Zero),
            Err(MachineError::PopOnEmpty { stack: 'a' })
        );
    }

    #[test]
    fn canonical_read() {
        assert_eq!(StackRead::new(true, true), StackRead::EMPTY);
        assert_eq!(StackRead::of(&"10".parse().unwrap()), StackRead::TOP1);
    }
}
