//! Machine-to-machine and machine-to-network compilation.
//!
//! [`tm_to_pda`] turns a one-tape machine into a two-stack machine: stack a
//! holds the tape left of the head (nearest cell on top), stack b holds the
//! head cell and everything to its right. An empty stack reads as blank.
//!
//! [`pda_to_dbn`] emits the hybrid network. Slice `t` holds the machine
//! configuration after `t - 1` transitions:
//!
//! ```text
//!   State_t    = delta(State_{t-1}, Top/Empty_{a,b,t-1}, U_t)      table
//!   Action_x,t = actions(State_{t-1}, Top/Empty_{a,b,t-1}, U_t)    table
//!   Stack_x,t  = affine_{Action_x,t, Top_x,t-1}(Stack_x,t-1)       linear Dirac
//!   Top_x,t    = H(4 Stack_x,t - 2)                                threshold
//!   Empty_x,t  = 1 - H(4 Stack_x,t)                                threshold
//!   Y_t        = run | halt_0 | halt_1 from State_t                table
//! ```
//!
//! `U_t` is the input symbol consumed by the transition into slice `t`, so
//! the user's first symbol is observed in slice 2.

use crate::automata::{
    is_halt_state, validate_pda, validate_tm, Guard, InputSymbol, Move, PdaRule, PdaViolation,
    StackAction, StackRead, TmViolation, Transition, TuringMachine, TwoStackPda, HALT_ACCEPT,
    HALT_REJECT,
};
use crate::dbn_model::{
    combos, Affine, Cpd, DbnSpec, DiracCase, NodeDecl, ParentRef, Prior, Role, TableRow,
};
use crate::rational::{int, ratio, Rational};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const INPUT: &str = "U";
pub const STATE: &str = "State";
pub const OUTPUT: &str = "Y";
pub const ACTION_A: &str = "Action_a";
pub const ACTION_B: &str = "Action_b";
pub const STACK_A: &str = "Stack_a";
pub const STACK_B: &str = "Stack_b";
pub const TOP_A: &str = "Top_a";
pub const TOP_B: &str = "Top_b";
pub const EMPTY_A: &str = "Empty_a";
pub const EMPTY_B: &str = "Empty_b";
pub const RUN: &str = "run";

/// PDA steps taken per TM step.
pub const TM_STEP_DILATION: usize = 3;

/// How TM steps line up with steps of the compiled PDA: TM step `k` on an
/// input of length `n` ends at PDA step `preamble_per_input * n +
/// preamble_fixed + dilation * k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepAlignment {
    pub dilation: usize,
    pub preamble_per_input: usize,
    pub preamble_fixed: usize,
}

impl StepAlignment {
    pub fn pda_step(&self, tm_step: usize, input_len: usize) -> usize {
        self.preamble_per_input * input_len + self.preamble_fixed + self.dilation * tm_step
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("machine is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidPda(Vec<PdaViolation>),
    #[error("machine is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidTm(Vec<TmViolation>),
}

const LOAD: &str = "load";
const TRANSFER: &str = "transfer";

fn run_state(s: &str) -> String {
    if is_halt_state(s) {
        s.to_string()
    } else {
        format!("run:{s}")
    }
}

fn idle(s: &str, left: usize) -> String {
    format!("idle{left}:{s}")
}

fn left_write(s: &str, w: bool, c: bool) -> String {
    format!("lw:{s}:{}:{}", w as u8, c as u8)
}

fn left_cell(s: &str, c: bool) -> String {
    format!("lc:{s}:{}", c as u8)
}

struct Rules(Vec<Transition>);

impl Rules {
    /// Adds the same rule for every stack read and input.
    fn any(&mut self, state: &str, next: String, action_a: StackAction, action_b: StackAction) {
        for a in StackRead::ALL {
            for b in StackRead::ALL {
                self.read(state, a, b, next.clone(), action_a, action_b);
            }
        }
    }

    fn read(
        &mut self,
        state: &str,
        a: StackRead,
        b: StackRead,
        next: String,
        action_a: StackAction,
        action_b: StackAction,
    ) {
        for input in InputSymbol::ALL {
            self.0.push(Transition {
                guard: Guard { state: state.to_string(), a, b, input },
                rule: PdaRule { next: next.clone(), action_a, action_b },
            });
        }
    }
}

/// Compiles a valid TM. The PDA first copies the input onto stack b (two
/// PDA steps per input bit plus two), then spends exactly
/// [`TM_STEP_DILATION`] steps per TM step.
pub fn tm_to_pda(tm: &TuringMachine) -> Result<(TwoStackPda, StepAlignment), CompileError> {
    let violations = validate_tm(tm);
    if !violations.is_empty() {
        return Err(CompileError::InvalidTm(violations));
    }
    let halts = vec![HALT_REJECT.to_string(), HALT_ACCEPT.to_string()];
    if is_halt_state(tm.initial()) {
        let pda = TwoStackPda::new(halts, tm.initial(), vec![]);
        let align = StepAlignment { dilation: TM_STEP_DILATION, preamble_per_input: 0, preamble_fixed: 0 };
        return Ok((pda, align));
    }

    let working: Vec<&String> = tm.states().iter().filter(|s| !is_halt_state(s)).collect();
    let mut states = vec![LOAD.to_string(), TRANSFER.to_string()];
    let mut rules = Rules(Vec::new());

    // load: push the input on a, so a holds it reversed
    for a in StackRead::ALL {
        for b in StackRead::ALL {
            for input in InputSymbol::ALL {
                let (next, action_a) = match input {
                    InputSymbol::Zero => (LOAD, StackAction::Push0),
                    InputSymbol::One => (LOAD, StackAction::Push1),
                    InputSymbol::End => (TRANSFER, StackAction::Noop),
                };
                rules.0.push(Transition {
                    guard: Guard { state: LOAD.into(), a, b, input },
                    rule: PdaRule { next: next.into(), action_a, action_b: StackAction::Noop },
                });
            }
        }
    }
    // transfer: move a onto b, restoring input order with cell 0 on top
    for b in StackRead::ALL {
        rules.read(TRANSFER, StackRead::EMPTY, b, run_state(tm.initial()), StackAction::Noop, StackAction::Noop);
        for bit in [false, true] {
            rules.read(TRANSFER, StackRead::new(bit, false), b, TRANSFER.into(), StackAction::Pop, StackAction::push(bit));
        }
    }

    for s in &working {
        states.push(run_state(s));
    }
    // sub-step states are keyed by the TM state being entered
    for s in tm.states() {
        states.push(idle(s, 2));
        states.push(idle(s, 1));
        for c in [false, true] {
            for w in [false, true] {
                states.push(left_write(s, w, c));
            }
            states.push(left_cell(s, c));
        }
    }
    states.extend(halts);

    for s in &working {
        for a in StackRead::ALL {
            for b in StackRead::ALL {
                let head = !b.empty() && b.top();
                let rule = tm.rule(s, head).expect("validated tm is total");
                let drop_head = if b.empty() { StackAction::Noop } else { StackAction::Pop };
                let (next, action_a) = match rule.head_move {
                    Move::R => (idle(&rule.next, 2), StackAction::push(rule.write)),
                    Move::L => {
                        // the cell left of the head; blank when a is empty
                        let c = !a.empty() && a.top();
                        let take = if a.empty() { StackAction::Noop } else { StackAction::Pop };
                        (left_write(&rule.next, rule.write, c), take)
                    }
                };
                rules.read(&run_state(s), a, b, next, action_a, drop_head);
            }
        }
    }
    for s in tm.states() {
        rules.any(&idle(s, 2), idle(s, 1), StackAction::Noop, StackAction::Noop);
        rules.any(&idle(s, 1), run_state(s), StackAction::Noop, StackAction::Noop);
        for c in [false, true] {
            for w in [false, true] {
                rules.any(&left_write(s, w, c), left_cell(s, c), StackAction::Noop, StackAction::push(w));
            }
            rules.any(&left_cell(s, c), run_state(s), StackAction::Noop, StackAction::push(c));
        }
    }

    let pda = TwoStackPda::new(states, LOAD, rules.0);
    let align = StepAlignment {
        dilation: TM_STEP_DILATION,
        preamble_per_input: 2,
        preamble_fixed: 2,
    };
    Ok((pda, align))
}

fn point(len: usize, at: usize) -> Vec<Rational> {
    (0..len).map(|i| if i == at { int(1) } else { int(0) }).collect()
}

fn labels(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn bit_label(b: bool) -> String {
    (b as u8).to_string()
}

/// The compiled network plus a description of where each machine component
/// lives.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledNetwork {
    pub spec: DbnSpec,
    pub metadata: serde_json::Value,
}

fn control_parents() -> Vec<ParentRef> {
    vec![
        ParentRef::prev(STATE),
        ParentRef::prev(TOP_A),
        ParentRef::prev(EMPTY_A),
        ParentRef::prev(TOP_B),
        ParentRef::prev(EMPTY_B),
        ParentRef::same(INPUT),
    ]
}

fn stack_cpd(stack: &str, action: &str, top: &str) -> Cpd {
    let mut cases = Vec::new();
    for action_label in StackAction::ALL {
        for p in [false, true] {
            let map = match action_label {
                StackAction::Push0 => Affine::new(ratio(1, 4), ratio(1, 4)),
                StackAction::Push1 => Affine::new(ratio(1, 4), ratio(3, 4)),
                StackAction::Pop => Affine::new(int(4), -int(2 * p as i64 + 1)),
                StackAction::Noop => Affine::new(int(1), int(0)),
            };
            cases.push(DiracCase {
                given: vec![action_label.label().to_string(), bit_label(p)],
                map,
            });
        }
    }
    Cpd::LinearDirac {
        input: ParentRef::prev(stack),
        selectors: vec![ParentRef::same(action), ParentRef::prev(top)],
        cases,
    }
}

fn finish(nodes: Vec<NodeDecl>, prior: BTreeMap<String, Prior>, cpds: BTreeMap<String, Cpd>) -> DbnSpec {
    let mut spec = DbnSpec { nodes, prior, edges: vec![], cpds };
    spec.edges = spec.edges_from_cpds();
    spec
}

fn input_cpd() -> Cpd {
    Cpd::Table {
        parents: vec![],
        rows: vec![TableRow { given: vec![], probs: vec![ratio(1, 3); 3] }],
    }
}

fn output_cpd(states: &[String]) -> Cpd {
    let outcomes = [RUN, HALT_REJECT, HALT_ACCEPT];
    Cpd::Table {
        parents: vec![ParentRef::same(STATE)],
        rows: states
            .iter()
            .map(|s| {
                let at = outcomes.iter().position(|o| o == s).unwrap_or(0);
                TableRow { given: vec![s.clone()], probs: point(3, at) }
            })
            .collect(),
    }
}

/// Builds the hybrid network for a valid PDA.
pub fn pda_to_dbn(pda: &TwoStackPda) -> Result<CompiledNetwork, CompileError> {
    let violations = validate_pda(pda);
    if !violations.is_empty() {
        return Err(CompileError::InvalidPda(violations));
    }
    let states = pda.states().to_vec();
    let state_refs: Vec<&str> = states.iter().map(|s| s.as_str()).collect();
    let inputs = labels(&["0", "1", "end"]);
    let actions: Vec<String> = StackAction::ALL.iter().map(|a| a.label().to_string()).collect();
    let action_refs: Vec<&str> = actions.iter().map(|s| s.as_str()).collect();
    let bits = ["0", "1"];

    let nodes = vec![
        NodeDecl::categorical(INPUT, Role::Input, &["0", "1", "end"]),
        NodeDecl::categorical(STATE, Role::Hidden, &state_refs),
        NodeDecl::categorical(ACTION_A, Role::Hidden, &action_refs),
        NodeDecl::categorical(ACTION_B, Role::Hidden, &action_refs),
        NodeDecl::continuous(STACK_A, Role::Hidden),
        NodeDecl::continuous(STACK_B, Role::Hidden),
        NodeDecl::categorical(TOP_A, Role::Hidden, &bits),
        NodeDecl::categorical(TOP_B, Role::Hidden, &bits),
        NodeDecl::categorical(EMPTY_A, Role::Hidden, &bits),
        NodeDecl::categorical(EMPTY_B, Role::Hidden, &bits),
        NodeDecl::categorical(OUTPUT, Role::Output, &[RUN, HALT_REJECT, HALT_ACCEPT]),
    ];

    let mut state_rows = Vec::new();
    let mut action_rows = [Vec::new(), Vec::new()];
    for combo in combos(&[states.len(), 2, 2, 2, 2, 3]) {
        let state = &states[combo[0]];
        let (ta, ea, tb, eb) = (combo[1] == 1, combo[2] == 1, combo[3] == 1, combo[4] == 1);
        let input = InputSymbol::ALL[combo[5]];
        let given = vec![
            state.clone(),
            bit_label(ta),
            bit_label(ea),
            bit_label(tb),
            bit_label(eb),
            inputs[combo[5]].clone(),
        ];
        let (next, action_a, action_b) = if is_halt_state(state) {
            (state.clone(), StackAction::Noop, StackAction::Noop)
        } else {
            let guard = Guard {
                state: state.clone(),
                a: StackRead::new(ta, ea),
                b: StackRead::new(tb, eb),
                input,
            };
            let rule = pda.rule(&guard).expect("validated pda is total");
            (rule.next.clone(), rule.action_a, rule.action_b)
        };
        let next_idx = states.iter().position(|s| *s == next).expect("validated state");
        state_rows.push(TableRow { given: given.clone(), probs: point(states.len(), next_idx) });
        for (rows, action) in action_rows.iter_mut().zip([action_a, action_b]) {
            let at = StackAction::ALL.iter().position(|a| *a == action).expect("known action");
            rows.push(TableRow { given: given.clone(), probs: point(4, at) });
        }
    }
    let [rows_a, rows_b] = action_rows;

    let threshold = |stack: &str, scale: i64, offset: i64, complement: bool| Cpd::Threshold {
        parent: ParentRef::same(stack),
        map: Affine::new(int(scale), int(offset)),
        complement,
    };
    let mut cpds = BTreeMap::new();
    cpds.insert(INPUT.to_string(), input_cpd());
    cpds.insert(STATE.to_string(), Cpd::Table { parents: control_parents(), rows: state_rows });
    cpds.insert(ACTION_A.to_string(), Cpd::Table { parents: control_parents(), rows: rows_a });
    cpds.insert(ACTION_B.to_string(), Cpd::Table { parents: control_parents(), rows: rows_b });
    cpds.insert(STACK_A.to_string(), stack_cpd(STACK_A, ACTION_A, TOP_A));
    cpds.insert(STACK_B.to_string(), stack_cpd(STACK_B, ACTION_B, TOP_B));
    cpds.insert(TOP_A.to_string(), threshold(STACK_A, 4, -2, false));
    cpds.insert(TOP_B.to_string(), threshold(STACK_B, 4, -2, false));
    cpds.insert(EMPTY_A.to_string(), threshold(STACK_A, 4, 0, true));
    cpds.insert(EMPTY_B.to_string(), threshold(STACK_B, 4, 0, true));
    cpds.insert(OUTPUT.to_string(), output_cpd(&states));

    let initial = states.iter().position(|s| s == pda.initial()).expect("validated initial");
    let noop = StackAction::ALL.iter().position(|a| *a == StackAction::Noop).expect("noop");
    let mut prior = BTreeMap::new();
    prior.insert(STATE.to_string(), Prior::Categorical(point(states.len(), initial)));
    prior.insert(ACTION_A.to_string(), Prior::Categorical(point(4, noop)));
    prior.insert(ACTION_B.to_string(), Prior::Categorical(point(4, noop)));
    prior.insert(STACK_A.to_string(), Prior::Dirac(int(0)));
    prior.insert(STACK_B.to_string(), Prior::Dirac(int(0)));

    let spec = finish(nodes, prior, cpds);
    let metadata = serde_json::json!({
        "source": "pda2",
        "nodes": {
            "input": [INPUT],
            "hidden": [STATE, ACTION_A, ACTION_B, STACK_A, STACK_B, TOP_A, TOP_B, EMPTY_A, EMPTY_B],
            "output": [OUTPUT],
        },
        "state": STATE,
        "stacks": [STACK_A, STACK_B],
        "initial": pda.initial(),
        "slice_offset": 1,
    });
    Ok(CompiledNetwork { spec, metadata })
}

/// Discrete network for the finite control alone, with both stack reads
/// pinned. Nodes: `U`, `State`, `Y`.
pub fn pda_control_dbn(
    pda: &TwoStackPda,
    read_a: StackRead,
    read_b: StackRead,
) -> Result<DbnSpec, CompileError> {
    let violations = validate_pda(pda);
    if !violations.is_empty() {
        return Err(CompileError::InvalidPda(violations));
    }
    let states = pda.states().to_vec();
    let state_refs: Vec<&str> = states.iter().map(|s| s.as_str()).collect();
    let nodes = vec![
        NodeDecl::categorical(INPUT, Role::Input, &["0", "1", "end"]),
        NodeDecl::categorical(STATE, Role::Hidden, &state_refs),
        NodeDecl::categorical(OUTPUT, Role::Output, &[RUN, HALT_REJECT, HALT_ACCEPT]),
    ];
    let mut rows = Vec::new();
    for state in &states {
        for input in InputSymbol::ALL {
            let next = if is_halt_state(state) {
                state.clone()
            } else {
                let guard = Guard { state: state.clone(), a: read_a, b: read_b, input };
                pda.rule(&guard).expect("validated pda is total").next.clone()
            };
            let at = states.iter().position(|s| *s == next).expect("validated state");
            rows.push(TableRow {
                given: vec![state.clone(), input.label().to_string()],
                probs: point(states.len(), at),
            });
        }
    }
    let mut cpds = BTreeMap::new();
    cpds.insert(INPUT.to_string(), input_cpd());
    cpds.insert(
        STATE.to_string(),
        Cpd::Table { parents: vec![ParentRef::prev(STATE), ParentRef::same(INPUT)], rows },
    );
    cpds.insert(OUTPUT.to_string(), output_cpd(&states));
    let initial = states.iter().position(|s| s == pda.initial()).expect("validated initial");
    let mut prior = BTreeMap::new();
    prior.insert(STATE.to_string(), Prior::Categorical(point(states.len(), initial)));
    Ok(finish(nodes, prior, cpds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{fixtures, pda_trace, tm_trace, RunOutcome};
    use crate::dbn_model::{topological_order, unroll, validate};

    #[test]
    fn parity_network_shape() {
        let net = pda_to_dbn(&fixtures::parity()).unwrap();
        assert_eq!(net.spec.nodes.len(), 11);
        assert_eq!(validate(&net.spec), vec![]);
        assert_eq!(
            net.spec.interface(),
            vec![EMPTY_A, EMPTY_B, STACK_A, STACK_B, STATE, TOP_A, TOP_B]
        );
    }

    #[test]
    fn stack_slice_order() {
        let net = pda_to_dbn(&fixtures::parity()).unwrap();
        let order = topological_order(&net.spec).unwrap();
        let pos = |n: &str| order.iter().position(|x| x == n).unwrap();
        assert!(pos(ACTION_A) < pos(STACK_A));
        assert!(pos(STACK_A) < pos(TOP_A));
        let un = unroll(&net.spec, 2).unwrap();
        let at = |n: &str, t| un.position(n, t).unwrap();
        assert!(at(STACK_A, 1) < at(TOP_A, 1));
        assert!(at(TOP_A, 1) < at(ACTION_A, 2));
        assert!(at(ACTION_A, 2) < at(STACK_A, 2));
    }

    #[test]
    fn unroll_counts() {
        let net = pda_to_dbn(&fixtures::parity()).unwrap();
        let lag0 = net.spec.edges.iter().filter(|e| e.lag == 0).count();
        let lag1 = net.spec.edges.iter().filter(|e| e.lag == 1).count();
        let un = unroll(&net.spec, 3).unwrap();
        assert_eq!(un.nodes.len(), 33);
        assert_eq!(un.edge_count(), 3 * lag0 + 2 * lag1);
    }

    #[test]
    fn rejects_invalid_pda() {
        let pda = TwoStackPda::new(vec!["q".into()], "q", vec![]);
        assert!(matches!(pda_to_dbn(&pda), Err(CompileError::InvalidPda(_))));
    }

    #[test]
    fn increment_pda_matches_tm() {
        let tm = fixtures::increment();
        let (pda, align) = tm_to_pda(&tm).unwrap();
        assert!(validate_pda(&pda).is_empty(), "{:?}", validate_pda(&pda));
        for input in ["0", "1", "11", "1011", "111"] {
            let bits = input.parse().unwrap();
            let tm_run = tm_trace(&tm, &bits, 50).unwrap();
            let inputs = crate::automata::inputs_from_bits(&bits);
            let pda_run = pda_trace(&pda, &inputs, 500).unwrap();
            let (RunOutcome::Halted { verdict: v1, step: s1 }, RunOutcome::Halted { verdict: v2, step: s2 }) =
                (tm_run.outcome, pda_run.outcome)
            else {
                panic!("both should halt")
            };
            assert_eq!(v1, v2);
            assert_eq!(s2, align.pda_step(s1, bits.len()));
            for (k, tc) in tm_run.configs.iter().enumerate() {
                let pc = &pda_run.configs[align.pda_step(k, bits.len())];
                assert_eq!(pc.state, run_state(&tc.state));
                let (a, b) = tc.as_stacks();
                assert_eq!(pc.stack_a.trim_bottom_zeros(), a);
                assert_eq!(pc.stack_b.trim_bottom_zeros(), b);
            }
        }
    }

    #[test]
    fn immediate_halt_tm() {
        let tm = TuringMachine::new(vec![HALT_REJECT.into(), HALT_ACCEPT.into()], HALT_ACCEPT, vec![]);
        let (pda, align) = tm_to_pda(&tm).unwrap();
        assert_eq!(
            crate::automata::pda_run(&pda, &[], 5),
            Ok(RunOutcome::Halted { verdict: crate::automata::Verdict::Accept, step: 0 })
        );
        assert_eq!(align.pda_step(0, 7), 0);
    }

    #[test]
    fn left_move_on_empty_a_pushes_blank() {
        let tm = fixtures::increment();
        let (pda, _) = tm_to_pda(&tm).unwrap();
        let guard = Guard {
            state: run_state("carry"),
            a: StackRead::EMPTY,
            b: StackRead::TOP0,
            input: InputSymbol::End,
        };
        let rule = pda.rule(&guard).unwrap();
        assert_eq!(rule.action_a, StackAction::Noop);
        assert_eq!(rule.next, left_write(HALT_ACCEPT, true, false));
        let rule = pda.rule(&Guard { state: left_cell(HALT_ACCEPT, false), ..guard }).unwrap();
        assert_eq!(rule.action_b, StackAction::Push0);
    }

    #[test]
    fn control_network_rows() {
        let pda = fixtures::parity();
        let spec = pda_control_dbn(&pda, StackRead::EMPTY, StackRead::EMPTY).unwrap();
        assert_eq!(validate(&spec), vec![]);
    }
}
