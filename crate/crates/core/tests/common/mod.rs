#![allow(dead_code)]

use dbnsim::automata::{
    is_halt_state, Guard, InputSymbol, PdaRule, StackAction, Transition, TwoStackPda, HALT_ACCEPT, HALT_REJECT,
};
use dbnsim::dbn_model::{Cpd, DbnSpec, NodeDecl, ParentRef, Prior, Role, TableRow};
use dbnsim::inference::Evidence;
use dbnsim::rational::{self, Rational};
use dbnsim::stack_codec::BitString;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeMap;

/// A random valid deterministic PDA with `working` non-halting states. Halt
/// states are reachable from every guard with probability `halt_bias`.
pub fn random_pda(rng: &mut impl Rng, working: usize, halt_bias: f64) -> TwoStackPda {
    let mut states: Vec<String> = (0..working).map(|i| format!("q{i}")).collect();
    states.push(HALT_REJECT.into());
    states.push(HALT_ACCEPT.into());
    let mut transitions = Vec::new();
    let probe = TwoStackPda::new(states.clone(), "q0", vec![]);
    for guard in probe.canonical_guards().collect::<Vec<Guard>>() {
        if is_halt_state(&guard.state) {
            continue;
        }
        let next = if rng.gen_bool(halt_bias) {
            [HALT_REJECT, HALT_ACCEPT].choose(rng).unwrap().to_string()
        } else {
            states[rng.gen_range(0..working)].clone()
        };
        let mut action = |empty: bool| {
            let mut options = vec![StackAction::Push0, StackAction::Push1, StackAction::Noop];
            if !empty {
                options.push(StackAction::Pop);
                options.push(StackAction::Pop);
            }
            *options.choose(rng).unwrap()
        };
        let action_a = action(guard.a.empty());
        let action_b = action(guard.b.empty());
        transitions.push(Transition { guard, rule: PdaRule { next, action_a, action_b } });
    }
    TwoStackPda::new(states, "q0", transitions)
}

pub fn random_bits(rng: &mut impl Rng, max_len: usize) -> BitString {
    let len = rng.gen_range(0..=max_len);
    BitString::from_bits((0..len).map(|_| rng.gen_bool(0.5)).collect())
}

pub fn random_inputs(rng: &mut impl Rng, max_len: usize) -> Vec<InputSymbol> {
    dbnsim::automata::inputs_from_bits(&random_bits(rng, max_len))
}

fn random_distribution(rng: &mut impl Rng, n: usize) -> Vec<Rational> {
    // strictly positive entries over a small common denominator
    let weights: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    weights.iter().map(|&w| rational::ratio(w, total)).collect()
}

fn table(rng: &mut impl Rng, parents: Vec<ParentRef>, cards: &[usize], outcomes: usize, labels: &BTreeMap<String, Vec<String>>) -> Cpd {
    let mut rows = Vec::new();
    let mut combo = vec![0; parents.len()];
    loop {
        let given = parents.iter().zip(&combo).map(|(p, &i)| labels[&p.node][i].clone()).collect();
        rows.push(TableRow { given, probs: random_distribution(rng, outcomes) });
        let mut k = parents.len();
        loop {
            if k == 0 {
                return Cpd::Table { parents, rows };
            }
            k -= 1;
            combo[k] += 1;
            if combo[k] < cards[k] {
                break;
            }
            combo[k] = 0;
        }
    }
}

/// A random discrete network: up to three binary hidden nodes, up to two
/// binary outputs and optionally one binary input feeding its own slice.
pub fn random_discrete_dbn(rng: &mut impl Rng) -> DbnSpec {
    let n_hidden = rng.gen_range(1..=3);
    let n_out = rng.gen_range(1..=2);
    let with_input = rng.gen_bool(0.6);
    let bits = ["0", "1"];
    let hidden: Vec<String> = (0..n_hidden).map(|i| format!("H{i}")).collect();
    let outputs: Vec<String> = (0..n_out).map(|i| format!("O{i}")).collect();
    let mut nodes = Vec::new();
    if with_input {
        nodes.push(NodeDecl::categorical("U", Role::Input, &bits));
    }
    nodes.extend(hidden.iter().map(|h| NodeDecl::categorical(h, Role::Hidden, &bits)));
    nodes.extend(outputs.iter().map(|o| NodeDecl::categorical(o, Role::Output, &bits)));
    let labels: BTreeMap<String, Vec<String>> =
        nodes.iter().map(|n| (n.name.clone(), vec!["0".into(), "1".into()])).collect();

    let mut cpds = BTreeMap::new();
    let mut prior = BTreeMap::new();
    if with_input {
        cpds.insert("U".to_string(), table(rng, vec![], &[], 2, &labels));
    }
    for (i, h) in hidden.iter().enumerate() {
        let mut parents = Vec::new();
        for earlier in &hidden[..i] {
            if rng.gen_bool(0.4) {
                parents.push(ParentRef::same(earlier));
            }
        }
        for any in &hidden {
            if rng.gen_bool(0.5) {
                parents.push(ParentRef::prev(any));
            }
        }
        if with_input && rng.gen_bool(0.5) {
            parents.push(ParentRef::same("U"));
        }
        let cards = vec![2; parents.len()];
        let needs_prior = parents.iter().any(|p| p.lag == 1);
        if needs_prior || rng.gen_bool(0.3) {
            prior.insert(h.clone(), Prior::Categorical(random_distribution(rng, 2)));
        }
        cpds.insert(h.clone(), table(rng, parents, &cards, 2, &labels));
    }
    for o in &outputs {
        let mut parents: Vec<ParentRef> = hidden.iter().filter(|_| rng.gen_bool(0.5)).map(|h| ParentRef::same(h)).collect();
        if parents.is_empty() {
            parents.push(ParentRef::same(hidden.choose(rng).unwrap()));
        }
        let cards = vec![2; parents.len()];
        cpds.insert(o.clone(), table(rng, parents, &cards, 2, &labels));
    }
    let mut spec = DbnSpec { nodes, prior, edges: vec![], cpds };
    spec.edges = spec.edges_from_cpds();
    spec
}

/// Random evidence for `slices` slices: every output observed, the input
/// observed with probability `input_rate`.
pub fn random_evidence(rng: &mut impl Rng, spec: &DbnSpec, slices: usize, input_rate: f64) -> Vec<Evidence> {
    (0..slices)
        .map(|_| {
            let mut ev = Evidence::new();
            for n in &spec.nodes {
                if n.role == Role::Output || (n.role == Role::Input && rng.gen_bool(input_rate)) {
                    ev.insert(n.name.clone(), if rng.gen_bool(0.5) { "1" } else { "0" }.to_string());
                }
            }
            ev
        })
        .collect()
}
