use super::{Cpd, DbnSpec, NodeKind, ParentRef, Prior, Role};
use crate::rational::{format, Rational};
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateNode(String),
    EmptyOutcomes(String),
    DuplicateOutcome { node: String, label: String },
    UnknownNode { context: String, name: String },
    LagOutOfRange { parent: String, child: String, lag: u32 },
    DuplicateEdge { parent: String, child: String, lag: u32 },
    CycleViolation(Vec<String>),
    MissingCpd(String),
    ParentMismatch { node: String },
    KindMismatch { node: String, detail: String },
    InputHasParents(String),
    MissingPrior(String),
    PriorMismatch { node: String, detail: String },
    StochasticityViolation { node: String, given: Vec<String>, sum: Rational },
    NegativeProbability { node: String, given: Vec<String> },
    RowArity { node: String, given: Vec<String> },
    UnknownOutcome { node: String, label: String },
    MissingRow { node: String, given: Vec<String> },
    DuplicateRow { node: String, given: Vec<String> },
    InvalidSteepness(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            DuplicateNode(n) => write!(f, "DuplicateNode: {n}"),
            EmptyOutcomes(n) => write!(f, "EmptyOutcomes: {n}"),
            DuplicateOutcome { node, label } => write!(f, "DuplicateOutcome: {node} lists {label} twice"),
            UnknownNode { context, name } => write!(f, "UnknownNode: {name} referenced by {context}"),
            LagOutOfRange { parent, child, lag } => {
                write!(f, "LagOutOfRange: {parent} -> {child} has lag {lag}")
            }
            DuplicateEdge { parent, child, lag } => {
                write!(f, "DuplicateEdge: {parent} -> {child} (lag {lag})")
            }
            CycleViolation(nodes) => write!(f, "CycleViolation: {}", nodes.join(", ")),
            MissingCpd(n) => write!(f, "MissingCpd: {n}"),
            ParentMismatch { node } => write!(f, "ParentMismatch: CPD parents of {node} differ from its edges"),
            KindMismatch { node, detail } => write!(f, "KindMismatch: {node}: {detail}"),
            InputHasParents(n) => write!(f, "InputHasParents: {n}"),
            MissingPrior(n) => write!(f, "MissingPrior: {n} has previous-slice parents but no prior"),
            PriorMismatch { node, detail } => write!(f, "PriorMismatch: {node}: {detail}"),
            StochasticityViolation { node, given, sum } => write!(
                f,
                "StochasticityViolation: {node} row [{}] sums to {}",
                given.join(", "),
                format(sum)
            ),
            NegativeProbability { node, given } => {
                write!(f, "NegativeProbability: {node} row [{}]", given.join(", "))
            }
            RowArity { node, given } => write!(f, "RowArity: {node} row [{}]", given.join(", ")),
            UnknownOutcome { node, label } => write!(f, "UnknownOutcome: {label} for {node}"),
            MissingRow { node, given } => write!(f, "MissingRow: {node} has no row for [{}]", given.join(", ")),
            DuplicateRow { node, given } => write!(f, "DuplicateRow: {node} row [{}]", given.join(", ")),
            InvalidSteepness(n) => write!(f, "InvalidSteepness: {n}"),
        }
    }
}

/// Mixed-radix enumeration of all outcome tuples.
pub(crate) fn combos(cards: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &c in cards {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..c).map(move |i| {
                    let mut v = prefix.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
    }
    out
}

struct Checker<'a> {
    kinds: BTreeMap<&'a str, &'a NodeKind>,
    out: Vec<Violation>,
}

impl<'a> Checker<'a> {
    fn outcomes(&self, node: &str) -> Option<&'a [String]> {
        self.kinds.get(node).and_then(|k| k.outcomes())
    }

    fn known(&mut self, context: &str, p: &ParentRef) -> bool {
        if self.kinds.contains_key(p.node.as_str()) {
            true
        } else {
            self.out.push(Violation::UnknownNode {
                context: context.to_string(),
                name: p.node.clone(),
            });
            false
        }
    }

    fn kind_mismatch(&mut self, node: &str, detail: impl Into<String>) {
        self.out.push(Violation::KindMismatch {
            node: node.to_string(),
            detail: detail.into(),
        });
    }

    /// Checks that `given` tuples cover every combination of the parents'
    /// outcomes exactly once. Returns false if a parent is not categorical.
    fn check_coverage<'g>(
        &mut self,
        node: &str,
        parents: &[ParentRef],
        given: impl Iterator<Item = &'g Vec<String>>,
    ) {
        let mut labels: Vec<&[String]> = Vec::new();
        for p in parents {
            match self.outcomes(&p.node) {
                Some(o) => labels.push(o),
                None => {
                    self.kind_mismatch(node, format!("parent {} must be categorical", p.node));
                    return;
                }
            }
        }
        let mut seen = BTreeSet::new();
        for g in given {
            if g.len() != parents.len() {
                self.out.push(Violation::RowArity {
                    node: node.to_string(),
                    given: g.clone(),
                });
                continue;
            }
            let mut ok = true;
            for (label, allowed) in g.iter().zip(&labels) {
                if !allowed.contains(label) {
                    self.out.push(Violation::UnknownOutcome {
                        node: node.to_string(),
                        label: label.clone(),
                    });
                    ok = false;
                }
            }
            if ok && !seen.insert(g.clone()) {
                self.out.push(Violation::DuplicateRow {
                    node: node.to_string(),
                    given: g.clone(),
                });
            }
        }
        let cards: Vec<usize> = labels.iter().map(|l| l.len()).collect();
        for combo in combos(&cards) {
            let g: Vec<String> = combo
                .iter()
                .zip(&labels)
                .map(|(&i, l)| l[i].clone())
                .collect();
            if !seen.contains(&g) {
                self.out.push(Violation::MissingRow {
                    node: node.to_string(),
                    given: g,
                });
            }
        }
    }

    fn check_distribution(&mut self, node: &str, given: &[String], probs: &[Rational], expected: usize) {
        if probs.len() != expected {
            self.out.push(Violation::RowArity {
                node: node.to_string(),
                given: given.to_vec(),
            });
            return;
        }
        if probs.iter().any(|p| *p < Rational::zero()) {
            self.out.push(Violation::NegativeProbability {
                node: node.to_string(),
                given: given.to_vec(),
            });
        }
        let sum: Rational = probs.iter().cloned().sum();
        if !sum.is_one() {
            self.out.push(Violation::StochasticityViolation {
                node: node.to_string(),
                given: given.to_vec(),
                sum,
            });
        }
    }

    fn check_cpd(&mut self, node: &str, kind: &NodeKind, cpd: &Cpd) {
        let context = format!("CPD of {node}");
        let parents = cpd.parents();
        if !parents.iter().all(|p| self.known(&context, p)) {
            return;
        }
        match cpd {
            Cpd::Table { parents, rows } => {
                let Some(outcomes) = kind.outcomes() else {
                    self.kind_mismatch(node, "table CPD on a continuous node");
                    return;
                };
                self.check_coverage(node, parents, rows.iter().map(|r| &r.given));
                for row in rows {
                    self.check_distribution(node, &row.given, &row.probs, outcomes.len());
                }
            }
            Cpd::LinearDirac { input, selectors, cases } => {
                if !kind.is_continuous() {
                    self.kind_mismatch(node, "linear Dirac CPD on a categorical node");
                }
                if self.outcomes(&input.node).is_some() {
                    self.kind_mismatch(node, format!("input {} must be continuous", input.node));
                }
                self.check_coverage(node, selectors, cases.iter().map(|c| &c.given));
            }
            Cpd::Threshold { parent, .. } | Cpd::SoftThreshold { parent, .. } => {
                if kind.outcomes().map(|o| o.len()) != Some(2) {
                    self.kind_mismatch(node, "threshold CPD needs a binary child");
                }
                if self.outcomes(&parent.node).is_some() {
                    self.kind_mismatch(node, format!("parent {} must be continuous", parent.node));
                }
                if let Cpd::SoftThreshold { steepness, .. } = cpd {
                    if !(steepness.is_finite() && *steepness > 0.0) {
                        self.out.push(Violation::InvalidSteepness(node.to_string()));
                    }
                }
            }
        }
    }
}

fn find_cycle(spec: &DbnSpec) -> Option<Vec<String>> {
    let names: Vec<&str> = spec.nodes.iter().map(|n| n.name.as_str()).collect();
    let mut indeg: BTreeMap<&str, usize> = names.iter().map(|&n| (n, 0)).collect();
    let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in spec.edges.iter().filter(|e| e.lag == 0) {
        if let (true, Some(d)) = (indeg.contains_key(e.parent.as_str()), indeg.get_mut(e.child.as_str())) {
            *d += 1;
            children.entry(e.parent.as_str()).or_default().push(e.child.as_str());
        }
    }
    let mut ready: Vec<&str> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&n, _)| n).collect();
    while let Some(n) = ready.pop() {
        indeg.remove(n);
        for &c in children.get(n).map(|v| v.as_slice()).unwrap_or(&[]) {
            if let Some(d) = indeg.get_mut(c) {
                *d -= 1;
                if *d == 0 {
                    ready.push(c);
                }
            }
        }
    }
    if indeg.is_empty() {
        None
    } else {
        Some(indeg.keys().map(|s| s.to_string()).collect())
    }
}

/// Structural and numerical checks. An empty result means the spec can be
/// unrolled and filtered.
pub fn validate(spec: &DbnSpec) -> Vec<Violation> {
    let mut kinds = BTreeMap::new();
    let mut out = Vec::new();
    for n in &spec.nodes {
        if kinds.insert(n.name.as_str(), &n.kind).is_some() {
            out.push(Violation::DuplicateNode(n.name.clone()));
        }
        if let NodeKind::Categorical(outcomes) = &n.kind {
            if outcomes.is_empty() {
                out.push(Violation::EmptyOutcomes(n.name.clone()));
            }
            let mut seen = BTreeSet::new();
            for o in outcomes {
                if !seen.insert(o) {
                    out.push(Violation::DuplicateOutcome {
                        node: n.name.clone(),
                        label: o.clone(),
                    });
                }
            }
        }
    }
    let mut c = Checker { kinds, out };

    let mut edge_set = BTreeSet::new();
    for e in &spec.edges {
        for name in [&e.parent, &e.child] {
            if !c.kinds.contains_key(name.as_str()) {
                c.out.push(Violation::UnknownNode {
                    context: format!("edge {} -> {}", e.parent, e.child),
                    name: name.clone(),
                });
            }
        }
        if e.lag > 1 {
            c.out.push(Violation::LagOutOfRange {
                parent: e.parent.clone(),
                child: e.child.clone(),
                lag: e.lag,
            });
        }
        if !edge_set.insert(e.clone()) {
            c.out.push(Violation::DuplicateEdge {
                parent: e.parent.clone(),
                child: e.child.clone(),
                lag: e.lag,
            });
        }
    }
    for (name, cpd) in &spec.cpds {
        if !c.kinds.contains_key(name.as_str()) {
            c.out.push(Violation::UnknownNode {
                context: "cpds".into(),
                name: name.clone(),
            });
            continue;
        }
        for p in cpd.parents() {
            if p.lag > 1 {
                c.out.push(Violation::LagOutOfRange {
                    parent: p.node.clone(),
                    child: name.clone(),
                    lag: p.lag,
                });
            }
        }
    }
    let mut declared: Vec<_> = spec.edges.clone();
    declared.sort();
    if declared != spec.edges_from_cpds() {
        // declared parents, parents implied by the CPD
        type Parents<'a> = (Vec<(&'a str, u32)>, Vec<(String, u32)>);
        let mut by_child: BTreeMap<&str, Parents> = BTreeMap::new();
        for e in &spec.edges {
            by_child.entry(e.child.as_str()).or_default().0.push((e.parent.as_str(), e.lag));
        }
        for (child, cpd) in &spec.cpds {
            by_child.entry(child.as_str()).or_default().1 =
                cpd.parents().into_iter().map(|p| (p.node, p.lag)).collect();
        }
        for (child, (mut from_edges, from_cpd)) in by_child {
            let mut from_cpd: Vec<(&str, u32)> = from_cpd.iter().map(|(n, l)| (n.as_str(), *l)).collect();
            from_edges.sort();
            from_cpd.sort();
            if from_edges != from_cpd {
                c.out.push(Violation::ParentMismatch { node: child.to_string() });
            }
        }
    }
    if let Some(cycle) = find_cycle(spec) {
        c.out.push(Violation::CycleViolation(cycle));
    }

    for n in &spec.nodes {
        let Some(cpd) = spec.cpds.get(&n.name) else {
            c.out.push(Violation::MissingCpd(n.name.clone()));
            continue;
        };
        let parents = cpd.parents();
        if n.role == Role::Input {
            if !parents.is_empty() {
                c.out.push(Violation::InputHasParents(n.name.clone()));
            }
            if n.kind.is_continuous() {
                c.kind_mismatch(&n.name, "input nodes must be categorical");
            }
        }
        c.check_cpd(&n.name, &n.kind, cpd);
        if parents.iter().any(|p| p.lag == 1) && !spec.prior.contains_key(&n.name) {
            c.out.push(Violation::MissingPrior(n.name.clone()));
        }
    }

    for (name, prior) in &spec.prior {
        let Some(kind) = c.kinds.get(name.as_str()).copied() else {
            c.out.push(Violation::UnknownNode {
                context: "prior".into(),
                name: name.clone(),
            });
            continue;
        };
        match (prior, kind) {
            (Prior::Categorical(probs), NodeKind::Categorical(outcomes)) => {
                c.check_distribution(name, &[], probs, outcomes.len());
            }
            (Prior::Dirac(_), NodeKind::ContinuousDirac) => {}
            _ => c.out.push(Violation::PriorMismatch {
                node: name.clone(),
                detail: "prior kind does not match node kind".into(),
            }),
        }
    }
    c.out
}
