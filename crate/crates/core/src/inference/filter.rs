//! Exact forward filtering over a hybrid two-slice network.
//!
//! The belief after slice `t` is a finite mixture: one weighted component per
//! distinct assignment to the interface nodes. Continuous nodes only ever
//! hold point masses, so a component pins every stack to a single rational.
//! Advancing a slice expands each component through the template in
//! topological order, branching on categorical outcomes and evaluating
//! Dirac and threshold CPDs exactly.

use super::weight::Weight;
use crate::automata::{HALT_ACCEPT, HALT_REJECT};
use crate::dbn_model::{topological_order, validate, Affine, Cpd, DbnSpec, Prior, Role, Violation};
use crate::rational::{self, Rational};
use crate::stack_codec::heaviside;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Observed outcome labels, keyed by node name.
pub type Evidence = BTreeMap<String, String>;

pub const DEFAULT_COMPONENT_CAP: usize = 4096;
pub const COMPONENT_CAP_ENV: &str = "DBNSIM_COMPONENT_CAP";

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Mode {
    #[default]
    Exact,
    /// Every hard threshold becomes a logistic with this steepness.
    Soft { steepness: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Outcome(usize),
    Point(Rational),
}

impl Value {
    pub fn point(&self) -> Option<&Rational> {
        match self {
            Value::Point(q) => Some(q),
            Value::Outcome(_) => None,
        }
    }

    pub fn outcome(&self) -> Option<usize> {
        match self {
            Value::Outcome(i) => Some(*i),
            Value::Point(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Marginal<W> {
    Categorical(Vec<W>),
    Dirac(BTreeMap<Rational, W>),
}

impl<W: Weight> Marginal<W> {
    pub fn categorical(&self) -> Option<&[W]> {
        match self {
            Marginal::Categorical(p) => Some(p),
            Marginal::Dirac(_) => None,
        }
    }

    pub fn dirac(&self) -> Option<&BTreeMap<Rational, W>> {
        match self {
            Marginal::Dirac(m) => Some(m),
            Marginal::Categorical(_) => None,
        }
    }

    /// Weight on a value, zero if absent.
    pub fn weight(&self, value: &Value) -> W {
        match (self, value) {
            (Marginal::Categorical(p), Value::Outcome(i)) => p.get(*i).cloned().unwrap_or_else(W::zero),
            (Marginal::Dirac(m), Value::Point(q)) => m.get(q).cloned().unwrap_or_else(W::zero),
            _ => W::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Belief<W> {
    /// 1-based slice index.
    pub slice: usize,
    /// Names of the interface nodes, in component key order.
    pub interface: Vec<String>,
    pub components: BTreeMap<Vec<Value>, W>,
    pub marginals: BTreeMap<String, Marginal<W>>,
    /// Probability of this slice's evidence given all earlier evidence.
    pub evidence_probability: W,
    /// Scalar operations, affine evaluations and threshold comparisons
    /// performed to produce this belief.
    pub arith_ops: u64,
}

impl<W: Weight> Belief<W> {
    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// Total weight of components agreeing with every `(node, value)` pair.
    /// Nodes outside the interface are ignored.
    pub fn weight_where(&self, fixed: &[(&str, Value)]) -> W {
        let positions: Vec<(usize, &Value)> = fixed
            .iter()
            .filter_map(|(n, v)| self.interface.iter().position(|i| i == n).map(|p| (p, v)))
            .collect();
        let mut total = W::zero();
        for (key, w) in &self.components {
            if positions.iter().all(|(p, v)| key[*p] == **v) {
                total = total + w.clone();
            }
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FilterError {
    #[error("network is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    ValidationFailed(Vec<Violation>),
    #[error("threshold of {node} in slice {slice} evaluated at exactly 1/2")]
    ThresholdAmbiguous { node: String, slice: usize },
    #[error("evidence in slice {slice} has probability zero")]
    ZeroEvidenceProbability { slice: usize },
    #[error("slice {slice} needs {count} components, above the cap of {cap}")]
    ComponentOverflow { slice: usize, count: usize, cap: usize },
    #[error("soft thresholds need a floating-point scalar")]
    UnsupportedSoftMode,
    #[error("unknown evidence {node}={value}")]
    UnknownEvidence { node: String, value: String },
    #[error("belief is for slice {belief}, filter expected a belief from the same network")]
    ForeignBelief { belief: usize },
}

#[derive(Debug, Clone, Copy)]
enum Src {
    Cur(usize),
    /// Position in the previous slice's interface key.
    Prev(usize),
}

#[derive(Debug, Clone)]
enum Kernel<W> {
    Prior(Vec<W>),
    Point(Rational),
    Table {
        parents: Vec<Src>,
        strides: Vec<usize>,
        rows: Vec<Vec<W>>,
    },
    Dirac {
        input: Src,
        selectors: Vec<Src>,
        strides: Vec<usize>,
        maps: Vec<Affine>,
    },
    Threshold {
        parent: Src,
        map: Affine,
        complement: bool,
        steepness: Option<f64>,
    },
}

#[derive(Debug, Clone)]
struct Node<W> {
    name: String,
    outcomes: Option<Vec<String>>,
    first: Kernel<W>,
    later: Kernel<W>,
}

/// A network compiled for filtering with scalar `W`.
#[derive(Debug, Clone)]
pub struct Filter<W> {
    spec: DbnSpec,
    mode: Mode,
    nodes: Vec<Node<W>>,
    order: Vec<usize>,
    interface: Vec<usize>,
    interface_names: Vec<String>,
    cap: usize,
    input: Option<usize>,
    halt: Option<(usize, usize, usize)>,
}

fn strides(cards: &[usize]) -> Vec<usize> {
    let mut s = vec![1; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * cards[i + 1];
    }
    s
}

fn cap_from_env() -> usize {
    std::env::var(COMPONENT_CAP_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_COMPONENT_CAP)
}

struct Acc<W> {
    slice: usize,
    z: W,
    components: BTreeMap<Vec<Value>, W>,
    marginals: Vec<Marginal<W>>,
    ops: u64,
    /// Logistic values already computed this slice; components often share
    /// stack values.
    soft: BTreeMap<(usize, Rational), W>,
}

impl<W: Weight> Filter<W> {
    pub fn new(spec: &DbnSpec, mode: Mode) -> Result<Self, FilterError> {
        let violations = validate(spec);
        if !violations.is_empty() {
            return Err(FilterError::ValidationFailed(violations));
        }
        let has_soft = spec.cpds.values().any(|c| matches!(c, Cpd::SoftThreshold { .. }));
        if W::is_exact() && (has_soft || matches!(mode, Mode::Soft { .. })) {
            return Err(FilterError::UnsupportedSoftMode);
        }
        if let Mode::Soft { steepness } = mode {
            if !(steepness.is_finite() && steepness > 0.0) {
                return Err(FilterError::ValidationFailed(vec![Violation::InvalidSteepness(
                    "mode".to_string(),
                )]));
            }
        }
        let index: BTreeMap<&str, usize> =
            spec.nodes.iter().enumerate().map(|(i, n)| (n.name.as_str(), i)).collect();
        let interface_names = spec.interface();
        let interface: Vec<usize> = interface_names.iter().map(|n| index[n.as_str()]).collect();
        let order = topological_order(spec)
            .map_err(|v| FilterError::ValidationFailed(vec![v]))?
            .iter()
            .map(|n| index[n.as_str()])
            .collect();

        let card = |name: &str| spec.nodes[index[name]].kind.outcomes().map_or(0, |o| o.len());
        let label_index = |name: &str, label: &str| {
            spec.nodes[index[name]]
                .kind
                .outcomes()
                .and_then(|o| o.iter().position(|x| x == label))
                .expect("validated label")
        };
        let src = |p: &crate::dbn_model::ParentRef| {
            if p.lag == 0 {
                Src::Cur(index[p.node.as_str()])
            } else {
                Src::Prev(interface_names.iter().position(|n| *n == p.node).expect("lag-1 parent is in the interface"))
            }
        };
        let compile = |cpd: &Cpd| -> Kernel<W> {
            match cpd {
                Cpd::Table { parents, rows } => {
                    let cards: Vec<usize> = parents.iter().map(|p| card(&p.node)).collect();
                    let st = strides(&cards);
                    let mut dense = vec![Vec::new(); cards.iter().product()];
                    for row in rows {
                        let at: usize = row
                            .given
                            .iter()
                            .zip(parents)
                            .zip(&st)
                            .map(|((l, p), s)| label_index(&p.node, l) * s)
                            .sum();
                        dense[at] = row.probs.iter().map(W::from_ratio).collect();
                    }
                    Kernel::Table { parents: parents.iter().map(src).collect(), strides: st, rows: dense }
                }
                Cpd::LinearDirac { input, selectors, cases } => {
                    let cards: Vec<usize> = selectors.iter().map(|p| card(&p.node)).collect();
                    let st = strides(&cards);
                    let mut maps = vec![Affine::new(Rational::one(), Rational::zero()); cards.iter().product()];
                    for case in cases {
                        let at: usize = case
                            .given
                            .iter()
                            .zip(selectors)
                            .zip(&st)
                            .map(|((l, p), s)| label_index(&p.node, l) * s)
                            .sum();
                        maps[at] = case.map.clone();
                    }
                    Kernel::Dirac { input: src(input), selectors: selectors.iter().map(src).collect(), strides: st, maps }
                }
                Cpd::Threshold { parent, map, complement } => Kernel::Threshold {
                    parent: src(parent),
                    map: map.clone(),
                    complement: *complement,
                    steepness: match mode {
                        Mode::Exact => None,
                        Mode::Soft { steepness } => Some(steepness),
                    },
                },
                Cpd::SoftThreshold { parent, map, complement, steepness } => Kernel::Threshold {
                    parent: src(parent),
                    map: map.clone(),
                    complement: *complement,
                    steepness: Some(*steepness),
                },
            }
        };

        let nodes = spec
            .nodes
            .iter()
            .map(|n| {
                let later = compile(&spec.cpds[&n.name]);
                let first = match spec.prior.get(&n.name) {
                    Some(Prior::Categorical(p)) => Kernel::Prior(p.iter().map(W::from_ratio).collect()),
                    Some(Prior::Dirac(q)) => Kernel::Point(q.clone()),
                    None => later.clone(),
                };
                Node { name: n.name.clone(), outcomes: n.kind.outcomes().map(|o| o.to_vec()), first, later }
            })
            .collect();

        let input = spec.nodes.iter().position(|n| {
            n.role == Role::Input && n.kind.outcomes().is_some_and(|o| o.iter().any(|l| l == "end"))
        });
        let halt = spec.nodes.iter().enumerate().find_map(|(i, n)| {
            let o = n.kind.outcomes()?;
            let r = o.iter().position(|l| l == HALT_REJECT)?;
            let a = o.iter().position(|l| l == HALT_ACCEPT)?;
            (n.role == Role::Output).then_some((i, r, a))
        });

        Ok(Filter {
            spec: spec.clone(),
            mode,
            nodes,
            order,
            interface,
            interface_names,
            cap: cap_from_env(),
            input,
            halt,
        })
    }

    pub fn with_component_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn spec(&self) -> &DbnSpec {
        &self.spec
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn component_cap(&self) -> usize {
        self.cap
    }

    /// The categorical input node carrying machine symbols, if any.
    pub fn input_node(&self) -> Option<&str> {
        self.input.map(|i| self.nodes[i].name.as_str())
    }

    /// Outcome labels of a categorical node.
    pub fn outcomes(&self, node: &str) -> Option<&[String]> {
        self.nodes.iter().find(|n| n.name == node)?.outcomes.as_deref()
    }

    /// `Some(true)` once the halting output puts more than 1/2 on accept,
    /// `Some(false)` for reject, `None` otherwise or without such an output.
    pub fn halt_verdict(&self, belief: &Belief<W>) -> Option<bool> {
        let (node, reject, accept) = self.halt?;
        let p = belief.marginals.get(&self.nodes[node].name)?.categorical()?;
        let half = W::from_ratio(&rational::half());
        if p[accept] > half {
            Some(true)
        } else if p[reject] > half {
            Some(false)
        } else {
            None
        }
    }

    fn evidence_vector(&self, evidence: &Evidence) -> Result<Vec<Option<usize>>, FilterError> {
        let mut out = vec![None; self.nodes.len()];
        for (node, value) in evidence {
            let unknown = || FilterError::UnknownEvidence { node: node.clone(), value: value.clone() };
            let i = self.nodes.iter().position(|n| n.name == *node).ok_or_else(unknown)?;
            let o = self.nodes[i].outcomes.as_ref().ok_or_else(unknown)?;
            out[i] = Some(o.iter().position(|l| l == value).ok_or_else(unknown)?);
        }
        Ok(out)
    }

    /// Belief over slice 1.
    pub fn init(&self, evidence: &Evidence) -> Result<Belief<W>, FilterError> {
        let ev = self.evidence_vector(evidence)?;
        let mut acc = self.accumulator(1);
        let mut cur = vec![None; self.nodes.len()];
        self.expand(0, &mut cur, None, W::one(), &ev, &mut acc)?;
        self.finish(acc)
    }

    /// Belief over slice `prev.slice + 1`.
    pub fn step(&self, prev: &Belief<W>, evidence: &Evidence) -> Result<Belief<W>, FilterError> {
        if prev.interface != self.interface_names {
            return Err(FilterError::ForeignBelief { belief: prev.slice });
        }
        let ev = self.evidence_vector(evidence)?;
        let mut acc = self.accumulator(prev.slice + 1);
        for (key, w) in &prev.components {
            let mut cur = vec![None; self.nodes.len()];
            self.expand(0, &mut cur, Some(key), w.clone(), &ev, &mut acc)?;
        }
        self.finish(acc)
    }

    fn accumulator(&self, slice: usize) -> Acc<W> {
        Acc {
            slice,
            z: W::zero(),
            components: BTreeMap::new(),
            marginals: self
                .nodes
                .iter()
                .map(|n| match &n.outcomes {
                    Some(o) => Marginal::Categorical(vec![W::zero(); o.len()]),
                    None => Marginal::Dirac(BTreeMap::new()),
                })
                .collect(),
            ops: 0,
            soft: BTreeMap::new(),
        }
    }

    fn finish(&self, acc: Acc<W>) -> Result<Belief<W>, FilterError> {
        let Acc { slice, z, components, marginals, mut ops, .. } = acc;
        if z.is_zero() {
            return Err(FilterError::ZeroEvidenceProbability { slice });
        }
        if components.len() > self.cap {
            return Err(FilterError::ComponentOverflow { slice, count: components.len(), cap: self.cap });
        }
        let mut norm = |w: W| {
            ops += 1;
            w / z.clone()
        };
        let components = components.into_iter().map(|(k, w)| (k, norm(w))).collect();
        let marginals = self
            .nodes
            .iter()
            .zip(marginals)
            .map(|(n, m)| {
                let m = match m {
                    Marginal::Categorical(p) => Marginal::Categorical(p.into_iter().map(&mut norm).collect()),
                    Marginal::Dirac(d) => Marginal::Dirac(d.into_iter().map(|(q, w)| (q, norm(w))).collect()),
                };
                (n.name.clone(), m)
            })
            .collect();
        Ok(Belief {
            slice,
            interface: self.interface_names.clone(),
            components,
            marginals,
            evidence_probability: z,
            arith_ops: ops,
        })
    }

    fn fetch<'v>(&self, s: Src, cur: &'v [Option<Value>], prev: Option<&'v Vec<Value>>) -> &'v Value {
        match s {
            Src::Cur(i) => cur[i].as_ref().expect("parent precedes child"),
            Src::Prev(p) => &prev.expect("slice 1 has no lag-1 parents")[p],
        }
    }

    fn row_index(&self, parents: &[Src], strides: &[usize], cur: &[Option<Value>], prev: Option<&Vec<Value>>) -> usize {
        parents
            .iter()
            .zip(strides)
            .map(|(&p, s)| self.fetch(p, cur, prev).outcome().expect("categorical parent") * s)
            .sum()
    }

    #[allow(clippy::too_many_arguments)]
    fn branch(
        &self,
        k: usize,
        node: usize,
        cur: &mut Vec<Option<Value>>,
        prev: Option<&Vec<Value>>,
        w: &W,
        dist: &[W],
        ev: &[Option<usize>],
        acc: &mut Acc<W>,
    ) -> Result<(), FilterError> {
        for (i, p) in dist.iter().enumerate() {
            if p.is_zero() || ev[node].is_some_and(|e| e != i) {
                continue;
            }
            acc.ops += 1;
            let w2 = w.clone() * p.clone();
            if w2.is_zero() {
                continue;
            }
            cur[node] = Some(Value::Outcome(i));
            self.expand(k + 1, cur, prev, w2, ev, acc)?;
        }
        cur[node] = None;
        Ok(())
    }

    fn expand(
        &self,
        k: usize,
        cur: &mut Vec<Option<Value>>,
        prev: Option<&Vec<Value>>,
        w: W,
        ev: &[Option<usize>],
        acc: &mut Acc<W>,
    ) -> Result<(), FilterError> {
        if k == self.order.len() {
            self.leaf(cur, w, acc);
            return Ok(());
        }
        let n = self.order[k];
        let node = &self.nodes[n];
        let kernel = if prev.is_none() { &node.first } else { &node.later };
        match kernel {
            Kernel::Prior(dist) => self.branch(k, n, cur, prev, &w, dist, ev, acc),
            Kernel::Table { parents, strides, rows } => {
                let row = &rows[self.row_index(parents, strides, cur, prev)];
                self.branch(k, n, cur, prev, &w, row, ev, acc)
            }
            Kernel::Point(q) => {
                cur[n] = Some(Value::Point(q.clone()));
                self.expand(k + 1, cur, prev, w, ev, acc)
            }
            Kernel::Dirac { input, selectors, strides, maps } => {
                let q = self.fetch(*input, cur, prev).point().expect("continuous input");
                let map = &maps[self.row_index(selectors, strides, cur, prev)];
                acc.ops += 2;
                cur[n] = Some(Value::Point(map.eval(q)));
                self.expand(k + 1, cur, prev, w, ev, acc)
            }
            Kernel::Threshold { parent, map, complement, steepness } => {
                let q = self.fetch(*parent, cur, prev).point().expect("continuous parent");
                let x = map.eval(q);
                acc.ops += 2;
                match steepness {
                    None => {
                        acc.ops += 1;
                        let h = heaviside(&x).map_err(|_| FilterError::ThresholdAmbiguous {
                            node: node.name.clone(),
                            slice: acc.slice,
                        })?;
                        let i = (h != *complement) as usize;
                        if ev[n].is_some_and(|e| e != i) {
                            return Ok(());
                        }
                        cur[n] = Some(Value::Outcome(i));
                        self.expand(k + 1, cur, prev, w, ev, acc)
                    }
                    Some(s) => {
                        let p = match acc.soft.get(&(n, x.clone())) {
                            Some(p) => p.clone(),
                            None => {
                                let p = W::logistic(*s, &x).ok_or(FilterError::UnsupportedSoftMode)?;
                                acc.soft.insert((n, x), p.clone());
                                p
                            }
                        };
                        let q = W::one() - p.clone();
                        acc.ops += 2;
                        let dist = if *complement { [p, q] } else { [q, p] };
                        self.branch(k, n, cur, prev, &w, &dist, ev, acc)
                    }
                }
            }
        }
    }

    fn leaf(&self, cur: &[Option<Value>], w: W, acc: &mut Acc<W>) {
        let key: Vec<Value> = self.interface.iter().map(|&i| cur[i].clone().expect("assigned")).collect();
        let slot = acc.components.entry(key).or_insert_with(W::zero);
        *slot = slot.clone() + w.clone();
        acc.z = acc.z.clone() + w.clone();
        acc.ops += 2;
        for (i, v) in cur.iter().enumerate() {
            match (&mut acc.marginals[i], v.as_ref().expect("assigned")) {
                (Marginal::Categorical(p), Value::Outcome(o)) => p[*o] = p[*o].clone() + w.clone(),
                (Marginal::Dirac(d), Value::Point(q)) => {
                    let slot = d.entry(q.clone()).or_insert_with(W::zero);
                    *slot = slot.clone() + w.clone();
                }
                _ => unreachable!("node kind fixed by validation"),
            }
            acc.ops += 1;
        }
    }
}

/// Belief over slice 1 of `spec`.
pub fn init<W: Weight>(spec: &DbnSpec, evidence: &Evidence, mode: Mode) -> Result<Belief<W>, FilterError> {
    Filter::new(spec, mode)?.init(evidence)
}

/// One filtering step from `belief`.
pub fn filter_step<W: Weight>(
    spec: &DbnSpec,
    belief: &Belief<W>,
    evidence: &Evidence,
    mode: Mode,
) -> Result<Belief<W>, FilterError> {
    Filter::new(spec, mode)?.step(belief, evidence)
}
