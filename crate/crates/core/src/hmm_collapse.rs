//! Collapse a fully discrete network into a hidden Markov model whose state
//! is the joint assignment of all hidden nodes.
//!
//! Inputs may only feed nodes of their own slice, so the transition matrix
//! is indexed by the input assignment of the destination slice. Outputs
//! must depend on hidden nodes of their own slice only.

use crate::dbn_model::{topological_order, validate, Cpd, DbnSpec, ParentRef, Prior, Role, Violation};
use crate::inference::Evidence;
use crate::rational::Rational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CollapseError {
    #[error("network is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    ValidationFailed(Vec<Violation>),
    #[error("{0} is continuous; only discrete networks collapse")]
    NotDiscrete(String),
    #[error("unsupported structure: {0}")]
    UnsupportedStructure(String),
    #[error("evidence in slice {slice} has probability zero")]
    ZeroEvidenceProbability { slice: usize },
    #[error("unknown evidence {node}={value}")]
    UnknownEvidence { node: String, value: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapsedHmm {
    /// Hidden node names, in the order of each state tuple.
    pub hidden: Vec<String>,
    /// Joint hidden assignments as outcome indices.
    pub states: Vec<Vec<usize>>,
    pub inputs: Vec<String>,
    /// Joint input assignments as outcome indices.
    pub input_values: Vec<Vec<usize>>,
    /// `[first slice, later slices][input assignment]`
    pub input_prior: [Vec<Rational>; 2],
    /// `[input assignment][state]` for slice 1.
    pub initial: Vec<Vec<Rational>>,
    /// `[input assignment][from][to]`
    pub transition: Vec<Vec<Vec<Rational>>>,
    pub outputs: Vec<String>,
    /// `[output][state][outcome]`
    pub emission: Vec<Vec<Vec<Rational>>>,
    labels: BTreeMap<String, Vec<String>>,
}

fn product(cards: &[usize]) -> Vec<Vec<usize>> {
    crate::dbn_model::combos(cards)
}

struct Ctx<'a> {
    spec: &'a DbnSpec,
    labels: &'a BTreeMap<String, Vec<String>>,
}

impl Ctx<'_> {
    /// Probability that `node` takes `value` under `cpd` given a lookup for
    /// each parent.
    fn prob(&self, node: &str, cpd: &Cpd, value: usize, lookup: &dyn Fn(&ParentRef) -> usize) -> Rational {
        let Cpd::Table { parents, rows } = cpd else {
            unreachable!("discrete networks use tables")
        };
        let given: Vec<&String> = parents.iter().map(|p| &self.labels[&p.node][lookup(p)]).collect();
        let row = rows
            .iter()
            .find(|r| r.given.iter().zip(&given).all(|(a, b)| a == *b))
            .unwrap_or_else(|| panic!("validated coverage for {node}"));
        row.probs[value].clone()
    }

    fn first(&self, node: &str, value: usize, lookup: &dyn Fn(&ParentRef) -> usize) -> Rational {
        match self.spec.prior.get(node) {
            Some(Prior::Categorical(p)) => p[value].clone(),
            Some(Prior::Dirac(_)) => unreachable!("discrete network"),
            None => self.prob(node, &self.spec.cpds[node], value, lookup),
        }
    }
}

pub fn collapse(spec: &DbnSpec) -> Result<CollapsedHmm, CollapseError> {
    let violations = validate(spec);
    if !violations.is_empty() {
        return Err(CollapseError::ValidationFailed(violations));
    }
    let mut labels = BTreeMap::new();
    for n in &spec.nodes {
        let Some(o) = n.kind.outcomes() else {
            return Err(CollapseError::NotDiscrete(n.name.clone()));
        };
        labels.insert(n.name.clone(), o.to_vec());
    }
    let order = topological_order(spec).map_err(|v| CollapseError::ValidationFailed(vec![v]))?;
    let role = |name: &str| spec.node(name).expect("validated").role;
    let by_role = |r: Role| -> Vec<String> { order.iter().filter(|n| role(n) == r).cloned().collect() };
    let (hidden, inputs, outputs) = (by_role(Role::Hidden), by_role(Role::Input), by_role(Role::Output));

    for e in &spec.edges {
        match role(&e.parent) {
            Role::Input if e.lag != 0 => {
                return Err(CollapseError::UnsupportedStructure(format!(
                    "input {} feeds {} across slices",
                    e.parent, e.child
                )))
            }
            Role::Output => {
                return Err(CollapseError::UnsupportedStructure(format!("output {} has a child", e.parent)))
            }
            _ => {}
        }
        if role(&e.child) == Role::Input {
            return Err(CollapseError::UnsupportedStructure(format!("input {} has parents", e.child)));
        }
        if role(&e.child) == Role::Output && (e.lag != 0 || role(&e.parent) != Role::Hidden) {
            return Err(CollapseError::UnsupportedStructure(format!(
                "output {} may only depend on hidden nodes of its own slice",
                e.child
            )));
        }
    }

    let card = |n: &String| labels[n].len();
    let states = product(&hidden.iter().map(card).collect::<Vec<_>>());
    let input_values = product(&inputs.iter().map(card).collect::<Vec<_>>());
    let ctx = Ctx { spec, labels: &labels };
    let h_pos = |n: &str| hidden.iter().position(|h| h == n);
    let u_pos = |n: &str| inputs.iter().position(|h| h == n).expect("input parent");

    let input_prior = [true, false].map(|first| {
        input_values
            .iter()
            .map(|u| {
                inputs
                    .iter()
                    .zip(u)
                    .map(|(n, &v)| {
                        let none = |_: &ParentRef| 0;
                        if first {
                            ctx.first(n, v, &none)
                        } else {
                            ctx.prob(n, &spec.cpds[n], v, &none)
                        }
                    })
                    .product()
            })
            .collect()
    });

    let initial = input_values
        .iter()
        .map(|u| {
            states
                .iter()
                .map(|s| {
                    let lookup = |p: &ParentRef| match h_pos(&p.node) {
                        Some(i) => s[i],
                        None => u[u_pos(&p.node)],
                    };
                    hidden.iter().zip(s).map(|(n, &v)| ctx.first(n, v, &lookup)).product()
                })
                .collect()
        })
        .collect();

    let transition = input_values
        .iter()
        .map(|u| {
            states
                .iter()
                .map(|from| {
                    states
                        .iter()
                        .map(|to| {
                            let lookup = |p: &ParentRef| match (h_pos(&p.node), p.lag) {
                                (Some(i), 0) => to[i],
                                (Some(i), _) => from[i],
                                (None, _) => u[u_pos(&p.node)],
                            };
                            hidden.iter().zip(to).map(|(n, &v)| ctx.prob(n, &spec.cpds[n], v, &lookup)).product()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let emission = outputs
        .iter()
        .map(|o| {
            states
                .iter()
                .map(|s| {
                    let lookup = |p: &ParentRef| s[h_pos(&p.node).expect("hidden parent")];
                    (0..card(o)).map(|v| ctx.prob(o, &spec.cpds[o], v, &lookup)).collect()
                })
                .collect()
        })
        .collect();

    Ok(CollapsedHmm {
        hidden,
        states,
        inputs,
        input_values,
        input_prior,
        initial,
        transition,
        outputs,
        emission,
        labels,
    })
}

impl CollapsedHmm {
    pub fn labels(&self, node: &str) -> Option<&[String]> {
        self.labels.get(node).map(|v| v.as_slice())
    }

    fn label_index(&self, node: &str, value: &str) -> Result<usize, CollapseError> {
        self.labels
            .get(node)
            .and_then(|l| l.iter().position(|x| x == value))
            .ok_or_else(|| CollapseError::UnknownEvidence { node: node.to_string(), value: value.to_string() })
    }

    /// Likelihood weight of each input assignment and each state under one
    /// slice's evidence (`P(u)` restricted to matching inputs, 0/1 masks on
    /// observed hidden nodes).
    fn masks(&self, slice: usize, evidence: &Evidence) -> Result<(Vec<Rational>, Vec<Vec<Rational>>), CollapseError> {
        let mut u_mask: Vec<Rational> = self.input_prior[(slice > 1) as usize].clone();
        let mut s_mask = vec![vec![Rational::one(); self.states.len()]; self.input_values.len()];
        for (node, value) in evidence {
            let v = self.label_index(node, value)?;
            if let Some(i) = self.inputs.iter().position(|n| n == node) {
                for (w, u) in u_mask.iter_mut().zip(&self.input_values) {
                    if u[i] != v {
                        *w = Rational::zero();
                    }
                }
            } else if let Some(i) = self.hidden.iter().position(|n| n == node) {
                for row in &mut s_mask {
                    for (w, s) in row.iter_mut().zip(&self.states) {
                        if s[i] != v {
                            *w = Rational::zero();
                        }
                    }
                }
            } else {
                let o = self.outputs.iter().position(|n| n == node).expect("known node");
                for row in &mut s_mask {
                    for (s, w) in row.iter_mut().enumerate() {
                        *w = &*w * &self.emission[o][s][v];
                    }
                }
            }
        }
        Ok((u_mask, s_mask))
    }

    /// Filtered posteriors over joint hidden states, one per slice.
    pub fn forward(&self, evidence: &[Evidence]) -> Result<Vec<Vec<Rational>>, CollapseError> {
        let mut out: Vec<Vec<Rational>> = Vec::with_capacity(evidence.len());
        for (t, ev) in evidence.iter().enumerate() {
            let slice = t + 1;
            let (u_mask, s_mask) = self.masks(slice, ev)?;
            let mut alpha = vec![Rational::zero(); self.states.len()];
            for (u, pu) in u_mask.iter().enumerate() {
                if pu.is_zero() {
                    continue;
                }
                for (s, a) in alpha.iter_mut().enumerate() {
                    let pred = match out.last() {
                        None => self.initial[u][s].clone(),
                        Some(prev) => prev
                            .iter()
                            .enumerate()
                            .map(|(r, p)| p * &self.transition[u][r][s])
                            .sum(),
                    };
                    *a += pu * pred * &s_mask[u][s];
                }
            }
            let z: Rational = alpha.iter().cloned().sum();
            if z.is_zero() {
                return Err(CollapseError::ZeroEvidenceProbability { slice });
            }
            out.push(alpha.into_iter().map(|a| a / &z).collect());
        }
        Ok(out)
    }

    /// Marginal of one hidden node under a joint posterior.
    pub fn marginal(&self, alpha: &[Rational], node: &str) -> Option<Vec<Rational>> {
        let i = self.hidden.iter().position(|n| n == node)?;
        let mut m = vec![Rational::zero(); self.labels[node].len()];
        for (s, p) in self.states.iter().zip(alpha) {
            m[s[i]] += p;
        }
        Some(m)
    }
}
