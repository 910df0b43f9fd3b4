//! Brute-force reference: enumerate every joint assignment of the unrolled
//! network. Exponential in the number of slices, exact rationals only, and
//! deliberately shares no lookup code with [`super::Filter`].

use super::filter::{Evidence, Marginal, Value};
use crate::dbn_model::{unroll, Cpd, DbnSpec, Prior, SliceCpd, UnrollError, UnrolledNetwork};
use crate::rational::Rational;
use crate::stack_codec::heaviside;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

pub const DEFAULT_SUPPORT_BOUND: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnumerateError {
    #[error(transparent)]
    Unroll(#[from] UnrollError),
    #[error("more than {0} joint assignments have nonzero weight")]
    SupportTooLarge(usize),
    #[error("soft thresholds cannot be enumerated exactly")]
    SoftThreshold,
    #[error("threshold of {node} in slice {slice} evaluated at exactly 1/2")]
    ThresholdAmbiguous { node: String, slice: usize },
    #[error("evidence has probability zero")]
    ZeroEvidenceProbability,
    #[error("unknown evidence {node}={value}")]
    UnknownEvidence { node: String, value: String },
}

/// Posterior over the last slice given evidence on every slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Enumerated {
    pub marginals: BTreeMap<String, Marginal<Rational>>,
    /// Joint posterior over the given nodes of the last slice.
    pub joint: BTreeMap<Vec<Value>, Rational>,
    pub evidence_probability: Rational,
    pub assignments: usize,
}

struct Walk<'a> {
    spec: &'a DbnSpec,
    net: &'a UnrolledNetwork,
    evidence: Vec<Option<String>>,
    /// Positions of each node's parents in the unrolled order.
    parent_pos: Vec<Vec<usize>>,
    bound: usize,
    leaves: usize,
    /// Positions of the last slice's nodes.
    last_slice: Vec<usize>,
    /// Unnormalized weight of each assignment to the last slice.
    tail: BTreeMap<Vec<Value>, Rational>,
}

impl Walk<'_> {
    fn outcomes(&self, name: &str) -> Option<&[String]> {
        self.spec.node(name).and_then(|n| n.kind.outcomes())
    }

    fn parent_values(&self, i: usize, vals: &[Value]) -> Vec<Value> {
        self.parent_pos[i].iter().map(|&j| vals[j].clone()).collect()
    }

    fn labels(&self, i: usize, vals: &[Value]) -> Vec<&str> {
        self.net.nodes[i]
            .parents
            .iter()
            .zip(&self.parent_pos[i])
            .map(|((name, _), &j)| match &vals[j] {
                Value::Outcome(o) => self.outcomes(name).expect("categorical")[*o].as_str(),
                Value::Point(_) => "",
            })
            .collect()
    }

    fn leaf(&mut self, vals: &[Value], w: Rational) {
        let key: Vec<Value> = self.last_slice.iter().map(|&i| vals[i].clone()).collect();
        *self.tail.entry(key).or_insert_with(Rational::zero) += w;
    }

    fn go(&mut self, i: usize, vals: &mut Vec<Value>, w: Rational) -> Result<(), EnumerateError> {
        if i == self.net.nodes.len() {
            if self.leaves >= self.bound {
                return Err(EnumerateError::SupportTooLarge(self.bound));
            }
            self.leaves += 1;
            self.leaf(vals, w);
            return Ok(());
        }
        let node = &self.net.nodes[i];
        let dist: Vec<(Value, Rational)> = match &node.cpd {
            SliceCpd::Prior(Prior::Categorical(p)) => {
                p.iter().enumerate().map(|(o, p)| (Value::Outcome(o), p.clone())).collect()
            }
            SliceCpd::Prior(Prior::Dirac(q)) => vec![(Value::Point(q.clone()), Rational::one())],
            SliceCpd::Template(Cpd::Table { rows, .. }) => {
                let given = self.labels(i, vals);
                let row = rows.iter().find(|r| r.given.iter().eq(given.iter().copied())).expect("validated coverage");
                row.probs.iter().enumerate().map(|(o, p)| (Value::Outcome(o), p.clone())).collect()
            }
            SliceCpd::Template(Cpd::LinearDirac { cases, .. }) => {
                let pv = self.parent_values(i, vals);
                let given = self.labels(i, vals);
                let case = cases.iter().find(|c| c.given.iter().eq(given[1..].iter().copied())).expect("validated coverage");
                let Value::Point(q) = &pv[0] else { unreachable!("continuous input") };
                vec![(Value::Point(case.map.eval(q)), Rational::one())]
            }
            SliceCpd::Template(Cpd::Threshold { map, complement, .. }) => {
                let Value::Point(q) = &self.parent_values(i, vals)[0] else { unreachable!("continuous parent") };
                let h = heaviside(&map.eval(q)).map_err(|_| EnumerateError::ThresholdAmbiguous {
                    node: node.name.clone(),
                    slice: node.slice,
                })?;
                vec![(Value::Outcome((h ^ complement) as usize), Rational::one())]
            }
            SliceCpd::Template(Cpd::SoftThreshold { .. }) => return Err(EnumerateError::SoftThreshold),
        };
        for (v, p) in dist {
            if p.is_zero() {
                continue;
            }
            if let (Some(e), Value::Outcome(o)) = (&self.evidence[i], &v) {
                if self.outcomes(&node.name).expect("categorical")[*o] != *e {
                    continue;
                }
            }
            vals.push(v);
            self.go(i + 1, vals, &w * p)?;
            vals.pop();
        }
        Ok(())
    }
}

/// Posterior over slice `slices` given `evidence[t - 1]` on slice `t`.
/// Missing trailing evidence is treated as empty. `joint_nodes` selects the
/// nodes whose joint posterior is reported.
pub fn enumerate_unrolled(
    spec: &DbnSpec,
    slices: usize,
    evidence: &[Evidence],
    joint_nodes: &[&str],
    bound: usize,
) -> Result<Enumerated, EnumerateError> {
    let net = unroll(spec, slices)?;
    let mut ev = vec![None; net.nodes.len()];
    for (t, e) in evidence.iter().enumerate().take(slices) {
        for (name, value) in e {
            let unknown = || EnumerateError::UnknownEvidence { node: name.clone(), value: value.clone() };
            let ok = spec.node(name).and_then(|n| n.kind.outcomes()).is_some_and(|o| o.contains(value));
            if !ok {
                return Err(unknown());
            }
            let i = net.position(name, t + 1).ok_or_else(unknown)?;
            ev[i] = Some(value.clone());
        }
    }
    let last_slice: Vec<usize> = (0..net.nodes.len()).filter(|&i| net.nodes[i].slice == slices).collect();
    let mut walk = Walk {
        spec,
        net: &net,
        evidence: ev,
        parent_pos: net
            .nodes
            .iter()
            .map(|n| {
                n.parents
                    .iter()
                    .map(|(name, slice)| net.position(name, *slice).expect("parent exists"))
                    .collect()
            })
            .collect(),
        bound,
        leaves: 0,
        last_slice: last_slice.clone(),
        tail: BTreeMap::new(),
    };
    walk.go(0, &mut Vec::new(), Rational::one())?;

    let z: Rational = walk.tail.values().cloned().sum();
    if z.is_zero() {
        return Err(EnumerateError::ZeroEvidenceProbability);
    }
    let joint_at: Vec<usize> = joint_nodes
        .iter()
        .map(|n| last_slice.iter().position(|&i| net.nodes[i].name == *n).expect("joint node exists"))
        .collect();
    let mut joint: BTreeMap<Vec<Value>, Rational> = BTreeMap::new();
    let mut marginals: BTreeMap<String, Marginal<Rational>> = BTreeMap::new();
    for (vals, w) in &walk.tail {
        let p = w / &z;
        let key = joint_at.iter().map(|&k| vals[k].clone()).collect();
        *joint.entry(key).or_insert_with(Rational::zero) += &p;
        for (&i, v) in last_slice.iter().zip(vals) {
            let name = &net.nodes[i].name;
            let m = marginals.entry(name.clone()).or_insert_with(|| match spec.node(name).and_then(|d| d.kind.outcomes()) {
                Some(o) => Marginal::Categorical(vec![Rational::zero(); o.len()]),
                None => Marginal::Dirac(BTreeMap::new()),
            });
            match (m, v) {
                (Marginal::Categorical(m), Value::Outcome(o)) => m[*o] += &p,
                (Marginal::Dirac(d), Value::Point(q)) => *d.entry(q.clone()).or_insert_with(Rational::zero) += &p,
                _ => unreachable!("node kind fixed by validation"),
            }
        }
    }
    Ok(Enumerated { marginals, joint, evidence_probability: z, assignments: walk.leaves })
}
