//! Hybrid two-slice dynamic Bayesian networks.
//!
//! A [`DbnSpec`] describes one template slice. Edges carry a lag of 0 (same
//! slice) or 1 (previous slice). Slice 1 is built from the per-node priors;
//! a node without a prior uses its template CPD in slice 1, which is only
//! possible when all of its parents are in the same slice.

mod unroll;
mod validate;

pub use unroll::{
    topological_order, unroll, SliceCpd, UnrollError, UnrolledNetwork, UnrolledNode,
};
pub(crate) use validate::combos;
pub use validate::{validate, Violation};

use crate::rational::{self, Rational};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Input,
    Hidden,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Categorical(Vec<String>),
    ContinuousDirac,
}

impl NodeKind {
    pub fn outcomes(&self) -> Option<&[String]> {
        match self {
            NodeKind::Categorical(o) => Some(o),
            NodeKind::ContinuousDirac => None,
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, NodeKind::ContinuousDirac)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDecl {
    pub name: String,
    pub role: Role,
    pub kind: NodeKind,
}

impl NodeDecl {
    pub fn categorical(name: &str, role: Role, outcomes: &[&str]) -> Self {
        NodeDecl {
            name: name.to_string(),
            role,
            kind: NodeKind::Categorical(outcomes.iter().map(|s| s.to_string()).collect()),
        }
    }

    pub fn continuous(name: &str, role: Role) -> Self {
        NodeDecl {
            name: name.to_string(),
            role,
            kind: NodeKind::ContinuousDirac,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub parent: String,
    pub child: String,
    pub lag: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParentRef {
    pub node: String,
    pub lag: u32,
}

impl ParentRef {
    pub fn same(node: &str) -> Self {
        ParentRef { node: node.to_string(), lag: 0 }
    }

    pub fn prev(node: &str) -> Self {
        ParentRef { node: node.to_string(), lag: 1 }
    }
}

/// `scale * q + offset`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Affine {
    #[serde(with = "rational::serde_str")]
    pub scale: Rational,
    #[serde(with = "rational::serde_str")]
    pub offset: Rational,
}

impl Affine {
    pub fn new(scale: Rational, offset: Rational) -> Self {
        Affine { scale, offset }
    }

    pub fn eval(&self, q: &Rational) -> Rational {
        &self.scale * q + &self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRow {
    /// Parent outcome labels, in the order of the CPD's parent list.
    pub given: Vec<String>,
    /// Probability of each child outcome, in declaration order.
    #[serde(with = "rational::serde_vec")]
    pub probs: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiracCase {
    pub given: Vec<String>,
    #[serde(flatten)]
    pub map: Affine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cpd {
    /// Categorical child of categorical parents.
    Table {
        parents: Vec<ParentRef>,
        rows: Vec<TableRow>,
    },
    /// Continuous child: a point mass at an affine image of one continuous
    /// parent, the map chosen by the outcomes of the selector parents.
    LinearDirac {
        input: ParentRef,
        selectors: Vec<ParentRef>,
        cases: Vec<DiracCase>,
    },
    /// Binary child: `P(child = outcome[1]) = H(affine(q))`, or `1 - H(..)`
    /// when `complement` is set.
    Threshold {
        parent: ParentRef,
        map: Affine,
        #[serde(default)]
        complement: bool,
    },
    /// As `Threshold` with the step replaced by a logistic of finite
    /// steepness centred at 1/2.
    SoftThreshold {
        parent: ParentRef,
        map: Affine,
        #[serde(default)]
        complement: bool,
        steepness: f64,
    },
}

impl Cpd {
    /// All parents, in evaluation order.
    pub fn parents(&self) -> Vec<ParentRef> {
        match self {
            Cpd::Table { parents, .. } => parents.clone(),
            Cpd::LinearDirac { input, selectors, .. } => {
                let mut v = vec![input.clone()];
                v.extend(selectors.iter().cloned());
                v
            }
            Cpd::Threshold { parent, .. } | Cpd::SoftThreshold { parent, .. } => {
                vec![parent.clone()]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prior {
    Categorical(#[serde(with = "rational::serde_vec")] Vec<Rational>),
    Dirac(#[serde(with = "rational::serde_str")] Rational),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbnSpec {
    pub nodes: Vec<NodeDecl>,
    #[serde(default)]
    pub prior: BTreeMap<String, Prior>,
    pub edges: Vec<Edge>,
    pub cpds: BTreeMap<String, Cpd>,
}

impl DbnSpec {
    pub fn node(&self, name: &str) -> Option<&NodeDecl> {
        self.nodes.iter().find(|n| n.name == name)
    }

    /// Edges derived from the CPD parent lists, sorted.
    pub fn edges_from_cpds(&self) -> Vec<Edge> {
        let mut edges: Vec<Edge> = self
            .cpds
            .iter()
            .flat_map(|(child, cpd)| {
                cpd.parents().into_iter().map(move |p| Edge {
                    parent: p.node,
                    child: child.clone(),
                    lag: p.lag,
                })
            })
            .collect();
        edges.sort();
        edges
    }

    /// Template nodes with at least one child in the next slice.
    pub fn interface(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .edges
            .iter()
            .filter(|e| e.lag == 1)
            .map(|e| e.parent.clone())
            .collect();
        names.sort();
        names.dedup();
        names
    }
}

/// Network file: the spec plus an optional free-form metadata block written
/// by the compiler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    #[serde(flatten)]
    pub spec: DbnSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

#[derive(Debug, thiserror::Error)]
pub enum NetworkFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed network file: {0}")]
    Json(#[from] serde_json::Error),
}

impl NetworkFile {
    pub fn parse(json: &str) -> Result<Self, NetworkFileError> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetworkFileError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| NetworkFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }
}
