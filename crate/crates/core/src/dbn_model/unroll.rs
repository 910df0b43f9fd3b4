use super::{validate, Cpd, DbnSpec, Prior, Violation};
use std::collections::{BTreeMap, BTreeSet};

/// Template nodes ordered so that every same-slice parent precedes its
/// child. Ties are broken by name.
pub fn topological_order(spec: &DbnSpec) -> Result<Vec<String>, Violation> {
    let mut indeg: BTreeMap<&str, usize> = spec.nodes.iter().map(|n| (n.name.as_str(), 0)).collect();
    let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in spec.edges.iter().filter(|e| e.lag == 0) {
        if indeg.contains_key(e.parent.as_str()) {
            if let Some(d) = indeg.get_mut(e.child.as_str()) {
                *d += 1;
                children.entry(e.parent.as_str()).or_default().push(e.child.as_str());
            }
        }
    }
    let mut ready: BTreeSet<&str> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&n, _)| n).collect();
    let mut order = Vec::with_capacity(indeg.len());
    while let Some(n) = ready.pop_first() {
        order.push(n.to_string());
        for &c in children.get(n).map(|v| v.as_slice()).unwrap_or(&[]) {
            let d = indeg.get_mut(c).expect("known child");
            *d -= 1;
            if *d == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() != indeg.len() {
        let done: BTreeSet<&str> = order.iter().map(|s| s.as_str()).collect();
        let rest = indeg.keys().filter(|n| !done.contains(*n)).map(|s| s.to_string()).collect();
        return Err(Violation::CycleViolation(rest));
    }
    Ok(order)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SliceCpd {
    Prior(Prior),
    Template(Cpd),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnrolledNode {
    pub name: String,
    /// 1-based slice index.
    pub slice: usize,
    /// `(template name, slice)` of each parent, in the CPD's parent order.
    pub parents: Vec<(String, usize)>,
    pub cpd: SliceCpd,
}

/// A static Bayesian network over `slices` copies of the template. Nodes are
/// stored slice by slice, each slice in template topological order, which is
/// a topological order of the whole network.
#[derive(Debug, Clone, PartialEq)]
pub struct UnrolledNetwork {
    pub slices: usize,
    pub nodes: Vec<UnrolledNode>,
}

impl UnrolledNetwork {
    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.parents.len()).sum()
    }

    pub fn position(&self, name: &str, slice: usize) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name && n.slice == slice)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UnrollError {
    #[error("network is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    ValidationFailed(Vec<Violation>),
    #[error("at least one slice is required")]
    ZeroSlices,
}

pub fn unroll(spec: &DbnSpec, slices: usize) -> Result<UnrolledNetwork, UnrollError> {
    if slices == 0 {
        return Err(UnrollError::ZeroSlices);
    }
    let violations = validate(spec);
    if !violations.is_empty() {
        return Err(UnrollError::ValidationFailed(violations));
    }
    let order = topological_order(spec).map_err(|v| UnrollError::ValidationFailed(vec![v]))?;
    let mut nodes = Vec::with_capacity(order.len() * slices);
    for t in 1..=slices {
        for name in &order {
            let cpd = &spec.cpds[name];
            let prior = if t == 1 { spec.prior.get(name) } else { None };
            let parents = cpd
                .parents()
                .into_iter()
                .filter(|p| t > 1 || p.lag == 0)
                .map(|p| (p.node, t - p.lag as usize))
                .collect();
            nodes.push(UnrolledNode {
                name: name.clone(),
                slice: t,
                parents,
                cpd: match prior {
                    Some(p) => SliceCpd::Prior(p.clone()),
                    None => SliceCpd::Template(cpd.clone()),
                },
            });
        }
    }
    Ok(UnrolledNetwork { slices, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbn_model::{Edge, NodeDecl, Role, TableRow};
    use crate::rational::int;

    fn root(name: &str) -> (NodeDecl, Cpd) {
        (
            NodeDecl::categorical(name, Role::Hidden, &["x"]),
            Cpd::Table {
                parents: vec![],
                rows: vec![TableRow { given: vec![], probs: vec![int(1)] }],
            },
        )
    }

    #[test]
    fn tie_break_by_name() {
        let (b, cb) = root("b");
        let (a, ca) = root("a");
        let spec = DbnSpec {
            nodes: vec![b, a],
            prior: Default::default(),
            edges: vec![],
            cpds: [("a".to_string(), ca), ("b".to_string(), cb)].into_iter().collect(),
        };
        assert_eq!(topological_order(&spec).unwrap(), vec!["a", "b"]);
        let single = DbnSpec {
            nodes: vec![spec.nodes[1].clone()],
            cpds: [("a".to_string(), spec.cpds["a"].clone())].into_iter().collect(),
            ..spec.clone()
        };
        assert_eq!(topological_order(&single).unwrap(), vec!["a"]);

        let net = unroll(&spec, 1).unwrap();
        assert_eq!(net.nodes.len(), 2);
        assert_eq!(unroll(&spec, 0), Err(UnrollError::ZeroSlices));
    }

    #[test]
    fn invalid_spec_does_not_unroll() {
        let (a, _) = root("a");
        let spec = DbnSpec {
            nodes: vec![a],
            prior: Default::default(),
            edges: vec![Edge { parent: "a".into(), child: "a".into(), lag: 0 }],
            cpds: Default::default(),
        };
        assert!(matches!(unroll(&spec, 2), Err(UnrollError::ValidationFailed(_))));
    }
}
