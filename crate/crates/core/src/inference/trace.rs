use super::decide::SliceReport;
use super::filter::{Filter, Marginal};
use super::weight::Weight;
use crate::rational;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One line of a JSONL trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Transitions taken so far; matches `t` in the verdict line.
    pub step: usize,
    pub slice: usize,
    pub evidence: BTreeMap<String, String>,
    pub padded: bool,
    /// Node -> outcome label (or stack value `n/d`) -> probability.
    pub marginals: BTreeMap<String, BTreeMap<String, String>>,
    /// `run`, `accept` or `reject`.
    pub decision: String,
    pub components: usize,
    pub arith_ops: u64,
}

impl TraceRecord {
    pub fn new<W: Weight>(filter: &Filter<W>, report: &SliceReport<W>) -> Self {
        let marginals = report
            .belief
            .marginals
            .iter()
            .map(|(node, m)| {
                let probs = match m {
                    Marginal::Categorical(p) => {
                        let labels = filter.outcomes(node).expect("categorical node");
                        labels.iter().cloned().zip(p.iter().map(|w| w.to_trace_string())).collect()
                    }
                    Marginal::Dirac(d) => {
                        d.iter().map(|(q, w)| (rational::format(q), w.to_trace_string())).collect()
                    }
                };
                (node.clone(), probs)
            })
            .collect();
        TraceRecord {
            step: report.belief.slice - 1,
            slice: report.belief.slice,
            evidence: report.evidence.clone(),
            padded: report.padded,
            marginals,
            decision: match report.verdict {
                Some(true) => "accept",
                Some(false) => "reject",
                None => "run",
            }
            .to_string(),
            components: report.belief.component_count(),
            arith_ops: report.belief.arith_ops,
        }
    }
}
