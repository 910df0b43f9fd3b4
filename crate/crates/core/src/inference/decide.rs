use super::filter::{Belief, Evidence, Filter, FilterError};
use super::weight::Weight;
use crate::automata::InputSymbol;
use serde::{Deserialize, Serialize};

/// Outcome of running the filter until the halting output commits. A
/// verdict reached in slice `t` corresponds to a machine halting after
/// `t - 1` transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept { slice: usize },
    Reject { slice: usize },
    Timeout { steps: usize },
}

impl Decision {
    /// Machine step at which the verdict was reached.
    pub fn step(&self) -> Option<usize> {
        match self {
            Decision::Accept { slice } | Decision::Reject { slice } => Some(slice - 1),
            Decision::Timeout { .. } => None,
        }
    }
}

/// What the filter saw and concluded in one slice.
pub struct SliceReport<'a, W> {
    pub belief: &'a Belief<W>,
    pub evidence: &'a Evidence,
    /// The input symbol was `end` because the user's input had run out.
    pub padded: bool,
    pub verdict: Option<bool>,
}

/// Evidence for `slice`: the input symbol consumed on the way into it.
/// Slice 1 sees nothing.
pub fn slice_evidence<W: Weight>(filter: &Filter<W>, inputs: &[InputSymbol], slice: usize) -> (Evidence, bool) {
    let mut ev = Evidence::new();
    let Some(node) = filter.input_node() else {
        return (ev, false);
    };
    if slice < 2 {
        return (ev, false);
    }
    let symbol = InputSymbol::at(inputs, slice - 1);
    ev.insert(node.to_string(), symbol.label().to_string());
    (ev, slice - 2 >= inputs.len())
}

/// Filters slice by slice until the halting output puts more than 1/2 on
/// a verdict, or `max_steps` transitions have been taken.
pub fn decide<W: Weight>(
    filter: &Filter<W>,
    inputs: &[InputSymbol],
    max_steps: usize,
    mut observe: impl FnMut(&SliceReport<W>),
) -> Result<Decision, FilterError> {
    let mut belief: Option<Belief<W>> = None;
    for slice in 1..=max_steps + 1 {
        let (evidence, padded) = slice_evidence(filter, inputs, slice);
        let next = match &belief {
            None => filter.init(&evidence)?,
            Some(b) => filter.step(b, &evidence)?,
        };
        let verdict = filter.halt_verdict(&next);
        observe(&SliceReport { belief: &next, evidence: &evidence, padded, verdict });
        match verdict {
            Some(true) => return Ok(Decision::Accept { slice }),
            Some(false) => return Ok(Decision::Reject { slice }),
            None => belief = Some(next),
        }
    }
    Ok(Decision::Timeout { steps: max_steps })
}
