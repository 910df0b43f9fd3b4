//! Check a compiled network against its machine, slice by slice.

use crate::automata::{pda_trace, InputSymbol, MachineError, RunOutcome, TwoStackPda, Verdict};
use crate::inference::{decide, Decision, Filter, FilterError, Value, Weight};
use crate::machine_compiler::{STACK_A, STACK_B, STATE};
use crate::stack_codec::StackValue;
use serde::Serialize;

/// Largest deviation from 1 tolerated on the machine's configuration when
/// the scalar is inexact.
pub const SOFT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompareError {
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("network has no {0} node")]
    MissingNode(&'static str),
    #[error("network has no state named {0}")]
    UnknownState(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceCheck {
    pub slice: usize,
    /// Posterior weight on the machine's configuration after `slice - 1`
    /// transitions.
    pub weight: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub machine: RunOutcome,
    pub network: Decision,
    pub slices: Vec<SliceCheck>,
    /// First slice whose check failed, if any.
    pub divergence: Option<usize>,
    pub verdicts_agree: bool,
}

impl CompareReport {
    pub fn matches(&self) -> bool {
        self.divergence.is_none() && self.verdicts_agree
    }
}

fn agree(machine: &RunOutcome, network: &Decision) -> bool {
    match (machine, network) {
        (RunOutcome::Halted { verdict: Verdict::Accept, step }, Decision::Accept { slice })
        | (RunOutcome::Halted { verdict: Verdict::Reject, step }, Decision::Reject { slice }) => *slice == step + 1,
        (RunOutcome::Timeout { steps: a }, Decision::Timeout { steps: b }) => a == b,
        _ => false,
    }
}

/// Runs the machine and the filter side by side for up to `max_steps`
/// transitions. Exact scalars must put weight exactly 1 on the machine's
/// configuration; inexact ones must be within [`SOFT_TOLERANCE`].
pub fn compare_run<W: Weight>(
    pda: &TwoStackPda,
    filter: &Filter<W>,
    inputs: &[InputSymbol],
    max_steps: usize,
) -> Result<CompareReport, CompareError> {
    let states = filter.outcomes(STATE).ok_or(CompareError::MissingNode("State"))?.to_vec();
    for n in [STACK_A, STACK_B] {
        if filter.spec().node(n).is_none() {
            return Err(CompareError::MissingNode(if n == STACK_A { "Stack_a" } else { "Stack_b" }));
        }
    }
    let run = pda_trace(pda, inputs, max_steps)?;
    let mut slices = Vec::new();
    let mut failure: Option<CompareError> = None;
    let network = decide(filter, inputs, max_steps, |report| {
        let Some(config) = run.configs.get(report.belief.slice - 1) else {
            slices.push(SliceCheck { slice: report.belief.slice, weight: 0.0, ok: false });
            return;
        };
        let Some(state) = states.iter().position(|s| *s == config.state) else {
            failure.get_or_insert(CompareError::UnknownState(config.state.clone()));
            return;
        };
        let w = report.belief.weight_where(&[
            (STATE, Value::Outcome(state)),
            (STACK_A, Value::Point(StackValue::encode(&config.stack_a).into_rational())),
            (STACK_B, Value::Point(StackValue::encode(&config.stack_b).into_rational())),
        ]);
        let ok = if W::is_exact() {
            w == W::one()
        } else {
            (1.0 - w.to_f64()).abs() <= SOFT_TOLERANCE
        };
        slices.push(SliceCheck { slice: report.belief.slice, weight: w.to_f64(), ok });
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let divergence = slices.iter().find(|c| !c.ok).map(|c| c.slice);
    Ok(CompareReport {
        verdicts_agree: agree(&run.outcome, &network),
        machine: run.outcome,
        network,
        slices,
        divergence,
    })
}
