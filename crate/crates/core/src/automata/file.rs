//! JSON machine descriptions.
//!
//! Guard fields that are left out of a transition record match every value,
//! so a rule that ignores the stacks can be written once. After expansion a
//! guard with `empty_x = 1` always has `top_x = 0`.

use super::pda::{Guard, PdaRule, StackRead, Transition, TwoStackPda};
use super::tm::{Move, TmRule, TuringMachine};
use super::{InputSymbol, StackAction};
use crate::machine_compiler::StepAlignment;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum MachineFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed machine file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("transition {index}: field {field} must be 0 or 1, got {value}")]
    NotABit {
        index: usize,
        field: &'static str,
        value: u8,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum MachineFile {
    #[serde(rename = "tm")]
    Tm(TmFile),
    #[serde(rename = "pda2")]
    Pda(PdaFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdaRecord {
    pub state: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_a: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empty_a: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_b: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empty_b: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSymbol>,
    pub next: String,
    #[serde(default)]
    pub action_a: StackAction,
    #[serde(default)]
    pub action_b: StackAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdaFile {
    pub states: Vec<String>,
    pub initial: String,
    pub transitions: Vec<PdaRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<StepAlignment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TmRecord {
    pub state: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub read: Option<u8>,
    pub write: u8,
    #[serde(rename = "move")]
    pub head_move: Move,
    pub next: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TmFile {
    pub states: Vec<String>,
    pub initial: String,
    pub transitions: Vec<TmRecord>,
}

fn bits(
    index: usize,
    field: &'static str,
    value: Option<u8>,
) -> Result<Vec<bool>, MachineFileError> {
    match value {
        None => Ok(vec![false, true]),
        Some(0) => Ok(vec![false]),
        Some(1) => Ok(vec![true]),
        Some(value) => Err(MachineFileError::NotABit { index, field, value }),
    }
}

fn reads(
    index: usize,
    top: (&'static str, Option<u8>),
    empty: (&'static str, Option<u8>),
) -> Result<Vec<StackRead>, MachineFileError> {
    let mut out = Vec::new();
    for e in bits(index, empty.0, empty.1)? {
        for t in bits(index, top.0, top.1)? {
            let r = StackRead::new(t, e);
            if !out.contains(&r) {
                out.push(r);
            }
        }
    }
    Ok(out)
}

impl PdaFile {
    pub fn to_pda(&self) -> Result<TwoStackPda, MachineFileError> {
        let mut transitions = Vec::new();
        for (i, rec) in self.transitions.iter().enumerate() {
            let reads_a = reads(i, ("top_a", rec.top_a), ("empty_a", rec.empty_a))?;
            let reads_b = reads(i, ("top_b", rec.top_b), ("empty_b", rec.empty_b))?;
            let inputs: Vec<InputSymbol> = match rec.input {
                Some(s) => vec![s],
                None => InputSymbol::ALL.to_vec(),
            };
            for &a in &reads_a {
                for &b in &reads_b {
                    for &input in &inputs {
                        transitions.push(Transition {
                            guard: Guard {
                                state: rec.state.clone(),
                                a,
                                b,
                                input,
                            },
                            rule: PdaRule {
                                next: rec.next.clone(),
                                action_a: rec.action_a,
                                action_b: rec.action_b,
                            },
                        });
                    }
                }
            }
        }
        Ok(TwoStackPda::new(
            self.states.clone(),
            self.initial.clone(),
            transitions,
        ))
    }

    /// One fully specified record per transition.
    pub fn from_pda(pda: &TwoStackPda, metadata: Option<StepAlignment>) -> Self {
        let read_fields = |r: StackRead| {
            if r.empty() {
                (None, Some(1))
            } else {
                (Some(r.top() as u8), Some(0))
            }
        };
        let transitions = pda
            .transitions()
            .iter()
            .map(|t| {
                let (top_a, empty_a) = read_fields(t.guard.a);
                let (top_b, empty_b) = read_fields(t.guard.b);
                PdaRecord {
                    state: t.guard.state.clone(),
                    top_a,
                    empty_a,
                    top_b,
                    empty_b,
                    input: Some(t.guard.input),
                    next: t.rule.next.clone(),
                    action_a: t.rule.action_a,
                    action_b: t.rule.action_b,
                }
            })
            .collect();
        PdaFile {
            states: pda.states().to_vec(),
            initial: pda.initial().to_string(),
            transitions,
            metadata,
        }
    }
}

impl TmFile {
    pub fn to_tm(&self) -> Result<TuringMachine, MachineFileError> {
        let mut rules = Vec::new();
        for (i, rec) in self.transitions.iter().enumerate() {
            let write = match rec.write {
                0 => false,
                1 => true,
                value => {
                    return Err(MachineFileError::NotABit {
                        index: i,
                        field: "write",
                        value,
                    })
                }
            };
            for read in bits(i, "read", rec.read)? {
                rules.push((
                    (rec.state.clone(), read),
                    TmRule {
                        next: rec.next.clone(),
                        write,
                        head_move: rec.head_move,
                    },
                ));
            }
        }
        Ok(TuringMachine::new(
            self.states.clone(),
            self.initial.clone(),
            rules,
        ))
    }

    pub fn from_tm(tm: &TuringMachine) -> Self {
        TmFile {
            states: tm.states().to_vec(),
            initial: tm.initial().to_string(),
            transitions: tm
                .rules()
                .iter()
                .map(|((state, read), rule)| TmRecord {
                    state: state.clone(),
                    read: Some(*read as u8),
                    write: rule.write as u8,
                    head_move: rule.head_move,
                    next: rule.next.clone(),
                })
                .collect(),
        }
    }
}

pub fn parse_machine(json: &str) -> Result<MachineFile, MachineFileError> {
    Ok(serde_json::from_str(json)?)
}

pub fn load_machine(path: impl AsRef<Path>) -> Result<MachineFile, MachineFileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| MachineFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_machine(&text)
}
