//! Histories: invocation/response events, protocol annotations and the
//! operations they pair into.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::runtime::{OpKey, OpKind, OpResult, ProcessId, Tick, TypeTag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Invoke,
    Respond,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub tick: Tick,
    pub process: ProcessId,
    pub kind: EventKind,
    pub op: OpKind,
    pub arg: Option<u64>,
    pub result: Option<OpResult>,
}

/// Facts recorded by correct processes while running an operation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "annotation", rename_all = "snake_case")]
pub enum Annotation {
    /// The shared access at `tick` is where the operation takes effect.
    LinPoint { op: OpKey, tick: Tick },
    /// A Verify procedure run inside an operation, with its first and last
    /// shared-access ticks.
    VerifyProcedure { op: OpKey, value: u64, start: Tick, end: Tick, result: bool },
}

impl Annotation {
    pub fn op(&self) -> OpKey {
        match self {
            Annotation::LinPoint { op, .. } | Annotation::VerifyProcedure { op, .. } => *op,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub type_tag: TypeTag,
    pub n: usize,
    pub f: usize,
    pub correct: BTreeSet<ProcessId>,
    pub v0: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryTrace {
    pub meta: TraceMeta,
    pub events: Vec<Event>,
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("{process} responds at tick {tick} with no pending operation")]
    UnmatchedResponse { process: ProcessId, tick: Tick },
    #[error("{process} invokes at tick {tick} while an operation is pending")]
    OverlappingInvocation { process: ProcessId, tick: Tick },
    #[error("events are not in strictly increasing tick order at tick {0}")]
    Unordered(Tick),
    #[error("response at tick {0} does not match its invocation")]
    MismatchedResponse(Tick),
}

/// An invocation paired with its response, if any.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Operation {
    pub process: ProcessId,
    pub kind: OpKind,
    pub arg: Option<u64>,
    pub result: Option<OpResult>,
    pub invoked: Tick,
    pub responded: Option<Tick>,
}

impl Operation {
    pub fn key(&self) -> OpKey {
        OpKey { process: self.process, invoked: self.invoked }
    }

    pub fn is_complete(&self) -> bool {
        self.responded.is_some()
    }

    /// Real-time order: `self` responds before `other` is invoked.
    pub fn precedes(&self, other: &Operation) -> bool {
        self.responded.is_some_and(|r| r < other.invoked)
    }

    pub fn value(&self) -> u64 {
        self.arg.unwrap_or_default()
    }
}

impl HistoryTrace {
    pub fn new(meta: TraceMeta) -> Self {
        HistoryTrace { meta, events: Vec::new(), annotations: Vec::new() }
    }

    pub fn writer_correct(&self) -> bool {
        self.meta.correct.contains(&ProcessId::WRITER)
    }

    /// The sub-history of correct processes.
    pub fn restrict_correct(&self) -> HistoryTrace {
        let correct = &self.meta.correct;
        HistoryTrace {
            meta: self.meta.clone(),
            events: self.events.iter().filter(|e| correct.contains(&e.process)).cloned().collect(),
            annotations: self
                .annotations
                .iter()
                .filter(|a| correct.contains(&a.op().process))
                .cloned()
                .collect(),
        }
    }

    /// Pairs invocations with responses, in invocation order.
    pub fn operations(&self) -> Result<Vec<Operation>, TraceError> {
        let mut ops: Vec<Operation> = Vec::new();
        let mut pending: BTreeMap<ProcessId, usize> = BTreeMap::new();
        let mut last_tick: Option<Tick> = None;
        for e in &self.events {
            if last_tick.is_some_and(|t| e.tick <= t) {
                return Err(TraceError::Unordered(e.tick));
            }
            last_tick = Some(e.tick);
            match e.kind {
                EventKind::Invoke => {
                    if pending.contains_key(&e.process) {
                        return Err(TraceError::OverlappingInvocation {
                            process: e.process,
                            tick: e.tick,
                        });
                    }
                    pending.insert(e.process, ops.len());
                    ops.push(Operation {
                        process: e.process,
                        kind: e.op,
                        arg: e.arg,
                        result: None,
                        invoked: e.tick,
                        responded: None,
                    });
                }
                EventKind::Respond => {
                    let idx = pending.remove(&e.process).ok_or(TraceError::UnmatchedResponse {
                        process: e.process,
                        tick: e.tick,
                    })?;
                    let op = &mut ops[idx];
                    if op.kind != e.op || op.arg != e.arg || e.result.is_none() {
                        return Err(TraceError::MismatchedResponse(e.tick));
                    }
                    op.result = e.result;
                    op.responded = Some(e.tick);
                }
            }
        }
        Ok(ops)
    }

    /// Linearization-point annotations keyed by operation.
    pub fn lin_points(&self) -> BTreeMap<OpKey, Tick> {
        self.annotations
            .iter()
            .filter_map(|a| match a {
                Annotation::LinPoint { op, tick } => Some((*op, *tick)),
                _ => None,
            })
            .collect()
    }
}
