//! Constructive Byzantine-linearizability check: place every correct
//! operation at a chosen point, add writer operations on behalf of a faulty
//! writer, then validate the resulting sequence.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::runtime::{OpKey, OpKind, OpResult, ProcessId, Tick, TypeTag};

use super::event::{Annotation, HistoryTrace, Operation, TraceError};
use super::sequential::{check_sequential, LinOp};
use super::verdict::{Verdict, Witness};

pub const CHECK: &str = "byz_linearizable";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("operation of {} invoked at {} has no linearization-point annotation", .0.process, .0.invoked)]
    MissingAnnotation(OpKey),
    #[error("{0} correct operations exceed the search bound of {1}")]
    TooManyOperations(usize, usize),
}

/// Position in the linearization: events at the same tick are ordered by
/// offset, which leaves room for added operations.
type Key = (Tick, i64);

/// Open interval (t0, t1) in which a value's certifying operation must take
/// effect. `t0` is the latest start of a negative check, `t1` the earliest
/// end of a positive one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub t0: Tick,
    pub t1: Option<Tick>,
}

impl Window {
    fn new() -> Self {
        Window { t0: 0, t1: None }
    }

    fn negative(&mut self, t: Tick) {
        self.t0 = self.t0.max(t);
    }

    fn positive(&mut self, t: Tick) {
        self.t1 = Some(self.t1.map_or(t, |x| x.min(t)));
    }

    fn is_empty(&self) -> bool {
        self.t1.is_some_and(|t1| t1 <= self.t0)
    }
}

/// Windows per value (`None` for sticky and test-or-set, which have one).
pub fn windows(trace: &HistoryTrace, ops: &[Operation]) -> BTreeMap<Option<u64>, Window> {
    let mut w: BTreeMap<Option<u64>, Window> = BTreeMap::new();
    for op in ops {
        let (Some(res), Some(resp)) = (op.result, op.responded) else { continue };
        match (trace.meta.type_tag, op.kind, res) {
            (TypeTag::Verifiable | TypeTag::Authenticated, OpKind::Verify, OpResult::True) => {
                w.entry(op.arg).or_insert_with(Window::new).positive(resp)
            }
            (TypeTag::Verifiable | TypeTag::Authenticated, OpKind::Verify, OpResult::False) => {
                w.entry(op.arg).or_insert_with(Window::new).negative(op.invoked)
            }
            (TypeTag::Sticky, OpKind::Read, OpResult::Read(Some(_)))
            | (TypeTag::TestOrSet, OpKind::Test, OpResult::Bit(1)) => {
                w.entry(None).or_insert_with(Window::new).positive(resp)
            }
            (TypeTag::Sticky, OpKind::Read, OpResult::Read(None))
            | (TypeTag::TestOrSet, OpKind::Test, OpResult::Bit(0)) => {
                w.entry(None).or_insert_with(Window::new).negative(op.invoked)
            }
            _ => {}
        }
    }
    if trace.meta.type_tag == TypeTag::Authenticated {
        for a in &trace.annotations {
            if let Annotation::VerifyProcedure { value, start, end, result, op } = a {
                if !trace.meta.correct.contains(&op.process) {
                    continue;
                }
                let e = w.entry(Some(*value)).or_insert_with(Window::new);
                if *result {
                    e.positive(*end);
                } else {
                    e.negative(*start);
                }
            }
        }
    }
    w
}

struct Builder {
    placed: Vec<(Key, u32, LinOp, Option<Operation>)>,
    seq: u32,
}

impl Builder {
    fn real(&mut self, key: Key, op: &Operation, result: OpResult) {
        let lin = LinOp { process: op.process, kind: op.kind, arg: op.arg, result, synthetic: false };
        self.placed.push((key, self.seq, lin, Some(op.clone())));
        self.seq += 1;
    }

    fn synth(&mut self, key: Key, kind: OpKind, arg: Option<u64>, result: OpResult) {
        let lin = LinOp { process: ProcessId::WRITER, kind, arg, result, synthetic: true };
        self.placed.push((key, self.seq, lin, None));
        self.seq += 1;
    }
}

fn fail_conflict(description: String, ops: Vec<Operation>) -> Verdict {
    Verdict::fail(CHECK, Witness::Conflict { description, ops })
}

/// Constructive check of Byzantine linearizability.
pub fn byz_linearize_constructive(trace: &HistoryTrace) -> Result<Verdict, CheckError> {
    let h = trace.restrict_correct();
    let all = h.operations()?;
    let tag = h.meta.type_tag;
    let writer_correct = h.writer_correct();

    let wins = windows(&h, &all);
    for (value, w) in &wins {
        if w.is_empty() {
            return Ok(Verdict::fail(
                CHECK,
                Witness::EmptyWindow { value: *value, t0: w.t0, t1: w.t1.unwrap_or_default() },
            ));
        }
    }

    let lps = h.lin_points();
    // Open writer operations that already took effect are completed; other
    // open operations are dropped.
    let mut ops: Vec<Operation> = Vec::new();
    let mut first_write_seen = false;
    for op in &all {
        let first_write = op.process == ProcessId::WRITER
            && matches!(op.kind, OpKind::Write | OpKind::Set)
            && !std::mem::replace(&mut first_write_seen, true);
        if op.is_complete() {
            ops.push(op.clone());
            continue;
        }
        let keep = match tag {
            TypeTag::Verifiable | TypeTag::Authenticated => {
                op.process == ProcessId::WRITER && lps.contains_key(&op.key())
            }
            TypeTag::Sticky | TypeTag::TestOrSet => first_write,
        };
        if keep {
            let mut done = op.clone();
            done.result = Some(if op.kind == OpKind::Sign { OpResult::Success } else { OpResult::Done });
            ops.push(done);
        }
    }

    let mut b = Builder { placed: Vec::new(), seq: 0 };
    let resp_key = |op: &Operation| -> Key { (op.responded.unwrap_or(Tick::MAX), 0) };
    let inv_key = |op: &Operation| -> Key { (op.invoked, 0) };
    let annotated = |op: &Operation| -> Result<Key, CheckError> {
        lps.get(&op.key()).map(|t| (*t, 0)).ok_or(CheckError::MissingAnnotation(op.key()))
    };

    match tag {
        TypeTag::Verifiable | TypeTag::Authenticated => {
            for op in &ops {
                let res = op.result.expect("completed above");
                match (op.kind, res) {
                    (OpKind::Verify, OpResult::True) => b.real(resp_key(op), op, res),
                    (OpKind::Verify, _) => b.real(inv_key(op), op, res),
                    (OpKind::Sign, OpResult::Fail) => b.real(resp_key(op), op, res),
                    (OpKind::Write | OpKind::Sign | OpKind::Read, _) if writer_correct => {
                        let key = annotated(op)?;
                        if key < inv_key(op) || key > resp_key(op) {
                            return Ok(fail_conflict(
                                format!("annotated point {} lies outside the operation", key.0),
                                vec![op.clone()],
                            ));
                        }
                        b.real(key, op, res);
                    }
                    (OpKind::Read, OpResult::Read(v)) => {
                        let v = v.unwrap_or_default();
                        let at = if tag == TypeTag::Verifiable { op.invoked } else { op.responded.expect("complete") };
                        if tag == TypeTag::Authenticated {
                            let t0 = wins.get(&Some(v)).map_or(0, |w| w.t0);
                            if at <= t0 {
                                return Ok(Verdict::fail(
                                    CHECK,
                                    Witness::EmptyWindow { value: Some(v), t0, t1: at },
                                ));
                            }
                        }
                        b.synth((at, -1), OpKind::Write, Some(v), OpResult::Done);
                        b.real((at, 0), op, res);
                    }
                    _ => b.real(resp_key(op), op, res),
                }
            }
            if !writer_correct {
                let certified: Vec<u64> = ops
                    .iter()
                    .filter(|o| o.kind == OpKind::Verify && o.result == Some(OpResult::True))
                    .map(Operation::value)
                    .collect::<std::collections::BTreeSet<_>>()
                    .into_iter()
                    .collect();
                for (i, v) in certified.into_iter().enumerate() {
                    let t0 = wins.get(&Some(v)).map_or(0, |w| w.t0);
                    let off = 2 * i as i64 + 1;
                    b.synth((t0, off), OpKind::Write, Some(v), OpResult::Done);
                    if tag == TypeTag::Verifiable {
                        b.synth((t0, off + 1), OpKind::Sign, Some(v), OpResult::Success);
                    }
                }
            }
        }
        TypeTag::Sticky | TypeTag::TestOrSet => {
            let w = wins.get(&None).copied().unwrap_or(Window::new());
            let (write_kind, pos_result) = match tag {
                TypeTag::Sticky => (OpKind::Write, None),
                _ => (OpKind::Set, Some(OpResult::Bit(1))),
            };
            let mut first = true;
            for op in &ops {
                let res = op.result.expect("completed above");
                if op.kind == write_kind {
                    if first {
                        first = false;
                        let key = inv_key(op).max((w.t0, 1));
                        let upper = w.t1.map_or((Tick::MAX, 0), |t| (t, 0));
                        if key >= upper || key > resp_key(op) {
                            return Ok(fail_conflict(
                                format!("first {:?} cannot take effect inside ({}, {:?})", write_kind, w.t0, w.t1),
                                vec![op.clone()],
                            ));
                        }
                        b.real(key, op, res);
                    } else {
                        b.real(resp_key(op), op, res);
                    }
                    continue;
                }
                let positive = match tag {
                    TypeTag::Sticky => matches!(res, OpResult::Read(Some(_))),
                    _ => Some(res) == pos_result,
                };
                b.real(if positive { resp_key(op) } else { inv_key(op) }, op, res);
            }
            if !writer_correct {
                let earliest = ops
                    .iter()
                    .filter(|o| o.process != ProcessId::WRITER)
                    .filter_map(|o| match o.result {
                        Some(OpResult::Read(Some(v))) => Some((o.responded, Some(v))),
                        Some(OpResult::Bit(1)) => Some((o.responded, None)),
                        _ => None,
                    })
                    .min();
                if let Some((_, v)) = earliest {
                    b.synth((w.t0, 1), write_kind, v, OpResult::Done);
                }
            }
        }
    }

    b.placed.sort_by_key(|x| (x.0, x.1));

    // Placement must respect real-time order among correct operations.
    let reals: Vec<(&Key, &Operation)> =
        b.placed.iter().filter_map(|(k, _, _, o)| o.as_ref().map(|o| (k, o))).collect();
    for (i, (ka, a)) in reals.iter().enumerate() {
        for (kb, bop) in &reals[..i] {
            if a.precedes(bop) && ka >= kb {
                return Ok(fail_conflict(
                    "chosen points contradict real-time order".into(),
                    vec![(*a).clone(), (*bop).clone()],
                ));
            }
        }
    }

    let seq: Vec<LinOp> = b.placed.into_iter().map(|(_, _, l, _)| l).collect();
    Ok(check_sequential(&h.meta, &seq).renamed(CHECK))
}
