//! Sequential specifications. Every type is deterministic: the state and the
//! operation fix the result.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::runtime::{OpKind, OpResult, ProcessId, TypeTag};

use super::event::TraceMeta;
use super::verdict::{Outcome, Verdict, Witness};

/// Abstract state of a sequential object.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SpecState {
    Verifiable { last: u64, written: BTreeSet<u64>, signed: BTreeSet<u64> },
    Authenticated { v0: u64, last: u64, written: BTreeSet<u64> },
    Sticky { first: Option<u64> },
    TestOrSet { set: bool },
}

impl SpecState {
    pub fn initial(tag: TypeTag, v0: Option<u64>) -> Self {
        let v0 = v0.unwrap_or_default();
        match tag {
            TypeTag::Verifiable => SpecState::Verifiable {
                last: v0,
                written: BTreeSet::new(),
                signed: BTreeSet::new(),
            },
            TypeTag::Authenticated => SpecState::Authenticated { v0, last: v0, written: BTreeSet::new() },
            TypeTag::Sticky => SpecState::Sticky { first: None },
            TypeTag::TestOrSet => SpecState::TestOrSet { set: false },
        }
    }

    /// The result the specification prescribes, or `None` if the operation
    /// does not belong to the type.
    pub fn expected(&self, kind: OpKind, arg: Option<u64>) -> Option<OpResult> {
        let a = arg.unwrap_or_default();
        Some(match (self, kind) {
            (SpecState::Verifiable { .. }, OpKind::Write)
            | (SpecState::Authenticated { .. }, OpKind::Write)
            | (SpecState::Sticky { .. }, OpKind::Write)
            | (SpecState::TestOrSet { .. }, OpKind::Set) => OpResult::Done,
            (SpecState::Verifiable { last, .. }, OpKind::Read)
            | (SpecState::Authenticated { last, .. }, OpKind::Read) => OpResult::Read(Some(*last)),
            (SpecState::Verifiable { written, .. }, OpKind::Sign) => {
                if written.contains(&a) {
                    OpResult::Success
                } else {
                    OpResult::Fail
                }
            }
            (SpecState::Verifiable { signed, .. }, OpKind::Verify) => OpResult::from_bool(signed.contains(&a)),
            (SpecState::Authenticated { v0, written, .. }, OpKind::Verify) => {
                OpResult::from_bool(a == *v0 || written.contains(&a))
            }
            (SpecState::Sticky { first }, OpKind::Read) => OpResult::Read(*first),
            (SpecState::TestOrSet { set }, OpKind::Test) => OpResult::Bit(u8::from(*set)),
            _ => return None,
        })
    }

    /// Applies an operation that returned its expected result.
    pub fn apply(&mut self, kind: OpKind, arg: Option<u64>) {
        let a = arg.unwrap_or_default();
        match (self, kind) {
            (SpecState::Verifiable { last, written, .. }, OpKind::Write) => {
                *last = a;
                written.insert(a);
            }
            (SpecState::Verifiable { written, signed, .. }, OpKind::Sign) => {
                if written.contains(&a) {
                    signed.insert(a);
                }
            }
            (SpecState::Authenticated { last, written, .. }, OpKind::Write) => {
                *last = a;
                written.insert(a);
            }
            (SpecState::Sticky { first }, OpKind::Write) => {
                first.get_or_insert(a);
            }
            (SpecState::TestOrSet { set }, OpKind::Set) => *set = true,
            _ => {}
        }
    }
}

/// An operation placed in a sequential order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinOp {
    pub process: ProcessId,
    pub kind: OpKind,
    pub arg: Option<u64>,
    pub result: OpResult,
    /// Added by the checker on behalf of a faulty writer.
    pub synthetic: bool,
}

/// Checks that `seq` is a legal sequential history of the type.
pub fn check_sequential(meta: &TraceMeta, seq: &[LinOp]) -> Verdict {
    let mut state = SpecState::initial(meta.type_tag, meta.v0);
    for (index, op) in seq.iter().enumerate() {
        match state.expected(op.kind, op.arg) {
            Some(expected) if expected == op.result => state.apply(op.kind, op.arg),
            expected => {
                return Verdict::fail(
                    "sequential",
                    Witness::SequentialViolation { index, op: op.clone(), expected },
                )
            }
        }
    }
    Verdict { check: "sequential".into(), outcome: Outcome::Pass, witness: Witness::Linearization(seq.to_vec()) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(tag: TypeTag, v0: Option<u64>) -> TraceMeta {
        TraceMeta { type_tag: tag, n: 4, f: 1, correct: Default::default(), v0 }
    }

    fn op(kind: OpKind, arg: Option<u64>, result: OpResult) -> LinOp {
        LinOp { process: ProcessId(1), kind, arg, result, synthetic: false }
    }

    #[test]
    fn verifiable_sign_needs_write() {
        let m = meta(TypeTag::Verifiable, Some(0));
        let ok = [
            op(OpKind::Sign, Some(3), OpResult::Fail),
            op(OpKind::Verify, Some(3), OpResult::False),
            op(OpKind::Write, Some(3), OpResult::Done),
            op(OpKind::Read, None, OpResult::Read(Some(3))),
            op(OpKind::Sign, Some(3), OpResult::Success),
            op(OpKind::Verify, Some(3), OpResult::True),
        ];
        assert!(check_sequential(&m, &ok).passed());
        let bad = [op(OpKind::Write, Some(3), OpResult::Done), op(OpKind::Verify, Some(3), OpResult::True)];
        assert!(!check_sequential(&m, &bad).passed());
    }

    #[test]
    fn authenticated_v0_always_verifies() {
        let m = meta(TypeTag::Authenticated, Some(7));
        let seq = [
            op(OpKind::Verify, Some(7), OpResult::True),
            op(OpKind::Read, None, OpResult::Read(Some(7))),
            op(OpKind::Verify, Some(1), OpResult::False),
        ];
        assert!(check_sequential(&m, &seq).passed());
    }

    #[test]
    fn sticky_keeps_first() {
        let m = meta(TypeTag::Sticky, None);
        let seq = [
            op(OpKind::Read, None, OpResult::Read(None)),
            op(OpKind::Write, Some(1), OpResult::Done),
            op(OpKind::Write, Some(2), OpResult::Done),
            op(OpKind::Read, None, OpResult::Read(Some(1))),
        ];
        assert!(check_sequential(&m, &seq).passed());
    }

    #[test]
    fn sign_not_in_authenticated() {
        let m = meta(TypeTag::Authenticated, Some(0));
        assert!(!check_sequential(&m, &[op(OpKind::Sign, Some(1), OpResult::Fail)]).passed());
    }
}
