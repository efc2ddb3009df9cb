//! Pairwise properties of correct-process histories. Each is implied by
//! Byzantine linearizability and is much cheaper to check.

use crate::runtime::{OpKind, OpResult, ProcessId, TypeTag};

use super::event::{HistoryTrace, Operation, TraceError};
use super::verdict::{Verdict, Witness};

fn verdict(name: &str, violation: Option<(String, Vec<&Operation>)>) -> Verdict {
    match violation {
        None => Verdict::pass(name, Witness::None),
        Some((description, ops)) => Verdict::fail(
            name,
            Witness::Conflict { description, ops: ops.into_iter().cloned().collect() },
        ),
    }
}

fn is(op: &Operation, kind: OpKind, result: OpResult) -> bool {
    op.kind == kind && op.result == Some(result)
}

/// First pair `(a, b)` with `a` before `b` in real time satisfying `bad`.
fn find_pair(
    ops: &[Operation],
    mut first: impl FnMut(&Operation) -> bool,
    mut bad: impl FnMut(&Operation, &Operation) -> bool,
) -> Option<(&Operation, &Operation)> {
    for a in ops.iter().filter(|o| first(o)) {
        for b in ops.iter().filter(|b| a.precedes(b)) {
            if bad(a, b) {
                return Some((a, b));
            }
        }
    }
    None
}

fn writer_ops(ops: &[Operation]) -> impl Iterator<Item = &Operation> {
    ops.iter().filter(|o| o.process == ProcessId::WRITER)
}

/// Checks every observation that applies to the trace's type, on the
/// correct-process history. Properties conditional on a correct writer
/// pass vacuously otherwise.
pub fn check_observations(trace: &HistoryTrace) -> Result<Vec<Verdict>, TraceError> {
    let h = trace.restrict_correct();
    let ops = h.operations()?;
    let wc = h.writer_correct();
    let v0 = h.meta.v0.unwrap_or_default();
    let mut out = Vec::new();
    match h.meta.type_tag {
        TypeTag::Verifiable | TypeTag::Authenticated => {
            let verifiable = h.meta.type_tag == TypeTag::Verifiable;
            let certify = if verifiable { (OpKind::Sign, OpResult::Success) } else { (OpKind::Write, OpResult::Done) };

            let validity = wc
                .then(|| {
                    find_pair(&ops, |o| is(o, certify.0, certify.1), |a, b| {
                        b.kind == OpKind::Verify && b.arg == a.arg && b.result == Some(OpResult::False)
                    })
                })
                .flatten()
                .map(|(a, b)| ("verify false after certifying operation".to_string(), vec![a, b]));
            out.push(verdict("validity", validity));

            let unforgeability = wc
                .then(|| {
                    ops.iter().find(|q| {
                        is(q, OpKind::Verify, OpResult::True)
                            && !(!verifiable && q.arg == Some(v0))
                            && !writer_ops(&ops).any(|s| {
                                s.kind == certify.0
                                    && s.arg == q.arg
                                    && (s.result.is_none() || s.result == Some(certify.1))
                                    && Some(s.invoked) < q.responded
                            })
                    })
                })
                .flatten()
                .map(|q| ("verify true without a prior certifying operation".to_string(), vec![q]));
            out.push(verdict("unforgeability", unforgeability));

            let relay = find_pair(&ops, |o| is(o, OpKind::Verify, OpResult::True), |a, b| {
                b.kind == OpKind::Verify && b.arg == a.arg && b.result == Some(OpResult::False)
            })
            .map(|(a, b)| ("verify false after verify true".to_string(), vec![a, b]));
            out.push(verdict("relay", relay));

            if !verifiable {
                let read_val = find_pair(&ops, |o| o.kind == OpKind::Read && o.result.is_some(), |a, b| {
                    let Some(OpResult::Read(v)) = a.result else { return false };
                    b.kind == OpKind::Verify && b.arg == v && b.result == Some(OpResult::False)
                })
                .map(|(a, b)| ("verify false after a read returned the value".to_string(), vec![a, b]));
                out.push(verdict("read_val", read_val));
            }
        }
        TypeTag::Sticky => {
            let first = writer_ops(&ops).find(|o| o.kind == OpKind::Write);
            let validity = wc
                .then_some(first)
                .flatten()
                .and_then(|w| {
                    ops.iter()
                        .find(|r| {
                            r.kind == OpKind::Read
                                && w.precedes(r)
                                && r.result != Some(OpResult::Read(w.arg))
                        })
                        .map(|r| ("read misses the completed first write".to_string(), vec![w, r]))
                });
            out.push(verdict("validity", validity));

            let unforgeability = wc
                .then(|| {
                    ops.iter().find_map(|r| {
                        let Some(OpResult::Read(Some(v))) = r.result else { return None };
                        let ok = first.is_some_and(|w| w.arg == Some(v) && Some(w.invoked) < r.responded);
                        (!ok).then(|| ("read returns a value the first write did not write".to_string(), vec![r]))
                    })
                })
                .flatten();
            out.push(verdict("unforgeability", unforgeability));

            let mut uniqueness = None;
            let reads: Vec<&Operation> = ops
                .iter()
                .filter(|r| matches!(r.result, Some(OpResult::Read(Some(_)))))
                .collect();
            if let Some(w) = reads.windows(2).find(|p| p[0].result != p[1].result) {
                uniqueness = Some(("reads return different values".to_string(), vec![w[0], w[1]]));
            }
            if uniqueness.is_none() {
                uniqueness = find_pair(&ops, |o| matches!(o.result, Some(OpResult::Read(Some(_)))), |_, b| {
                    b.kind == OpKind::Read && b.result == Some(OpResult::Read(None))
                })
                .map(|(a, b)| ("read returns ⊥ after a read returned a value".to_string(), vec![a, b]));
            }
            out.push(verdict("uniqueness", uniqueness));
        }
        TypeTag::TestOrSet => out.extend(check_saver_ops(&ops, wc)),
    }
    Ok(out)
}

/// The three test-or-set guarantees for correct testers.
pub fn check_saver(trace: &HistoryTrace) -> Result<Vec<Verdict>, TraceError> {
    let h = trace.restrict_correct();
    Ok(check_saver_ops(&h.operations()?, h.writer_correct()))
}

fn check_saver_ops(ops: &[Operation], setter_correct: bool) -> Vec<Verdict> {
    let one = |o: &Operation| is(o, OpKind::Test, OpResult::Bit(1));
    let zero = |o: &Operation| is(o, OpKind::Test, OpResult::Bit(0));

    let s1 = setter_correct
        .then(|| find_pair(ops, |o| o.kind == OpKind::Set && o.is_complete(), |_, b| zero(b)))
        .flatten()
        .map(|(a, b)| ("test returns 0 after set completed".to_string(), vec![a, b]));

    let s2 = setter_correct
        .then(|| {
            ops.iter().find(|q| {
                one(q) && !writer_ops(ops).any(|s| s.kind == OpKind::Set && Some(s.invoked) < q.responded)
            })
        })
        .flatten()
        .map(|q| ("test returns 1 but the correct setter never set before it".to_string(), vec![q]));

    let s3 = find_pair(ops, one, |_, b| zero(b))
        .map(|(a, b)| ("test returns 0 after a test returned 1".to_string(), vec![a, b]));

    vec![verdict("saver_set_seen", s1), verdict("saver_no_forgery", s2), verdict("saver_relay", s3)]
}
