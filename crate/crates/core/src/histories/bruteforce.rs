//! Exhaustive Byzantine-linearizability search over small histories.

use std::collections::{BTreeSet, HashSet};

use crate::runtime::{OpKind, OpResult, ProcessId, TypeTag};

use super::constructive::{CheckError, CHECK};
use super::event::{HistoryTrace, Operation};
use super::sequential::{LinOp, SpecState};
use super::verdict::{Verdict, Witness};

/// Largest number of correct operations the search accepts.
pub const BRUTE_FORCE_LIMIT: usize = 10;

struct Search<'a> {
    ops: &'a [Operation],
    preds: Vec<u32>,
    synth: Vec<(OpKind, Option<u64>)>,
    max_synth: usize,
    failed: HashSet<(u32, SpecState, usize)>,
    explored: usize,
    path: Vec<LinOp>,
}

impl Search<'_> {
    fn dfs(&mut self, done: u32, state: &SpecState, used: usize) -> bool {
        let full = (1u32 << self.ops.len()) - 1;
        if done == full {
            return true;
        }
        if self.failed.contains(&(done, state.clone(), used)) {
            return false;
        }
        self.explored += 1;
        for i in 0..self.ops.len() {
            let bit = 1u32 << i;
            if done & bit != 0 || self.preds[i] & !done != 0 {
                continue;
            }
            let op = &self.ops[i];
            let Some(expected) = state.expected(op.kind, op.arg) else { continue };
            let legal = match op.result {
                Some(r) => r == expected,
                None => true,
            };
            if legal {
                let mut next = state.clone();
                next.apply(op.kind, op.arg);
                self.path.push(LinOp {
                    process: op.process,
                    kind: op.kind,
                    arg: op.arg,
                    result: expected,
                    synthetic: false,
                });
                if self.dfs(done | bit, &next, used) {
                    return true;
                }
                self.path.pop();
            }
            if op.result.is_none() && self.dfs(done | bit, state, used) {
                return true;
            }
        }
        if used < self.max_synth {
            for s in 0..self.synth.len() {
                let (kind, arg) = self.synth[s];
                let Some(result) = state.expected(kind, arg) else { continue };
                let mut next = state.clone();
                next.apply(kind, arg);
                if next == *state {
                    continue;
                }
                self.path.push(LinOp { process: ProcessId::WRITER, kind, arg, result, synthetic: true });
                if self.dfs(done, &next, used + 1) {
                    return true;
                }
                self.path.pop();
            }
        }
        self.failed.insert((done, state.clone(), used));
        false
    }
}

/// Searches every order of the correct operations consistent with real
/// time. With a faulty writer, up to `max_synth` writer operations on values
/// appearing in the history may be added anywhere.
pub fn byz_linearize_bruteforce(trace: &HistoryTrace, max_synth: usize) -> Result<Verdict, CheckError> {
    let h = trace.restrict_correct();
    let ops = h.operations()?;
    if ops.len() > BRUTE_FORCE_LIMIT {
        return Err(CheckError::TooManyOperations(ops.len(), BRUTE_FORCE_LIMIT));
    }
    let preds = ops
        .iter()
        .map(|o| {
            ops.iter()
                .enumerate()
                .filter(|(_, p)| p.precedes(o))
                .fold(0u32, |m, (j, _)| m | (1 << j))
        })
        .collect();

    let mut synth = Vec::new();
    if !h.writer_correct() {
        let mut values: BTreeSet<u64> = h.meta.v0.into_iter().collect();
        for o in &ops {
            values.extend(o.arg);
            if let Some(OpResult::Read(Some(v))) = o.result {
                values.insert(v);
            }
        }
        match h.meta.type_tag {
            TypeTag::Verifiable => {
                for v in &values {
                    synth.push((OpKind::Write, Some(*v)));
                    synth.push((OpKind::Sign, Some(*v)));
                }
            }
            TypeTag::Authenticated | TypeTag::Sticky => {
                synth.extend(values.iter().map(|v| (OpKind::Write, Some(*v))));
            }
            TypeTag::TestOrSet => synth.push((OpKind::Set, None)),
        }
    }

    let mut search = Search {
        ops: &ops,
        preds,
        synth,
        max_synth,
        failed: HashSet::new(),
        explored: 0,
        path: Vec::new(),
    };
    let init = SpecState::initial(h.meta.type_tag, h.meta.v0);
    Ok(if search.dfs(0, &init, 0) {
        Verdict::pass(CHECK, Witness::Linearization(search.path))
    } else {
        Verdict::fail(CHECK, Witness::Exhausted { explored: search.explored })
    })
}
