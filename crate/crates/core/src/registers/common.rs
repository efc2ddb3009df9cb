//! Register layout and step machines shared by the verifiable and
//! authenticated registers.

use std::collections::BTreeSet;

use crate::runtime::{
    cell, CellId, CellName, Memory, ProcessId, Readers, RuntimeError, StepCtx, Value,
};

/// Reader processes are p2..pn.
pub(crate) fn readers(n: usize) -> impl Iterator<Item = ProcessId> {
    (2..=n as u32).map(ProcessId)
}

pub(crate) fn processes(n: usize) -> impl Iterator<Item = ProcessId> {
    (1..=n as u32).map(ProcessId)
}

/// Allocates the request counters `C_k` and reply registers `R_jk`.
pub(crate) fn install_request_cells(
    mem: &mut Memory,
    n: usize,
    reply_init: Value,
) -> Result<(), RuntimeError> {
    for k in readers(n) {
        mem.alloc_register(CellName::Counter(k), k, Readers::All, Value::Scalar(0))?;
    }
    for j in processes(n) {
        for k in readers(n) {
            mem.alloc_register(
                CellName::Reply { from: j, to: k },
                j,
                Readers::single(k),
                reply_init.clone(),
            )?;
        }
    }
    Ok(())
}

/// A reader's counter and the replies addressed to it.
#[derive(Clone, Debug)]
pub(crate) struct ReaderCells {
    pub counter: CellId,
    /// Indexed by the replying process's index.
    pub replies: Vec<CellId>,
    pub round: u64,
}

impl ReaderCells {
    pub fn new(mem: &Memory, me: ProcessId, n: usize) -> Option<Self> {
        if me == ProcessId::WRITER {
            return None;
        }
        Some(ReaderCells {
            counter: cell(mem, CellName::Counter(me)),
            replies: processes(n).map(|j| cell(mem, CellName::Reply { from: j, to: me })).collect(),
            round: 0,
        })
    }
}

/// The helper side of the request protocol: counters to poll and the
/// replies to publish, indexed by reader position (reader k at k-2).
#[derive(Clone, Debug)]
pub(crate) struct AskerTracker {
    pub counters: Vec<CellId>,
    pub replies: Vec<CellId>,
    pub prev: Vec<u64>,
    pub cur: Vec<u64>,
    pub askers: Vec<usize>,
}

impl AskerTracker {
    pub fn new(mem: &Memory, me: ProcessId, n: usize) -> Self {
        AskerTracker {
            counters: readers(n).map(|k| cell(mem, CellName::Counter(k))).collect(),
            replies: readers(n).map(|k| cell(mem, CellName::Reply { from: me, to: k })).collect(),
            prev: vec![0; n - 1],
            cur: vec![0; n - 1],
            askers: Vec::new(),
        }
    }

    /// Reads the `idx`-th counter. Returns true once all have been read and
    /// `askers` holds the readers with a new request.
    pub fn poll(&mut self, ctx: &mut StepCtx<'_>, idx: usize) -> Result<bool, RuntimeError> {
        let c = ctx.read(self.counters[idx])?.as_scalar().unwrap_or(0);
        self.cur[idx] = c;
        if idx + 1 < self.counters.len() {
            return Ok(false);
        }
        self.askers.clear();
        self.askers.extend((0..self.cur.len()).filter(|&k| self.cur[k] > self.prev[k]));
        Ok(true)
    }

    /// Answers the `a`-th asker. Returns true after the last one.
    pub fn publish(
        &mut self,
        ctx: &mut StepCtx<'_>,
        a: usize,
        witness: Value,
    ) -> Result<bool, RuntimeError> {
        let k = self.askers[a];
        ctx.write(self.replies[k], Value::reply(witness, self.cur[k]))?;
        self.prev[k] = self.cur[k];
        Ok(a + 1 == self.askers.len())
    }
}

/// Values a helper adopts: those the writer vouches for, and those at
/// least `f + 1` witness registers contain.
pub(crate) fn adoptable(writer: &BTreeSet<u64>, all: &[BTreeSet<u64>], f: usize) -> BTreeSet<u64> {
    let mut out = writer.clone();
    let candidates: BTreeSet<u64> = all.iter().flatten().copied().collect();
    for v in candidates {
        if all.iter().filter(|s| s.contains(&v)).count() > f {
            out.insert(v);
        }
    }
    out
}

/// A process's own witness register and its local copy.
#[derive(Clone, Debug)]
pub(crate) struct OwnWitness {
    pub cell: CellId,
    pub set: BTreeSet<u64>,
}

impl OwnWitness {
    /// Set-view of a register, with anything malformed read as empty.
    pub fn view(v: &Value) -> BTreeSet<u64> {
        v.as_set().cloned().unwrap_or_default()
    }
}
