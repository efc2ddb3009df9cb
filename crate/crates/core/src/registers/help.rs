//! Help thread of the verifiable and authenticated registers.

use std::collections::BTreeSet;

use crate::runtime::{cell, CellId, CellName, Memory, ProcessId, RuntimeError, StepCtx, Value};

use super::common::{adoptable, processes, AskerTracker, OwnWitness};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum HelpMode {
    /// The writer's register is a plain set like everyone else's.
    Verifiable,
    /// The writer's register holds timestamped pairs and only its value
    /// projection is relayed.
    Authenticated,
}

#[derive(Clone, Debug)]
enum Phase {
    Counters(usize),
    ReadWriter,
    Witness(usize),
    WriteOwn,
    Publish(usize),
}

#[derive(Clone, Debug)]
pub(crate) struct WitnessHelp {
    me: ProcessId,
    f: usize,
    mode: HelpMode,
    asks: AskerTracker,
    witness_cells: Vec<CellId>,
    seen: Vec<BTreeSet<u64>>,
    pending: BTreeSet<u64>,
    publish: BTreeSet<u64>,
    phase: Phase,
}

impl WitnessHelp {
    pub fn new(mem: &Memory, me: ProcessId, n: usize, f: usize, mode: HelpMode) -> Self {
        WitnessHelp {
            me,
            f,
            mode,
            asks: AskerTracker::new(mem, me, n),
            witness_cells: processes(n).map(|i| cell(mem, CellName::Witness(i))).collect(),
            seen: vec![BTreeSet::new(); n],
            pending: BTreeSet::new(),
            publish: BTreeSet::new(),
            phase: Phase::Counters(0),
        }
    }

    /// One step of the help loop. `own` is the process's witness register
    /// (for the authenticated writer, unused).
    pub fn step(&mut self, ctx: &mut StepCtx<'_>, own: &mut OwnWitness) -> Result<(), RuntimeError> {
        match self.phase {
            Phase::Counters(idx) => {
                if !self.asks.poll(ctx, idx)? {
                    self.phase = Phase::Counters(idx + 1);
                } else if self.asks.askers.is_empty() {
                    self.phase = Phase::Counters(0);
                } else {
                    self.phase = match self.mode {
                        HelpMode::Verifiable => Phase::Witness(0),
                        HelpMode::Authenticated => Phase::ReadWriter,
                    };
                }
            }
            Phase::ReadWriter => {
                let r = ctx.read(self.witness_cells[0])?;
                self.seen[0] = match r {
                    Value::Pairs(p) => p.into_iter().map(|(_, v)| v).collect(),
                    _ => BTreeSet::new(),
                };
                if self.me == ProcessId::WRITER {
                    self.publish = self.seen[0].clone();
                    self.phase = Phase::Publish(0);
                } else {
                    self.phase = Phase::Witness(1);
                }
            }
            Phase::Witness(i) => {
                self.seen[i] = OwnWitness::view(&ctx.read(self.witness_cells[i])?);
                if i + 1 < self.seen.len() {
                    self.phase = Phase::Witness(i + 1);
                    return Ok(());
                }
                let adopt = adoptable(&self.seen[0], &self.seen, self.f);
                self.pending = adopt.difference(&own.set).copied().collect();
                if self.pending.is_empty() {
                    self.publish = own.set.clone();
                    self.phase = Phase::Publish(0);
                } else {
                    self.phase = Phase::WriteOwn;
                }
            }
            Phase::WriteOwn => {
                own.set.append(&mut self.pending);
                ctx.write(own.cell, Value::Set(own.set.clone()))?;
                self.publish = own.set.clone();
                self.phase = Phase::Publish(0);
            }
            Phase::Publish(a) => {
                let done = self.asks.publish(ctx, a, Value::Set(self.publish.clone()))?;
                self.phase = if done { Phase::Counters(0) } else { Phase::Publish(a + 1) };
            }
        }
        Ok(())
    }
}
