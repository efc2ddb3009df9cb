//! Byzantine behaviour: per-process scripts of directives, executed in the
//! Byzantine process's scheduler slots.

mod presets;

pub use presets::{preset, preset_names, Preset, EQUIVOCATION_VALUES, FORGED_VALUE};

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::runtime::{
    Access, AccessKind, CellId, CellName, ConfigError, Memory, ProcessId, ProcessLogic, Protocol,
    RuntimeError, Slot, StepCtx, Tick, Value,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Directive {
    /// Take no steps beyond the other directives. Also the behaviour once a
    /// script runs out.
    Silent,
    /// Follow the protocol, including workload operations, until `tick`.
    CrashAtTick { tick: Tick },
    /// From `tick` on, write every owned register back to its initial value.
    ResetOwnRegistersAtTick { tick: Tick },
    WriteOwn { cell: CellName, value: Value, tick: Tick },
    /// Keep writing alternating values into the protocol's equivocation
    /// registers.
    Equivocate { values: Vec<u64> },
    /// Answer `reader` with a fabricated witness. With no `round`, read the
    /// reader's counter first and answer that round.
    LyingWitness {
        reader: ProcessId,
        witness: Value,
        #[serde(default)]
        round: Option<u64>,
        #[serde(default)]
        tick: Tick,
    },
    /// Answer every reader with the current witness one round too late.
    StaleResponder,
    /// Re-issue recorded writes, each at its recorded tick.
    ReplayFromTrace { writes: Vec<Access> },
}

/// Directives per Byzantine process. Byzantine processes without an entry
/// are silent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryScript {
    pub byzantine: BTreeMap<ProcessId, Vec<Directive>>,
}

impl AdversaryScript {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn with(mut self, p: ProcessId, directives: Vec<Directive>) -> Self {
        self.byzantine.entry(p).or_default().extend(directives);
        self
    }
}

#[derive(Clone, Debug)]
enum Timed {
    Write { cell: CellId, value: Value },
    Lie { counter: CellId, reply: CellId, witness: Value, round: Option<u64> },
}

#[derive(Clone, Debug)]
struct StaleState {
    readers: Vec<(CellId, CellId)>,
    cursor: usize,
    pending: Option<(CellId, u64)>,
}

/// Executes one Byzantine process's script.
#[derive(Clone, Debug)]
pub struct ByzantineDriver {
    pid: ProcessId,
    honest_until: Option<Tick>,
    timed: VecDeque<(Tick, Timed)>,
    pending_write: Option<(CellId, Value)>,
    equivocate: Option<Vec<u64>>,
    equivocation_step: u64,
    stale: Option<StaleState>,
}

impl ByzantineDriver {
    pub fn load(
        pid: ProcessId,
        directives: &[Directive],
        mem: &Memory,
        n: usize,
    ) -> Result<Self, ConfigError> {
        let bad = |msg: String| ConfigError::Adversary(format!("{pid}: {msg}"));
        let lookup = |name: CellName| {
            mem.lookup(name).ok_or_else(|| bad(format!("no register {name} in this protocol")))
        };
        let own = |name: CellName| {
            if name.owner() != pid {
                return Err(bad(format!("cannot write {name}, owned by {}", name.owner())));
            }
            lookup(name)
        };
        let mut driver = ByzantineDriver {
            pid,
            honest_until: None,
            timed: VecDeque::new(),
            pending_write: None,
            equivocate: None,
            equivocation_step: 0,
            stale: None,
        };
        let mut timed: Vec<(Tick, Timed)> = Vec::new();
        for d in directives {
            match d {
                Directive::Silent => {}
                Directive::CrashAtTick { tick } => driver.honest_until = Some(*tick),
                Directive::ResetOwnRegistersAtTick { tick } => {
                    for (cell, init) in mem.owned_cells(pid) {
                        timed.push((*tick, Timed::Write { cell, value: init }));
                    }
                }
                Directive::WriteOwn { cell, value, tick } => {
                    timed.push((*tick, Timed::Write { cell: own(*cell)?, value: value.clone() }));
                }
                Directive::Equivocate { values } => {
                    if values.is_empty() {
                        return Err(bad("equivocate needs at least one value".into()));
                    }
                    driver.equivocate = Some(values.clone());
                }
                Directive::LyingWitness { reader, witness, round, tick } => {
                    if reader.0 < 1 || reader.0 as usize > n {
                        return Err(bad(format!("unknown reader {reader}")));
                    }
                    timed.push((
                        *tick,
                        Timed::Lie {
                            counter: lookup(CellName::Counter(*reader))?,
                            reply: own(CellName::Reply { from: pid, to: *reader })?,
                            witness: witness.clone(),
                            round: *round,
                        },
                    ));
                }
                Directive::StaleResponder => {
                    let readers = (1..=n as u32)
                        .map(ProcessId)
                        .filter_map(|k| {
                            let c = mem.lookup(CellName::Counter(k))?;
                            let r = mem.lookup(CellName::Reply { from: pid, to: k })?;
                            Some((c, r))
                        })
                        .collect();
                    driver.stale = Some(StaleState { readers, cursor: 0, pending: None });
                }
                Directive::ReplayFromTrace { writes } => {
                    for a in writes {
                        if a.kind != AccessKind::Write || a.process != pid {
                            return Err(bad(format!("replayed access at tick {} is not own write", a.tick)));
                        }
                        let value = a.value.clone().ok_or_else(|| bad("replayed write without value".into()))?;
                        timed.push((a.tick, Timed::Write { cell: own(a.cell)?, value }));
                    }
                }
            }
        }
        timed.sort_by_key(|(t, _)| *t);
        driver.timed = timed.into();
        Ok(driver)
    }

    /// Whether the process still follows the protocol at tick `t`.
    pub fn honest_at(&self, t: Tick) -> bool {
        self.honest_until.is_some_and(|c| t < c)
    }

    /// Earliest tick at which a scripted action becomes due.
    pub fn next_due(&self) -> Option<Tick> {
        self.timed.front().map(|(t, _)| *t)
    }

    pub fn script_exhausted(&self) -> bool {
        self.timed.is_empty() && self.pending_write.is_none()
    }

    /// One scheduler step in `slot`. Scripted actions take priority, then
    /// ongoing behaviours, then the honest help thread while not crashed.
    pub fn step(
        &mut self,
        slot: Slot,
        ctx: &mut StepCtx<'_>,
        logic: &mut dyn ProcessLogic,
        protocol: &dyn Protocol,
    ) -> Result<(), RuntimeError> {
        let next = ctx.now() + 1;
        if let Some((cell, value)) = self.pending_write.take() {
            return ctx.write(cell, value);
        }
        if self.timed.front().is_some_and(|(t, _)| *t <= next) {
            let (_, action) = self.timed.pop_front().expect("front exists");
            return match action {
                Timed::Write { cell, value } => ctx.write(cell, value),
                Timed::Lie { reply, witness, round: Some(r), .. } => {
                    ctx.write(reply, Value::reply(witness, r))
                }
                Timed::Lie { counter, reply, witness, round: None } => {
                    let c = ctx.read(counter)?.as_scalar().unwrap_or(0);
                    self.pending_write = Some((reply, Value::reply(witness, c)));
                    Ok(())
                }
            };
        }
        if let Some(values) = &self.equivocate {
            if let Some((name, value)) = protocol.equivocation(self.pid, self.equivocation_step, values) {
                self.equivocation_step += 1;
                if let Some(cell) = ctx.lookup(name) {
                    return ctx.write(cell, value);
                }
            }
        }
        if let Some(st) = &mut self.stale {
            if let Some((reply, c)) = st.pending.take() {
                let own = ctx
                    .lookup(CellName::Witness(self.pid))
                    .and_then(|w| ctx.peek_own(w).cloned())
                    .unwrap_or(Value::Bottom);
                return ctx.write(reply, Value::reply(own, c.saturating_sub(1)));
            }
            if !st.readers.is_empty() {
                let (counter, reply) = st.readers[st.cursor];
                st.cursor = (st.cursor + 1) % st.readers.len();
                let c = ctx.read(counter)?.as_scalar().unwrap_or(0);
                st.pending = Some((reply, c));
                return Ok(());
            }
        }
        if slot == Slot::Help && self.honest_at(next) {
            return logic.help_step(ctx);
        }
        Ok(())
    }
}
