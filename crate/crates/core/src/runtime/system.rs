//! The simulator: processes, workload, scheduler and the run loop.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{AdversaryScript, ByzantineDriver};
use crate::histories::{Annotation, Event, EventKind, HistoryTrace, TraceMeta};

use super::config::{Machine, SchedulePolicy, ScheduleEntry, Slot, SystemConfig};
use super::error::{ConfigError, RuntimeError};
use super::memory::{Access, Memory};
use super::op::{OpKey, OpRequest, OpResult};
use super::process::{InvariantViolation, ProcessLogic, Protocol, StepCtx};
use super::value::{ProcessId, Tick};
use super::workload::{validate_entry, Workload, WorkloadEntry};

/// A validated configuration with an empty register file.
pub struct System {
    pub config: SystemConfig,
    pub memory: Memory,
}

pub fn create_system(config: SystemConfig) -> Result<System, ConfigError> {
    config.validate()?;
    Ok(System { config, memory: Memory::new() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// The stop condition held (by default: every correct operation responded).
    Completed,
    /// The tick budget ran out first.
    BudgetExhausted,
    /// No machine can make progress and nothing is scheduled to wake up.
    Stuck,
}

#[derive(Clone, Debug, Default)]
struct EntryState {
    key: Option<OpKey>,
    result: Option<(OpResult, Tick)>,
}

struct Proc {
    pid: ProcessId,
    correct: bool,
    logic: Box<dyn ProcessLogic>,
    byz: Option<ByzantineDriver>,
    queue: VecDeque<usize>,
    current: Option<(usize, OpKey)>,
    wake: Tick,
}

/// Everything a finished (or interrupted) run produced.
pub struct RunOutcome {
    pub status: RunStatus,
    pub trace: HistoryTrace,
    pub violations: Vec<InvariantViolation>,
    pub schedule: Vec<ScheduleEntry>,
    pub access_log: Vec<Access>,
    pub final_tick: Tick,
}

pub struct Simulation {
    config: SystemConfig,
    protocol: Box<dyn Protocol>,
    mem: Memory,
    rng: ChaCha8Rng,
    procs: Vec<Proc>,
    entries: Vec<WorkloadEntry>,
    states: Vec<EntryState>,
    outstanding: usize,
    events: Vec<Event>,
    annotations: Vec<Annotation>,
    violations: Vec<InvariantViolation>,
    replay: Vec<ScheduleEntry>,
    replay_cursor: usize,
    schedule: Vec<ScheduleEntry>,
    selections: Option<Vec<(Tick, Machine)>>,
    round: Vec<Machine>,
}

impl Simulation {
    pub fn new(
        system: System,
        protocol: Box<dyn Protocol>,
        workload: &Workload,
        adversary: &AdversaryScript,
    ) -> Result<Self, RuntimeError> {
        let System { config, mut memory } = system;
        let (n, f) = (config.n, config.f);
        protocol.install(&mut memory, n)?;
        for p in adversary.byzantine.keys() {
            if config.is_correct(*p) || p.0 < 1 || p.0 as usize > n {
                return Err(ConfigError::Adversary(format!("{p} is not a Byzantine process")).into());
            }
        }
        let mut procs = Vec::with_capacity(n);
        for pid in config.processes() {
            let correct = config.is_correct(pid);
            let byz = if correct {
                None
            } else {
                let script = adversary.byzantine.get(&pid).map(Vec::as_slice).unwrap_or(&[]);
                Some(ByzantineDriver::load(pid, script, &memory, n)?)
            };
            procs.push(Proc {
                pid,
                correct,
                logic: protocol.spawn(pid, &memory, n, f),
                byz,
                queue: VecDeque::new(),
                current: None,
                wake: 0,
            });
        }
        let replay = match &config.policy {
            SchedulePolicy::Replay(entries) => entries.clone(),
            _ => Vec::new(),
        };
        let mut sim = Simulation {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            protocol,
            mem: memory,
            procs,
            entries: Vec::new(),
            states: Vec::new(),
            outstanding: 0,
            events: Vec::new(),
            annotations: Vec::new(),
            violations: Vec::new(),
            replay,
            replay_cursor: 0,
            schedule: Vec::new(),
            selections: None,
            round: Vec::new(),
        };
        for e in &workload.entries {
            sim.submit(e.clone())?;
        }
        Ok(sim)
    }

    /// Adds an operation to the workload. Returns its entry index.
    pub fn submit(&mut self, e: WorkloadEntry) -> Result<usize, ConfigError> {
        let idx = self.entries.len();
        validate_entry(idx, &e, self.protocol.type_tag(), self.config.n)?;
        let p = &mut self.procs[e.process.index()];
        p.queue.push_back(idx);
        if p.correct {
            self.outstanding += 1;
        }
        self.entries.push(e);
        self.states.push(EntryState::default());
        Ok(idx)
    }

    /// Keeps process `p` from taking steps before tick `t`.
    pub fn sleep_until(&mut self, p: ProcessId, t: Tick) {
        self.procs[p.index()].wake = t;
    }

    pub fn record_selections(&mut self) {
        self.selections = Some(Vec::new());
    }

    pub fn selections(&self) -> &[(Tick, Machine)] {
        self.selections.as_deref().unwrap_or(&[])
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn memory(&self) -> &Memory {
        &self.mem
    }

    pub fn clock(&self) -> Tick {
        self.mem.clock()
    }

    pub fn result_of(&self, entry: usize) -> Option<(OpResult, Tick)> {
        self.states.get(entry).and_then(|s| s.result)
    }

    pub fn key_of(&self, entry: usize) -> Option<OpKey> {
        self.states.get(entry).and_then(|s| s.key)
    }

    /// Every operation submitted by a correct process has responded.
    pub fn workload_complete(&self) -> bool {
        self.outstanding == 0
    }

    /// Steps that produced events so far, for replay.
    pub fn schedule(&self) -> &[ScheduleEntry] {
        &self.schedule
    }

    /// Whether Byzantine process `p` has no scripted actions left.
    pub fn script_exhausted(&self, p: ProcessId) -> bool {
        self.procs[p.index()].byz.as_ref().is_none_or(ByzantineDriver::script_exhausted)
    }

    pub fn violations(&self) -> &[InvariantViolation] {
        &self.violations
    }

    pub fn trace(&self) -> HistoryTrace {
        HistoryTrace {
            meta: TraceMeta {
                type_tag: self.protocol.type_tag(),
                n: self.config.n,
                f: self.config.f,
                correct: self.config.correct.clone(),
                v0: self.protocol.v0(),
            },
            events: self.events.clone(),
            annotations: self.annotations.clone(),
        }
    }

    pub fn into_outcome(self, status: RunStatus) -> RunOutcome {
        let trace = self.trace();
        RunOutcome {
            status,
            trace,
            violations: self.violations,
            schedule: self.schedule,
            access_log: self.mem.access_log().to_vec(),
            final_tick: self.mem.clock(),
        }
    }

    /// Runs until every correct operation has responded.
    pub fn run(&mut self) -> Result<RunStatus, RuntimeError> {
        self.run_until(|s| s.workload_complete())
    }

    /// Runs until `stop` holds, the budget is spent, or nothing can move.
    pub fn run_until<F: FnMut(&Simulation) -> bool>(
        &mut self,
        mut stop: F,
    ) -> Result<RunStatus, RuntimeError> {
        if stop(self) {
            return Ok(RunStatus::Completed);
        }
        while self.replay_cursor < self.replay.len() {
            let entry = self.replay[self.replay_cursor];
            self.replay_cursor += 1;
            if self.asleep(entry.machine.process, entry.tick) {
                continue;
            }
            self.mem.advance_clock_to(entry.tick.saturating_sub(1));
            self.step(entry.machine)?;
            if stop(self) {
                return Ok(RunStatus::Completed);
            }
            if self.mem.clock() >= self.config.budget {
                return Ok(RunStatus::BudgetExhausted);
            }
        }
        loop {
            self.plan_round();
            let quota = self.quota();
            let mut progressed = false;
            for i in 0..self.round.len() {
                let m = self.round[i];
                for _ in 0..quota {
                    if self.asleep(m.process, self.mem.clock() + 1) {
                        break;
                    }
                    progressed |= self.step(m)?;
                    if stop(self) {
                        return Ok(RunStatus::Completed);
                    }
                    if self.mem.clock() >= self.config.budget {
                        return Ok(RunStatus::BudgetExhausted);
                    }
                }
            }
            if !progressed {
                match self.next_wakeup() {
                    Some(t) => self.mem.advance_clock_to(t - 1),
                    None => return Ok(RunStatus::Stuck),
                }
            }
        }
    }

    fn asleep(&self, p: ProcessId, t: Tick) -> bool {
        t < self.procs[p.index()].wake
    }

    fn plan_round(&mut self) {
        if self.round.is_empty() {
            for p in self.config.processes() {
                self.round.push(Machine { process: p, slot: Slot::Op });
                self.round.push(Machine { process: p, slot: Slot::Help });
            }
        }
        match self.config.policy {
            SchedulePolicy::RoundRobin => {}
            _ => self.round.shuffle(&mut self.rng),
        }
    }

    fn quota(&self) -> usize {
        match self.config.policy {
            SchedulePolicy::Bursty => {
                let per = super::config::default_window(self.config.n);
                (self.config.fairness_window / per).max(1) as usize
            }
            _ => 1,
        }
    }

    /// Earliest future tick at which an idle system can move again.
    fn next_wakeup(&self) -> Option<Tick> {
        let now = self.mem.clock();
        let mut best: Option<Tick> = None;
        let mut consider = |t: Tick| {
            if t > now + 1 {
                best = Some(best.map_or(t, |b| b.min(t)));
            }
        };
        for p in &self.procs {
            consider(p.wake);
            if let Some(d) = p.byz.as_ref().and_then(ByzantineDriver::next_due) {
                consider(d.max(p.wake));
            }
            if p.current.is_none() {
                if let Some(&idx) = p.queue.front() {
                    consider(self.entries[idx].at.max(p.wake));
                }
            }
        }
        best
    }

    /// Executes one step of machine `m`. Returns whether it produced events.
    fn step(&mut self, m: Machine) -> Result<bool, RuntimeError> {
        let before = self.mem.clock();
        if let Some(sel) = &mut self.selections {
            sel.push((before, m));
        }
        let i = m.process.index();
        let honest_op = match &self.procs[i].byz {
            None => true,
            Some(d) => d.honest_at(before + 1),
        };
        if m.slot == Slot::Op && honest_op {
            self.op_machine_step(i)?;
        } else {
            let p = &mut self.procs[i];
            let mut ctx = StepCtx::new(
                p.pid,
                &mut self.mem,
                None,
                &mut self.annotations,
                &mut self.violations,
            );
            match &mut p.byz {
                Some(d) => d.step(m.slot, &mut ctx, p.logic.as_mut(), self.protocol.as_ref())?,
                None => p.logic.help_step(&mut ctx)?,
            }
        }
        let produced = self.mem.clock() > before;
        if produced {
            self.schedule.push(ScheduleEntry { tick: before + 1, machine: m });
        }
        Ok(produced)
    }

    fn op_machine_step(&mut self, i: usize) -> Result<(), RuntimeError> {
        let p = &mut self.procs[i];
        match p.current {
            None => {
                let Some(&idx) = p.queue.front() else { return Ok(()) };
                let e = &self.entries[idx];
                let ready = e.at <= self.mem.clock() + 1
                    && e.after.iter().all(|d| self.states[*d].result.is_some());
                if !ready {
                    return Ok(());
                }
                p.queue.pop_front();
                let req: OpRequest = e.request();
                let tick = self.mem.next_tick();
                let key = OpKey { process: p.pid, invoked: tick };
                self.events.push(Event {
                    tick,
                    process: p.pid,
                    kind: EventKind::Invoke,
                    op: req.kind,
                    arg: req.arg,
                    result: None,
                });
                p.logic.invoke(&req);
                p.current = Some((idx, key));
                self.states[idx].key = Some(key);
            }
            Some((idx, key)) => {
                let mut ctx = StepCtx::new(
                    p.pid,
                    &mut self.mem,
                    Some(key),
                    &mut self.annotations,
                    &mut self.violations,
                );
                if let Some(result) = p.logic.op_step(&mut ctx)? {
                    let tick = self.mem.next_tick();
                    let e = &self.entries[idx];
                    self.events.push(Event {
                        tick,
                        process: p.pid,
                        kind: EventKind::Respond,
                        op: e.op,
                        arg: e.arg,
                        result: Some(result),
                    });
                    self.states[idx].result = Some((result, tick));
                    p.current = None;
                    if p.correct {
                        self.outstanding -= 1;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Builds a system, installs `protocol` and runs `workload` to completion.
pub fn run(
    config: SystemConfig,
    protocol: Box<dyn Protocol>,
    workload: &Workload,
    adversary: &AdversaryScript,
) -> Result<RunOutcome, RuntimeError> {
    let system = create_system(config)?;
    let mut sim = Simulation::new(system, protocol, workload, adversary)?;
    let status = sim.run()?;
    Ok(sim.into_outcome(status))
}
