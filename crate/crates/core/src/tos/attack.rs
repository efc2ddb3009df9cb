//! Three-history attack on test-or-set when `n <= 3f`.
//!
//! Processes split into the setter `s`, testers `a` and `b`, and groups
//! `q1`, `q2`, `q3` of at most `f - 1` processes each.
//!
//! * H1: `b` and `q3` are silent. `s` sets, then `a` tests and sees 1.
//! * H2: `s` and `q1` replay their H1 writes, reset their registers and go
//!   silent. `b` and `q3` then wake up and `b` tests.
//! * H3: `a` and `q2` replay their H2 writes. `s` and `q1` are correct but
//!   asleep, so `b` cannot tell H3 from H2. If its test returns 1, a correct
//!   setter that never set has been forged.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::adversary::{AdversaryScript, Directive};
use crate::histories::{check_saver, HistoryTrace, Verdict};
use crate::runtime::{
    create_system, Access, AccessKind, OpRequest, OpResult, ProcessId, RunStatus, RuntimeError,
    SchedulePolicy, ScheduleEntry, Simulation, SystemConfig, Tick, Value, WorkloadEntry,
};

use super::{tos_protocol, TosBackend};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub setter: ProcessId,
    pub a: ProcessId,
    pub b: ProcessId,
    pub q1: Vec<ProcessId>,
    pub q2: Vec<ProcessId>,
    pub q3: Vec<ProcessId>,
}

impl Partition {
    fn group(head: ProcessId, rest: &[ProcessId]) -> BTreeSet<ProcessId> {
        std::iter::once(head).chain(rest.iter().copied()).collect()
    }
    pub fn s_q1(&self) -> BTreeSet<ProcessId> {
        Self::group(self.setter, &self.q1)
    }
    pub fn a_q2(&self) -> BTreeSet<ProcessId> {
        Self::group(self.a, &self.q2)
    }
    pub fn b_q3(&self) -> BTreeSet<ProcessId> {
        Self::group(self.b, &self.q3)
    }
}

/// The partition used by the attack, or `None` when `n > 3f` leaves some
/// group larger than `f - 1`.
pub fn attack_partition(n: usize, f: usize) -> Option<Partition> {
    if n < 3 || f == 0 || n > 3 * f {
        return None;
    }
    let mut qs: [Vec<ProcessId>; 3] = Default::default();
    for (i, p) in (4..=n as u32).map(ProcessId).enumerate() {
        qs[i % 3].push(p);
    }
    let [q1, q2, q3] = qs;
    Some(Partition { setter: ProcessId(1), a: ProcessId(2), b: ProcessId(3), q1, q2, q3 })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub name: String,
    pub byzantine: Vec<ProcessId>,
    pub status: RunStatus,
    pub trace: HistoryTrace,
    pub saver: Vec<Verdict>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AttackReport {
    pub backend: TosBackend,
    pub n: usize,
    pub f: usize,
    pub seed: u64,
    pub applicable: bool,
    pub partition: Option<Partition>,
    /// Why the attack could not be completed, if it could not.
    pub inconclusive: Option<String>,
    pub ticks: BTreeMap<String, Tick>,
    pub h1_test: Option<u8>,
    pub h2_test_prime: Option<u8>,
    pub h3_test_prime: Option<u8>,
    /// H2 matches H1 for `a` up to its test, and H3 matches H2 for `b` and
    /// `q3` up to the second test.
    pub replay_faithful: bool,
    pub violation: bool,
    pub violated: Option<String>,
    /// Register contents at the named points.
    pub dumps: BTreeMap<String, BTreeMap<String, Value>>,
    pub phases: Vec<PhaseSummary>,
}

struct Phase {
    sim: Simulation,
}

impl Phase {
    fn new(
        backend: TosBackend,
        n: usize,
        f: usize,
        seed: u64,
        byzantine: &BTreeSet<ProcessId>,
        adversary: AdversaryScript,
        replay: Vec<ScheduleEntry>,
    ) -> Result<Self, RuntimeError> {
        let mut config = SystemConfig::new(n, f, seed).with_byzantine(byzantine.iter().copied());
        if !replay.is_empty() {
            config.policy = SchedulePolicy::Replay(replay);
        }
        let system = create_system(config)?;
        let sim = Simulation::new(system, tos_protocol(backend), &Default::default(), &adversary)?;
        Ok(Phase { sim })
    }

    fn submit(&mut self, p: ProcessId, req: OpRequest, at: Tick) -> Result<usize, RuntimeError> {
        Ok(self.sim.submit(WorkloadEntry::new(p, req).at(at))?)
    }

    fn finish(&mut self, entry: usize) -> Result<Option<(OpResult, Tick, Tick)>, RuntimeError> {
        let status = self.sim.run_until(|s| s.result_of(entry).is_some())?;
        if status != RunStatus::Completed {
            return Ok(None);
        }
        let (r, resp) = self.sim.result_of(entry).expect("completed");
        let inv = self.sim.key_of(entry).expect("invoked").invoked;
        Ok(Some((r, inv, resp)))
    }

    fn dump(&self) -> BTreeMap<String, Value> {
        self.sim.memory().snapshot().into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    fn writes_by(&self, group: &BTreeSet<ProcessId>, upto: Tick) -> BTreeMap<ProcessId, Vec<Access>> {
        let mut out: BTreeMap<ProcessId, Vec<Access>> = BTreeMap::new();
        for a in self.sim.memory().access_log() {
            if a.kind == AccessKind::Write && a.tick <= upto && group.contains(&a.process) {
                out.entry(a.process).or_default().push(a.clone());
            }
        }
        out
    }

    fn summary(&self, name: &str, status: RunStatus) -> PhaseSummary {
        let trace = self.sim.trace();
        let saver = check_saver(&trace).unwrap_or_default();
        PhaseSummary {
            name: name.into(),
            byzantine: self.sim.config().byzantine().into_iter().collect(),
            status,
            trace,
            saver,
        }
    }
}

fn bit(r: OpResult) -> Option<u8> {
    match r {
        OpResult::Bit(b) => Some(b),
        _ => None,
    }
}

fn events_of(trace: &HistoryTrace, group: &BTreeSet<ProcessId>, upto: Tick) -> Vec<crate::histories::Event> {
    trace.events.iter().filter(|e| group.contains(&e.process) && e.tick <= upto).cloned().collect()
}

/// Runs H1, H2 and H3 against `backend` and reports whether H3 violates
/// the test-or-set guarantees.
pub fn run_attack(backend: TosBackend, n: usize, f: usize, seed: u64) -> Result<AttackReport, RuntimeError> {
    let mut report = AttackReport {
        backend,
        n,
        f,
        seed,
        applicable: false,
        partition: None,
        inconclusive: None,
        ticks: BTreeMap::new(),
        h1_test: None,
        h2_test_prime: None,
        h3_test_prime: None,
        replay_faithful: false,
        violation: false,
        violated: None,
        dumps: BTreeMap::new(),
        phases: Vec::new(),
    };
    let Some(part) = attack_partition(n, f) else {
        report.inconclusive = Some(format!("no partition into groups of at most f-1 exists for n={n}, f={f}"));
        return Ok(report);
    };
    report.applicable = true;
    report.partition = Some(part.clone());
    let (s_q1, a_q2, b_q3) = (part.s_q1(), part.a_q2(), part.b_q3());

    // H1: b and q3 silent.
    let mut h1 = Phase::new(backend, n, f, seed, &b_q3, AdversaryScript::none(), Vec::new())?;
    let set = h1.submit(part.setter, OpRequest::set(), 0)?;
    let Some((_, t1, t2)) = h1.finish(set)? else {
        report.inconclusive = Some("Set did not complete in H1".into());
        return Ok(report);
    };
    report.dumps.insert("h1_t2".into(), h1.dump());
    let test = h1.submit(part.a, OpRequest::test(), h1.sim.clock() + 1)?;
    let Some((r, t3, t4)) = h1.finish(test)? else {
        report.inconclusive = Some("Test did not complete in H1".into());
        return Ok(report);
    };
    report.h1_test = bit(r);
    report.dumps.insert("h1_t4".into(), h1.dump());
    report.ticks.extend([("t1".into(), t1), ("t2".into(), t2), ("t3".into(), t3), ("t4".into(), t4)]);
    report.phases.push(h1.summary("h1", RunStatus::Completed));
    if report.h1_test != Some(1) {
        report.inconclusive = Some("Test returned 0 in H1".into());
        return Ok(report);
    }

    // H2: s and q1 replay H1, reset, then stay silent. b and q3 sleep until t6.
    let mut script = AdversaryScript::none();
    for (p, writes) in h1.writes_by(&s_q1, t4) {
        script = script.with(p, vec![Directive::ReplayFromTrace { writes }]);
    }
    for p in &s_q1 {
        script = script.with(*p, vec![Directive::ResetOwnRegistersAtTick { tick: t4 + 1 }]);
    }
    let h1_schedule: Vec<ScheduleEntry> =
        h1.sim.schedule().iter().copied().filter(|e| e.tick <= t4).collect();
    let mut h2 = Phase::new(backend, n, f, seed, &s_q1, script, h1_schedule)?;
    for p in &b_q3 {
        h2.sim.sleep_until(*p, Tick::MAX);
    }
    let test_a = h2.submit(part.a, OpRequest::test(), t3)?;
    let Some((r2, t3b, t4b)) = h2.finish(test_a)? else {
        report.inconclusive = Some("replayed Test did not complete in H2".into());
        return Ok(report);
    };
    let mut faithful = bit(r2) == report.h1_test && t3b == t3 && t4b == t4;
    let status = h2.sim.run_until(|s| s_q1.iter().all(|p| s.script_exhausted(*p)))?;
    if status != RunStatus::Completed {
        report.inconclusive = Some("reset did not complete in H2".into());
        return Ok(report);
    }
    let t5 = h2.sim.clock();
    report.dumps.insert("h2_t5".into(), h2.dump());
    let t6 = t5 + 1;
    for p in &b_q3 {
        h2.sim.sleep_until(*p, t6);
    }
    let test_b = h2.submit(part.b, OpRequest::test(), t6)?;
    let Some((rb, t6b, t7)) = h2.finish(test_b)? else {
        report.inconclusive = Some("Test' did not complete in H2".into());
        return Ok(report);
    };
    report.h2_test_prime = bit(rb);
    report.dumps.insert("h2_t7".into(), h2.dump());
    report.ticks.extend([("t5".into(), t5), ("t6".into(), t6b), ("t7".into(), t7)]);
    report.phases.push(h2.summary("h2", RunStatus::Completed));

    // H3: a and q2 replay H2. s and q1 are correct but asleep past t7.
    let mut script = AdversaryScript::none();
    for (p, writes) in h2.writes_by(&a_q2, t7) {
        script = script.with(p, vec![Directive::ReplayFromTrace { writes }]);
    }
    let h2_schedule: Vec<ScheduleEntry> =
        h2.sim.schedule().iter().copied().filter(|e| e.tick <= t7).collect();
    let mut h3 = Phase::new(backend, n, f, seed, &a_q2, script, h2_schedule)?;
    for p in &s_q1 {
        h3.sim.sleep_until(*p, t7 + 1);
    }
    for p in &b_q3 {
        h3.sim.sleep_until(*p, t6);
    }
    let test_b3 = h3.submit(part.b, OpRequest::test(), t6)?;
    let Some((r3, t6c, t7c)) = h3.finish(test_b3)? else {
        report.inconclusive = Some("Test' did not complete in H3".into());
        return Ok(report);
    };
    report.h3_test_prime = bit(r3);
    report.dumps.insert("h3_t7".into(), h3.dump());
    faithful &= t6c == t6b && t7c == t7 && report.h3_test_prime == report.h2_test_prime;
    faithful &= h2.writes_by(&a_q2, t7) == h3.writes_by(&a_q2, t7);
    faithful &= events_of(&h2.sim.trace(), &b_q3, t7) == events_of(&h3.sim.trace(), &b_q3, t7);
    report.replay_faithful = faithful;

    let h3_summary = h3.summary("h3", RunStatus::Completed);
    if let Some(v) = h3_summary.saver.iter().find(|v| !v.passed()) {
        report.violation = true;
        report.violated = Some(v.check.clone());
    }
    report.phases.push(h3_summary);
    Ok(report)
}
