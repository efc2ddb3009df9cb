use std::collections::BTreeMap;

use proptest::prelude::*;

use byzreg::adversary::{preset, preset_names};
use byzreg::histories::{
    byz_linearize_bruteforce, byz_linearize_constructive, check_observations, check_sequential, read_jsonl,
    to_jsonl_string, HistoryTrace, Witness,
};
use byzreg::registers::{register_protocol, VerifyVariant, V0};
use byzreg::runtime::{
    create_system, AccessKind, CellName, Machine, ProcessId, Protocol, RunOutcome, RunStatus, SchedulePolicy,
    Simulation, Slot, SystemConfig, Tick, TypeTag, Value,
};
use byzreg::tos::{tos_protocol, TosBackend};
use byzreg::workloads::random_workload;

#[derive(Clone, Debug)]
struct Case {
    tag: TypeTag,
    n: usize,
    preset: &'static str,
    seed: u64,
    size: usize,
    policy: SchedulePolicy,
}

fn case() -> impl Strategy<Value = Case> {
    case_of(vec![TypeTag::Verifiable, TypeTag::Authenticated, TypeTag::Sticky, TypeTag::TestOrSet])
}

fn case_of(tags: Vec<TypeTag>) -> impl Strategy<Value = Case> {
    (
        prop::sample::select(tags),
        prop::sample::select(vec![4usize, 7]),
        prop::sample::select(preset_names().to_vec()),
        any::<u64>(),
        1usize..=12,
        prop::sample::select(vec![SchedulePolicy::Shuffled, SchedulePolicy::RoundRobin, SchedulePolicy::Bursty]),
    )
        .prop_map(|(tag, n, preset, seed, size, policy)| Case { tag, n, preset, seed, size, policy })
}

fn protocol(tag: TypeTag) -> Box<dyn Protocol> {
    match tag {
        TypeTag::TestOrSet => tos_protocol(TosBackend::Sticky),
        t => register_protocol(t, V0, VerifyVariant::Faithful).unwrap(),
    }
}

fn config(c: &Case) -> (SystemConfig, byzreg::adversary::AdversaryScript) {
    let f = (c.n - 1) / 3;
    let preset_tag = if c.tag == TypeTag::TestOrSet { TypeTag::Sticky } else { c.tag };
    let p = preset(c.preset, preset_tag, c.n, f).unwrap();
    let mut config = SystemConfig::new(c.n, f, c.seed).with_byzantine(p.byzantine.iter().copied());
    config.policy = c.policy.clone();
    (config, p.script)
}

fn simulate(c: &Case, record: bool) -> (RunOutcome, Vec<(Tick, Machine)>) {
    let (config, script) = config(c);
    let w = random_workload(c.tag, c.n, c.seed, c.size);
    let mut sim = Simulation::new(create_system(config).unwrap(), protocol(c.tag), &w, &script).unwrap();
    if record {
        sim.record_selections();
    }
    let status = sim.run().unwrap();
    let selections = sim.selections().to_vec();
    (sim.into_outcome(status), selections)
}

/// The `k`-th operation of each process in `trace`, keyed by (process, k).
fn per_process(trace: &HistoryTrace) -> BTreeMap<(ProcessId, usize), byzreg::histories::Operation> {
    let mut count: BTreeMap<ProcessId, usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for op in trace.restrict_correct().operations().unwrap() {
        let k = count.entry(op.process).or_default();
        out.insert((op.process, *k), op);
        *k += 1;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn runs_are_deterministic(c in case()) {
        let (a, _) = simulate(&c, false);
        let (b, _) = simulate(&c, false);
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(to_jsonl_string(&a.trace), to_jsonl_string(&b.trace));
        prop_assert_eq!(a.access_log, b.access_log);
        prop_assert_eq!(a.schedule, b.schedule);
    }

    #[test]
    fn writes_respect_ownership_and_ticks_are_unique(c in case()) {
        let (out, _) = simulate(&c, false);
        let mut last = 0;
        for a in &out.access_log {
            prop_assert!(a.tick > last, "tick {} repeats or goes back", a.tick);
            last = a.tick;
            if a.kind == AccessKind::Write {
                prop_assert_eq!(a.cell.owner(), a.process, "{} wrote {}", a.process, a.cell);
            }
        }
        let mut event_ticks: Vec<Tick> = out.trace.events.iter().map(|e| e.tick).collect();
        event_ticks.extend(out.access_log.iter().map(|a| a.tick));
        let before = event_ticks.len();
        event_ticks.sort_unstable();
        event_ticks.dedup();
        prop_assert_eq!(before, event_ticks.len());
    }

    #[test]
    fn correct_machines_are_scheduled_within_the_window(c in case()) {
        let (out, selections) = simulate(&c, true);
        let (config, _) = config(&c);
        let window = config.fairness_window;
        for p in config.correct.iter() {
            for slot in [Slot::Op, Slot::Help] {
                let m = Machine { process: *p, slot };
                let mut prev: Tick = 0;
                for (t, _) in selections.iter().filter(|(_, x)| *x == m) {
                    prop_assert!(t - prev <= window, "{:?} idle from {} to {}", m, prev, t);
                    prev = *t;
                }
                prop_assert!(out.final_tick - prev <= window, "{:?} idle from {} to the end", m, prev);
            }
        }
    }

    #[test]
    fn correct_witness_sets_only_grow(c in case_of(vec![TypeTag::Verifiable, TypeTag::Authenticated])) {
        let (out, _) = simulate(&c, false);
        let correct = &out.trace.meta.correct;
        let mut current: BTreeMap<CellName, Value> = BTreeMap::new();
        for a in out.access_log.iter().filter(|a| a.kind == AccessKind::Write && correct.contains(&a.process)) {
            let CellName::Witness(_) = a.cell else { continue };
            let v = a.value.clone().unwrap();
            if let Some(prev) = current.get(&a.cell) {
                let grows = match (prev, &v) {
                    (Value::Set(x), Value::Set(y)) => x.is_subset(y),
                    (Value::Pairs(x), Value::Pairs(y)) => x.is_subset(y),
                    _ => false,
                };
                prop_assert!(grows, "{} went from {:?} to {:?}", a.cell, prev, v);
            }
            current.insert(a.cell, v);
        }
    }

    #[test]
    fn sticky_registers_change_once(c in case_of(vec![TypeTag::Sticky])) {
        let (out, _) = simulate(&c, false);
        let correct = &out.trace.meta.correct;
        let mut first: BTreeMap<CellName, Value> = BTreeMap::new();
        for a in out.access_log.iter().filter(|a| a.kind == AccessKind::Write && correct.contains(&a.process)) {
            if !matches!(a.cell, CellName::Echo(_) | CellName::Witness(_)) {
                continue;
            }
            let v = a.value.clone().unwrap();
            prop_assert_ne!(&v, &Value::Bottom);
            let seen = first.entry(a.cell).or_insert_with(|| v.clone());
            prop_assert_eq!(&*seen, &v, "{} changed", a.cell);
        }
    }

    #[test]
    fn jsonl_round_trip(c in case()) {
        let (out, _) = simulate(&c, false);
        let text = to_jsonl_string(&out.trace);
        let back = read_jsonl(text.as_bytes()).unwrap();
        prop_assert_eq!(&back, &out.trace);
        prop_assert_eq!(to_jsonl_string(&back), text);
        prop_assert_eq!(byz_linearize_constructive(&back).unwrap(), byz_linearize_constructive(&out.trace).unwrap());
    }

    #[test]
    fn linearizable_runs_pass_observations(c in case()) {
        let (out, _) = simulate(&c, false);
        prop_assert_eq!(out.status, RunStatus::Completed);
        prop_assert!(out.violations.is_empty(), "{:?}", out.violations);
        let lin = byz_linearize_constructive(&out.trace).unwrap();
        if lin.passed() {
            for v in check_observations(&out.trace).unwrap() {
                prop_assert!(v.passed(), "{:?}", v);
            }
        }
    }

    #[test]
    fn linearizations_are_legal_and_respect_real_time(c in case()) {
        let (out, _) = simulate(&c, false);
        let v = byz_linearize_constructive(&out.trace).unwrap();
        let Witness::Linearization(seq) = &v.witness else {
            return Err(TestCaseError::fail(format!("{v:?}")));
        };
        prop_assert!(check_sequential(&out.trace.meta, seq).passed());
        let ops = per_process(&out.trace);
        let mut count: BTreeMap<ProcessId, usize> = BTreeMap::new();
        let placed: Vec<_> = seq
            .iter()
            .filter(|o| !o.synthetic)
            .map(|o| {
                let k = count.entry(o.process).or_default();
                *k += 1;
                &ops[&(o.process, *k - 1)]
            })
            .collect();
        for (i, a) in placed.iter().enumerate() {
            for b in &placed[..i] {
                prop_assert!(!a.precedes(b), "{:?} placed after {:?}", b, a);
            }
        }
    }

    #[test]
    fn oracles_agree_on_small_traces(c in case()) {
        let (out, _) = simulate(&c, false);
        let correct_ops = out.trace.restrict_correct().operations().unwrap().len();
        prop_assume!(correct_ops <= 8);
        let constructive = byz_linearize_constructive(&out.trace).unwrap();
        // Enough added operations to reproduce the constructive witness.
        let synthetic = match &constructive.witness {
            Witness::Linearization(seq) => seq.iter().filter(|o| o.synthetic).count(),
            _ => 0,
        };
        let brute = byz_linearize_bruteforce(&out.trace, synthetic.max(2)).unwrap();
        prop_assert_eq!(constructive.passed(), brute.passed());
    }
}
