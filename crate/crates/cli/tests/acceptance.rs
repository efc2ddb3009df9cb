//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use byzreg::adversary::preset_names;
use byzreg::histories::{
    byz_linearize_bruteforce, read_jsonl, to_jsonl_string, HistoryTrace, Outcome, Witness,
};
use byzreg::runtime::{OpKind, OpResult, ProcessId, RunStatus, TypeTag, DEFAULT_BUDGET};
use byzreg::tos::{run_attack, TosBackend};
use byzreg_cli::{execute, run_checks, sweep_reports, Check, RunReport, Scenario, Status};

const SWEEP_SEEDS: u64 = 500;
const MAX_SWEEP_OPS: usize = 12;
/// Largest correct-operation count handed to the brute-force oracle.
const BRUTE_FORCE_OPS: usize = 8;
const MIN_BRUTE_FORCE_TRACES: usize = 200;
const EQUIVOCATION_SEEDS: u64 = 500;
const RELAY_SEEDS: u64 = 1000;
const MIN_RELAY_FAILURES: usize = 1;
const SAVER_SEEDS: u64 = 200;
const ATTACK_SEEDS: u64 = 5;
const DETERMINISM_SEEDS: u64 = 20;

const REGISTERS: [TypeTag; 3] = [TypeTag::Verifiable, TypeTag::Authenticated, TypeTag::Sticky];

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn bundled(name: &str) -> Scenario {
    Scenario::load(&scenario_dir().join(format!("{name}.json"))).expect("bundled scenario loads")
}

fn random_scenario(tag: TypeTag, backend: Option<TosBackend>, n: usize, f: usize, adversary: &str, size: usize) -> Scenario {
    let backend = backend.map(|b| format!("\"backend\": \"{b}\",")).unwrap_or_default();
    let text = format!(
        r#"{{
            "version": 1,
            "name": "{tag}-n{n}-{adversary}-{size}",
            "register_type": "{tag}",
            {backend}
            "system": {{ "n": {n}, "f": {f} }},
            "adversary": {{ "preset": "{adversary}" }},
            "random_workload": {{ "size": {size} }},
            "checks": ["observations", "constructive"]
        }}"#
    );
    Scenario::from_json(&text).expect("generated scenario is valid")
}

/// Workload size for `seed`: spread over 4..=12 so that a good share of
/// runs stay within the brute-force bound.
fn size_for(seed: u64) -> usize {
    4 + (seed as usize % (MAX_SWEEP_OPS - 3))
}

struct Line {
    id: usize,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn report(lines: &mut Vec<Line>, id: usize, title: &'static str, pass: bool, detail: String, started: Instant) {
    let line = Line { id, title, pass, detail: format!("{detail} ({:.1}s)", started.elapsed().as_secs_f64()) };
    println!(
        "criterion {}: {} {} -- {}",
        line.id,
        if line.pass { "PASS" } else { "FAIL" },
        line.title,
        line.detail
    );
    lines.push(line);
}

fn correct_ops(trace: &HistoryTrace) -> usize {
    trace.restrict_correct().operations().map(|o| o.len()).unwrap_or(usize::MAX)
}

fn synthetic_count(r: &RunReport) -> usize {
    r.checks
        .iter()
        .filter(|c| c.check == Check::Constructive)
        .flat_map(|c| &c.verdicts)
        .map(|v| match &v.witness {
            Witness::Linearization(ops) => ops.iter().filter(|o| o.synthetic).count(),
            _ => 0,
        })
        .sum()
}

fn constructive_outcome(r: &RunReport) -> Option<Outcome> {
    r.checks.iter().find(|c| c.check == Check::Constructive)?.verdicts.first().map(|v| v.outcome)
}

/// Criteria 1 to 3 share one sweep over every register type, size and preset.
fn register_sweeps(lines: &mut Vec<Line>) {
    let started = Instant::now();
    let mut runs = 0usize;
    let mut unfinished = Vec::new();
    let mut max_tick = 0;
    let mut observation_failures: BTreeMap<String, usize> = BTreeMap::new();
    let mut invariant_failures = 0usize;
    let mut constructive_failures = Vec::new();
    let (mut compared, mut agreed) = (0usize, 0usize);
    let mut disagreements = Vec::new();

    for tag in REGISTERS {
        for n in [4usize, 7] {
            let f = (n - 1) / 3;
            for name in preset_names() {
                let results: Vec<(RunReport, HistoryTrace)> = (0..SWEEP_SEEDS)
                    .map(|seed| {
                        let mut s = random_scenario(tag, None, n, f, name, size_for(seed));
                        s.system.seed = seed;
                        execute(&s).expect("run completes without a runtime error")
                    })
                    .collect();
                for (r, trace) in results {
                    runs += 1;
                    max_tick = max_tick.max(r.final_tick);
                    if r.run != RunStatus::Completed {
                        unfinished.push(format!("{tag}/n{n}/{name}/seed{}", r.seed));
                        continue;
                    }
                    invariant_failures += usize::from(!r.invariant_violations.is_empty());
                    for c in r.checks.iter().filter(|c| c.check == Check::Observations) {
                        for v in c.verdicts.iter().filter(|v| !v.passed()) {
                            *observation_failures.entry(v.check.clone()).or_default() += 1;
                        }
                        if let Some(why) = &c.refused {
                            *observation_failures.entry(format!("refused: {why}")).or_default() += 1;
                        }
                    }
                    let outcome = constructive_outcome(&r);
                    if outcome != Some(Outcome::Pass) {
                        constructive_failures.push(format!("{tag}/n{n}/{name}/seed{}", r.seed));
                    }
                    if correct_ops(&trace) <= BRUTE_FORCE_OPS {
                        compared += 1;
                        let max_synth = synthetic_count(&r).max(2);
                        let brute = byz_linearize_bruteforce(&trace, max_synth).map(|v| v.outcome).ok();
                        if brute.is_some() && brute == outcome {
                            agreed += 1;
                        } else {
                            disagreements.push(format!("{tag}/n{n}/{name}/seed{}", r.seed));
                        }
                    }
                }
            }
        }
    }

    report(
        lines,
        1,
        "termination of every correct operation within the tick budget",
        unfinished.is_empty(),
        format!(
            "{runs} runs, {} unfinished {:?}, max tick {max_tick} of {DEFAULT_BUDGET}",
            unfinished.len(),
            unfinished.iter().take(5).collect::<Vec<_>>()
        ),
        started,
    );
    report(
        lines,
        2,
        "observation suite restricted to correct processes",
        observation_failures.is_empty() && invariant_failures == 0,
        format!("{runs} runs, failures {observation_failures:?}, loop invariant violations {invariant_failures}"),
        started,
    );
    report(
        lines,
        3,
        "byzantine linearizability, constructive and brute force agree",
        constructive_failures.is_empty() && compared >= MIN_BRUTE_FORCE_TRACES && agreed == compared,
        format!(
            "constructive failures {} {:?}; brute force agreed on {agreed}/{compared} traces (need >= {MIN_BRUTE_FORCE_TRACES}) {:?}",
            constructive_failures.len(),
            constructive_failures.iter().take(5).collect::<Vec<_>>(),
            disagreements.iter().take(5).collect::<Vec<_>>()
        ),
        started,
    );
}

fn sticky_equivocation(lines: &mut Vec<Line>) {
    let started = Instant::now();
    let s = random_scenario(TypeTag::Sticky, None, 4, 1, "byz_writer_equivocate", 10);
    let results = sweep_reports(&s, 0..EQUIVOCATION_SEEDS).expect("sweep runs");
    let mut failures = Vec::new();
    let mut unfinished = 0;
    let mut values_read: BTreeMap<u64, usize> = BTreeMap::new();
    for (r, trace) in &results {
        unfinished += usize::from(r.run != RunStatus::Completed);
        let uniqueness = r
            .checks
            .iter()
            .flat_map(|c| &c.verdicts)
            .find(|v| v.check == "uniqueness")
            .map(|v| v.passed());
        if uniqueness != Some(true) {
            failures.push(r.seed);
        }
        for op in trace.restrict_correct().operations().expect("well formed") {
            if let Some(OpResult::Read(Some(v))) = op.result {
                *values_read.entry(v).or_default() += 1;
            }
        }
    }
    report(
        lines,
        4,
        "sticky uniqueness with an equivocating writer",
        failures.is_empty() && unfinished == 0,
        format!(
            "{} seeds, {} uniqueness failures, {unfinished} unfinished, non-bottom reads by value {values_read:?}",
            results.len(),
            failures.len()
        ),
        started,
    );
}

fn relay_negative_control(lines: &mut Vec<Line>) {
    let started = Instant::now();
    let flawed = bundled("flawed_relay");
    let mut faithful = flawed.clone();
    faithful.verify_variant = Default::default();
    let count = |s: &Scenario| -> (usize, usize, Vec<(RunReport, HistoryTrace)>) {
        let results = sweep_reports(s, 0..RELAY_SEEDS).expect("sweep runs");
        let relay_failures = results
            .iter()
            .filter(|(r, _)| r.checks.iter().flat_map(|c| &c.verdicts).any(|v| v.check == "relay" && !v.passed()))
            .count();
        let unfinished = results.iter().filter(|(r, _)| r.run != RunStatus::Completed).count();
        (relay_failures, unfinished, results)
    };
    let (flawed_failures, _, flawed_results) = count(&flawed);
    let (faithful_failures, faithful_unfinished, _) = count(&faithful);
    // Each flagged trace must also be rejected by both linearizability oracles.
    let oracle_agreement = flawed_results
        .iter()
        .filter(|(r, _)| r.status == Status::Fail)
        .all(|(r, trace)| {
            constructive_outcome(r) == Some(Outcome::Fail)
                && byz_linearize_bruteforce(trace, 2).map(|v| v.outcome) == Ok(Outcome::Fail)
        });
    report(
        lines,
        5,
        "flawed verify exhibits a relay violation that the checks flag",
        flawed_failures >= MIN_RELAY_FAILURES && faithful_failures == 0 && faithful_unfinished == 0 && oracle_agreement,
        format!(
            "flawed: {flawed_failures}/{RELAY_SEEDS} seeds with relay failures (need >= {MIN_RELAY_FAILURES}); \
             faithful control: {faithful_failures} failures, {faithful_unfinished} unfinished; \
             linearizability oracles reject every flagged trace: {oracle_agreement}"
        ),
        started,
    );
}

fn impossibility_replay(lines: &mut Vec<Line>) {
    let started = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;
    let first = run_attack(TosBackend::NaiveQuorum, 3, 1, 0).expect("attack runs");
    for seed in 0..ATTACK_SEEDS {
        let r = run_attack(TosBackend::NaiveQuorum, 3, 1, seed).expect("attack runs");
        let h3 = r.phases.iter().find(|p| p.name == "h3");
        let setter_invoked = h3.is_some_and(|p| {
            p.trace.events.iter().any(|e| e.process == ProcessId::WRITER && e.op == OpKind::Set)
        });
        let setter_correct = h3.is_some_and(|p| p.trace.meta.correct.contains(&ProcessId::WRITER));
        let good = r.applicable
            && r.violation
            && r.h3_test_prime == Some(1)
            && r.replay_faithful
            && setter_correct
            && !setter_invoked;
        ok &= good;
        if !good {
            notes.push(format!("seed {seed}: {:?}", r.inconclusive));
        }
    }
    let again = run_attack(TosBackend::NaiveQuorum, 3, 1, 0).expect("attack runs");
    let deterministic = serde_json::to_string(&first).unwrap() == serde_json::to_string(&again).unwrap();
    let control = run_attack(TosBackend::Verifiable, 4, 1, 0).expect("attack runs");
    let scenario = bundled("theorem16_attack");
    let from_file = byzreg_cli::execute_attack(&scenario).expect("attack scenario runs");
    ok &= deterministic && !control.applicable && !control.violation && from_file.violation;
    report(
        lines,
        6,
        "three-history attack defeats the naive backend and is inapplicable for n > 3f",
        ok,
        format!(
            "naive n=3 f=1: violation on {ATTACK_SEEDS} seeds via {:?}, deterministic {deterministic}; \
             verifiable n=4 f=1: applicable={} violation={}; bundled scenario violation={} {notes:?}",
            first.violated, control.applicable, control.violation, from_file.violation
        ),
        started,
    );
}

fn test_or_set_saver(lines: &mut Vec<Line>) {
    let started = Instant::now();
    let mut runs = 0;
    let mut failures: BTreeMap<String, usize> = BTreeMap::new();
    let mut unfinished = 0;
    let mut ones = 0;
    for backend in TosBackend::register_backends() {
        for name in preset_names() {
            let s = random_scenario(TypeTag::TestOrSet, Some(backend), 4, 1, name, 6);
            for (r, trace) in sweep_reports(&s, 0..SAVER_SEEDS).expect("sweep runs") {
                runs += 1;
                unfinished += usize::from(r.run != RunStatus::Completed);
                let saver = byzreg::histories::check_saver(&trace).expect("well formed");
                for v in saver.iter().filter(|v| !v.passed()) {
                    *failures.entry(format!("{backend}/{name}/{}", v.check)).or_default() += 1;
                }
                ones += trace
                    .restrict_correct()
                    .operations()
                    .expect("well formed")
                    .iter()
                    .filter(|o| o.result == Some(OpResult::Bit(1)))
                    .count();
            }
        }
    }
    report(
        lines,
        7,
        "test-or-set saver properties on every register backend",
        failures.is_empty() && unfinished == 0,
        format!("{runs} runs over 3 backends, failures {failures:?}, {unfinished} unfinished, {ones} tests returned 1"),
        started,
    );
}

fn determinism(lines: &mut Vec<Line>) {
    let started = Instant::now();
    let mut scenarios = vec![bundled("vr_basic"), bundled("flawed_relay")];
    for tag in REGISTERS {
        scenarios.push(random_scenario(tag, None, 7, 2, "byz_writer_equivocate", 10));
        scenarios.push(random_scenario(tag, None, 4, 1, "stale_responder", 10));
    }
    scenarios.push(random_scenario(TypeTag::TestOrSet, Some(TosBackend::Sticky), 4, 1, "lying_witness", 6));
    let mut compared = 0;
    let mut mismatches = Vec::new();
    let mut round_trip_mismatches = Vec::new();
    for s in &scenarios {
        for seed in 0..DETERMINISM_SEEDS {
            let mut one = s.clone();
            one.system.seed = seed;
            let (r1, t1) = execute(&one).expect("runs");
            let (r2, t2) = execute(&one).expect("runs");
            let (j1, j2) = (to_jsonl_string(&t1), to_jsonl_string(&t2));
            compared += 1;
            if j1 != j2 || r1 != r2 {
                mismatches.push(format!("{}/seed{seed}", s.name));
            }
            let back = read_jsonl(j1.as_bytes()).expect("trace parses");
            if run_checks(&back, &one.checks, one.max_synth) != r1.checks {
                round_trip_mismatches.push(format!("{}/seed{seed}", s.name));
            }
        }
    }
    report(
        lines,
        8,
        "identical seed and configuration give byte-identical traces",
        mismatches.is_empty() && round_trip_mismatches.is_empty(),
        format!(
            "{compared} reruns, {} byte mismatches, {} verdict changes after JSONL round trip",
            mismatches.len(),
            round_trip_mismatches.len()
        ),
        started,
    );
}

fn main() {
    let mut lines = Vec::new();
    register_sweeps(&mut lines);
    sticky_equivocation(&mut lines);
    relay_negative_control(&mut lines);
    impossibility_replay(&mut lines);
    test_or_set_saver(&mut lines);
    determinism(&mut lines);
    let failed: Vec<usize> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    println!("acceptance: {}/{} criteria pass", lines.len() - failed.len(), lines.len());
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
