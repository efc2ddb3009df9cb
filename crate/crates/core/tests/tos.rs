use byzreg::adversary::AdversaryScript;
use byzreg::histories::check_saver;
use byzreg::runtime::{
    create_system, CellName, OpRequest, OpResult, ProcessId, RunStatus, Simulation, SystemConfig, Value, Workload,
    WorkloadEntry,
};
use byzreg::tos::{attack_partition, naive_quorum_tos, run_attack, tos_protocol, TosBackend, SET_VALUE};

fn run_tos(
    backend: TosBackend,
    n: usize,
    f: usize,
    seed: u64,
    w: &Workload,
) -> (RunStatus, Vec<Option<OpResult>>, std::collections::BTreeMap<CellName, Value>, byzreg::histories::HistoryTrace) {
    let system = create_system(SystemConfig::new(n, f, seed)).unwrap();
    let mut sim = Simulation::new(system, tos_protocol(backend), w, &AdversaryScript::none()).unwrap();
    let status = sim.run().unwrap();
    let results = (0..w.entries.len()).map(|i| sim.result_of(i).map(|(r, _)| r)).collect();
    (status, results, sim.memory().snapshot(), sim.trace())
}

fn set_then_tests(testers: &[u32]) -> Workload {
    let mut w = Workload::default();
    let set = w.push(WorkloadEntry::new(ProcessId(1), OpRequest::set()));
    for t in testers {
        w.push(WorkloadEntry::new(ProcessId(*t), OpRequest::test()).after([set]));
    }
    w
}

#[test]
fn set_runs_the_backing_operations() {
    let w = set_then_tests(&[]);
    let (_, results, cells, _) = run_tos(TosBackend::Verifiable, 4, 1, 0, &w);
    assert_eq!(results[0], Some(OpResult::Done));
    assert_eq!(cells[&CellName::Star], Value::Scalar(SET_VALUE));
    assert!(cells[&CellName::Witness(ProcessId(1))].set_contains(SET_VALUE));

    let (_, _, cells, _) = run_tos(TosBackend::Authenticated, 4, 1, 0, &w);
    assert_eq!(cells[&CellName::Witness(ProcessId(1))], Value::Pairs([(0, 0), (1, SET_VALUE)].into_iter().collect()));

    let (_, _, cells, _) = run_tos(TosBackend::Sticky, 4, 1, 0, &w);
    assert_eq!(cells[&CellName::Echo(ProcessId(1))], Value::Scalar(SET_VALUE));
}

#[test]
fn tests_see_a_completed_set() {
    for backend in TosBackend::ALL {
        let (n, f) = if backend == TosBackend::NaiveQuorum { (3, 1) } else { (4, 1) };
        let testers: Vec<u32> = (2..=n as u32).collect();
        for seed in 0..10 {
            let (status, results, _, trace) = run_tos(backend, n, f, seed, &set_then_tests(&testers));
            assert_eq!(status, RunStatus::Completed);
            assert!(results[1..].iter().all(|r| *r == Some(OpResult::Bit(1))), "{backend} {results:?}");
            assert!(check_saver(&trace).unwrap().iter().all(|v| v.passed()));
        }
    }
}

#[test]
fn tests_without_set_return_zero() {
    for backend in TosBackend::ALL {
        let mut w = Workload::default();
        w.push(WorkloadEntry::new(ProcessId(2), OpRequest::test()));
        w.push(WorkloadEntry::new(ProcessId(3), OpRequest::test()));
        let (n, f) = if backend == TosBackend::NaiveQuorum { (3, 1) } else { (4, 1) };
        let (_, results, _, _) = run_tos(backend, n, f, 1, &w);
        assert_eq!(results, vec![Some(OpResult::Bit(0)); 2], "{backend}");
    }
    assert_eq!(naive_quorum_tos(), TosBackend::NaiveQuorum);
}

#[test]
fn partitions_exist_only_up_to_three_f() {
    assert!(attack_partition(3, 1).is_some());
    assert!(attack_partition(6, 2).is_some());
    assert!(attack_partition(4, 1).is_none());
    assert!(attack_partition(7, 2).is_none());
    let p = attack_partition(9, 3).unwrap();
    for group in [p.s_q1(), p.a_q2(), p.b_q3()] {
        assert_eq!(group.len(), 3);
    }
}

#[test]
fn attack_on_naive_backend() {
    let r = run_attack(TosBackend::NaiveQuorum, 3, 1, 0).unwrap();
    assert!(r.applicable && r.violation && r.replay_faithful);
    assert_eq!((r.h1_test, r.h2_test_prime, r.h3_test_prime), (Some(1), Some(1), Some(1)));
    let names: Vec<&str> = r.phases.iter().map(|p| p.name.as_str()).collect();
    assert_eq!(names, ["h1", "h2", "h3"]);
    for key in ["h1_t2", "h1_t4", "h2_t5", "h2_t7", "h3_t7"] {
        assert!(r.dumps.contains_key(key), "{key}");
    }
    let t = &r.ticks;
    assert!(t["t1"] < t["t2"] && t["t2"] < t["t3"] && t["t4"] < t["t5"] && t["t6"] < t["t7"]);
}

#[test]
fn attack_is_inapplicable_above_three_f() {
    for backend in TosBackend::ALL {
        let r = run_attack(backend, 4, 1, 0).unwrap();
        assert!(!r.applicable && !r.violation, "{backend}");
        assert!(r.inconclusive.is_some());
    }
}
