use byzreg::adversary::{preset, AdversaryScript, Directive};
use byzreg::histories::check_observations;
use byzreg::registers::{AuthenticatedRegister, StickyRegister, VerifiableRegister, VerifyVariant, V0};
use byzreg::runtime::{
    create_system, CellName, ConfigError, OpRequest, OpResult, ProcessId, Protocol, RunStatus, RuntimeError,
    Simulation, SystemConfig, Tick, TypeTag, Value, Workload, WorkloadEntry,
};

struct Ran {
    status: RunStatus,
    results: Vec<Option<OpResult>>,
    cells: std::collections::BTreeMap<CellName, Value>,
    sim_trace: byzreg::histories::HistoryTrace,
}

fn p(i: u32) -> ProcessId {
    ProcessId(i)
}

fn op(process: u32, req: OpRequest) -> WorkloadEntry {
    WorkloadEntry::new(p(process), req)
}

/// Each entry waits for the previous one to respond.
fn chain(entries: Vec<WorkloadEntry>) -> Workload {
    let mut w = Workload::default();
    for (i, e) in entries.into_iter().enumerate() {
        let e = if i == 0 { e } else { e.after([i - 1]) };
        w.push(e);
    }
    w
}

fn simulate(config: SystemConfig, protocol: Box<dyn Protocol>, w: &Workload, script: &AdversaryScript) -> Ran {
    let mut sim = Simulation::new(create_system(config).unwrap(), protocol, w, script).unwrap();
    let status = sim.run().unwrap();
    let results = (0..w.entries.len()).map(|i| sim.result_of(i).map(|(r, _)| r)).collect();
    let cells = sim.memory().snapshot();
    let sim_trace = sim.trace();
    Ran { status, results, cells, sim_trace }
}

fn all_correct(protocol: Box<dyn Protocol>, entries: Vec<WorkloadEntry>, seed: u64) -> Ran {
    simulate(SystemConfig::new(4, 1, seed), protocol, &chain(entries), &AdversaryScript::none())
}

fn vr() -> Box<dyn Protocol> {
    Box::new(VerifiableRegister::new(V0))
}

fn ar() -> Box<dyn Protocol> {
    Box::new(AuthenticatedRegister::new(V0))
}

fn sr() -> Box<dyn Protocol> {
    Box::new(StickyRegister::new())
}

const SEEDS: u64 = 10;

#[test]
fn verifiable_read_write() {
    for seed in 0..SEEDS {
        let r = all_correct(vr(), vec![op(2, OpRequest::read()), op(1, OpRequest::write(5)), op(3, OpRequest::read())], seed);
        assert_eq!(r.results, vec![Some(OpResult::Read(Some(V0))), Some(OpResult::Done), Some(OpResult::Read(Some(5)))]);
        let r = all_correct(
            vr(),
            vec![op(1, OpRequest::write(1)), op(1, OpRequest::write(2)), op(4, OpRequest::read())],
            seed,
        );
        assert_eq!(r.results[2], Some(OpResult::Read(Some(2))));
        let r = all_correct(vr(), vec![op(1, OpRequest::write(V0)), op(2, OpRequest::read())], seed);
        assert_eq!(r.results[1], Some(OpResult::Read(Some(V0))));
    }
}

#[test]
fn verifiable_sign_requires_a_write() {
    for seed in 0..SEEDS {
        let r = all_correct(vr(), vec![op(1, OpRequest::write(4)), op(1, OpRequest::sign(4))], seed);
        assert_eq!(r.results[1], Some(OpResult::Success));
        let r = all_correct(vr(), vec![op(1, OpRequest::sign(4))], seed);
        assert_eq!(r.results[0], Some(OpResult::Fail));
        let r = all_correct(
            vr(),
            vec![op(1, OpRequest::write(1)), op(1, OpRequest::write(2)), op(1, OpRequest::sign(1))],
            seed,
        );
        assert_eq!(r.results[2], Some(OpResult::Success));
    }
}

#[test]
fn verifiable_verify() {
    for seed in 0..SEEDS {
        let r = all_correct(
            vr(),
            vec![
                op(1, OpRequest::write(3)),
                op(1, OpRequest::sign(3)),
                op(2, OpRequest::verify(3)),
                op(4, OpRequest::verify(3)),
                op(3, OpRequest::verify(8)),
            ],
            seed,
        );
        assert_eq!(r.status, RunStatus::Completed);
        assert_eq!(&r.results[2..], &[Some(OpResult::True), Some(OpResult::True), Some(OpResult::False)]);
        // Written but never signed.
        let r = all_correct(vr(), vec![op(1, OpRequest::write(6)), op(2, OpRequest::verify(6))], seed);
        assert_eq!(r.results[1], Some(OpResult::False));
    }
}

#[test]
fn verifiable_verify_with_silent_helper() {
    for seed in 0..SEEDS {
        let config = SystemConfig::new(4, 1, seed).with_byzantine([p(4)]);
        let script = AdversaryScript::none().with(p(4), vec![Directive::Silent]);
        let w = chain(vec![op(1, OpRequest::write(2)), op(1, OpRequest::sign(2)), op(3, OpRequest::verify(2))]);
        let r = simulate(config, vr(), &w, &script);
        assert_eq!(r.status, RunStatus::Completed);
        assert_eq!(r.results[2], Some(OpResult::True));
    }
}

#[test]
fn read_does_not_authenticate() {
    let config = SystemConfig::new(4, 1, 0).with_byzantine([p(1)]);
    let script = AdversaryScript::none().with(
        p(1),
        vec![Directive::WriteOwn { cell: CellName::Star, value: Value::Scalar(3), tick: 1 }],
    );
    let w = Workload::new(vec![op(2, OpRequest::read()).at(50)]);
    let r = simulate(config, vr(), &w, &script);
    assert_eq!(r.results[0], Some(OpResult::Read(Some(3))));
}

#[test]
fn witness_quorum_survives_writer_reset() {
    for seed in 0..SEEDS {
        let config = SystemConfig::new(4, 1, seed).with_byzantine([p(1)]);
        let reset: Tick = 1000;
        let script = AdversaryScript::none().with(
            p(1),
            vec![Directive::CrashAtTick { tick: reset }, Directive::ResetOwnRegistersAtTick { tick: reset }],
        );
        let mut w = Workload::default();
        let a = w.push(op(1, OpRequest::write(5)));
        let b = w.push(op(1, OpRequest::sign(5)).after([a]));
        let c = w.push(op(2, OpRequest::verify(5)).after([b]));
        w.push(op(3, OpRequest::verify(5)).at(reset + 200).after([c]));
        let r = simulate(config, vr(), &w, &script);
        assert_eq!(r.results[1], Some(OpResult::Success), "seed {seed}");
        assert_eq!(r.results[2], Some(OpResult::True));
        assert_eq!(r.results[3], Some(OpResult::True), "seed {seed}");
    }
}

#[test]
fn authenticated_register() {
    for seed in 0..SEEDS {
        let r = all_correct(ar(), vec![op(2, OpRequest::read()), op(1, OpRequest::write(7)), op(3, OpRequest::read())], seed);
        assert_eq!(r.results[0], Some(OpResult::Read(Some(V0))));
        assert_eq!(r.results[2], Some(OpResult::Read(Some(7))));
        assert_eq!(
            r.cells[&CellName::Witness(p(1))],
            Value::Pairs([(0, V0), (1, 7)].into_iter().collect())
        );
        let r = all_correct(
            ar(),
            vec![
                op(1, OpRequest::write(7)),
                op(1, OpRequest::write(7)),
                op(2, OpRequest::verify(7)),
                op(3, OpRequest::verify(V0)),
                op(4, OpRequest::verify(12)),
            ],
            seed,
        );
        assert_eq!(
            r.cells[&CellName::Witness(p(1))],
            Value::Pairs([(0, V0), (1, 7), (2, 7)].into_iter().collect())
        );
        assert_eq!(&r.results[2..], &[Some(OpResult::True), Some(OpResult::True), Some(OpResult::False)]);
    }
}

#[test]
fn authenticated_read_of_malformed_writer_register() {
    let config = SystemConfig::new(4, 1, 0).with_byzantine([p(1)]);
    let script = AdversaryScript::none().with(
        p(1),
        vec![Directive::WriteOwn { cell: CellName::Witness(p(1)), value: Value::Scalar(44), tick: 1 }],
    );
    let w = Workload::new(vec![op(2, OpRequest::read()).at(50)]);
    let r = simulate(config, ar(), &w, &script);
    assert_eq!(r.results[0], Some(OpResult::Read(Some(V0))));
}

#[test]
fn authenticated_read_of_value_placed_by_faulty_writer() {
    // Helpers adopt whatever the writer's register holds, so the placed pair
    // verifies just as a written one would.
    let config = SystemConfig::new(4, 1, 2).with_byzantine([p(1)]);
    let pairs = Value::Pairs([(0, V0), (5, 8)].into_iter().collect());
    let script = AdversaryScript::none().with(
        p(1),
        vec![Directive::WriteOwn { cell: CellName::Witness(p(1)), value: pairs, tick: 1 }],
    );
    let w = Workload::new(vec![op(2, OpRequest::read()).at(50)]);
    let r = simulate(config, ar(), &w, &script);
    assert_eq!(r.results[0], Some(OpResult::Read(Some(8))));
    assert!(check_observations(&r.sim_trace).unwrap().iter().all(|v| v.passed()));
    assert!(byzreg::histories::byz_linearize_constructive(&r.sim_trace).unwrap().passed());
}

#[test]
fn sticky_register() {
    for seed in 0..SEEDS {
        let r = all_correct(sr(), vec![op(2, OpRequest::read())], seed);
        assert_eq!(r.results[0], Some(OpResult::Read(None)));
        let r = all_correct(
            sr(),
            vec![op(1, OpRequest::write(3)), op(1, OpRequest::write(4)), op(2, OpRequest::read()), op(4, OpRequest::read())],
            seed,
        );
        assert_eq!(
            r.results,
            vec![Some(OpResult::Done), Some(OpResult::Done), Some(OpResult::Read(Some(3))), Some(OpResult::Read(Some(3)))]
        );
        assert_eq!(r.cells[&CellName::Echo(p(1))], Value::Scalar(3));
    }
}

#[test]
fn sticky_write_waits_for_witnesses() {
    let r = all_correct(sr(), vec![op(1, OpRequest::write(9))], 0);
    let witnesses = (1..=4).filter(|i| r.cells[&CellName::Witness(p(*i))] == Value::Scalar(9)).count();
    assert!(witnesses >= 3, "only {witnesses} witnesses");
}

#[test]
fn flawed_verify_when_all_correct() {
    for seed in 0..SEEDS {
        let proto = Box::new(VerifiableRegister::new(V0).with_variant(VerifyVariant::Flawed));
        let r = all_correct(
            proto,
            vec![op(1, OpRequest::write(1)), op(1, OpRequest::sign(1)), op(2, OpRequest::verify(1)), op(3, OpRequest::verify(2))],
            seed,
        );
        assert_eq!(&r.results[2..], &[Some(OpResult::True), Some(OpResult::False)]);
    }
}

#[test]
fn flawed_verify_breaks_relay() {
    let script = AdversaryScript::none().with(
        p(4),
        vec![Directive::LyingWitness { reader: p(3), witness: Value::empty_set(), round: Some(1 << 40), tick: 0 }],
    );
    let w = chain(vec![
        op(1, OpRequest::write(1)),
        op(1, OpRequest::sign(1)),
        op(2, OpRequest::verify(1)),
        op(3, OpRequest::verify(1)),
    ]);
    for (variant, broken) in [(VerifyVariant::Faithful, false), (VerifyVariant::Flawed, true)] {
        let config = SystemConfig::new(4, 1, 0).with_byzantine([p(4)]);
        let r = simulate(config, Box::new(VerifiableRegister::new(V0).with_variant(variant)), &w, &script);
        let relay = check_observations(&r.sim_trace).unwrap().into_iter().find(|v| v.check == "relay").unwrap();
        assert_eq!(!relay.passed(), broken, "{variant:?}");
        assert_eq!(r.results[3] == Some(OpResult::False), broken);
    }
}

#[test]
fn budget_exhaustion_is_reported() {
    let mut config = SystemConfig::new(4, 1, 0);
    config.budget = 10;
    let w = chain(vec![op(1, OpRequest::write(1)), op(1, OpRequest::sign(1)), op(2, OpRequest::verify(1))]);
    let r = simulate(config, vr(), &w, &AdversaryScript::none());
    assert_eq!(r.status, RunStatus::BudgetExhausted);
    assert_eq!(r.results[2], None);
}

#[test]
fn scripts_cannot_write_foreign_registers() {
    let config = SystemConfig::new(4, 1, 0).with_byzantine([p(4)]);
    let script = AdversaryScript::none().with(
        p(4),
        vec![Directive::WriteOwn { cell: CellName::Witness(p(2)), value: Value::empty_set(), tick: 0 }],
    );
    let err = Simulation::new(create_system(config).unwrap(), vr(), &Workload::default(), &script).err();
    assert!(matches!(err, Some(RuntimeError::Config(ConfigError::Adversary(_)))), "{err:?}");
}

#[test]
fn every_preset_loads_for_every_register() {
    for tag in [TypeTag::Verifiable, TypeTag::Authenticated, TypeTag::Sticky] {
        for name in byzreg::adversary::preset_names() {
            let pr = preset(name, tag, 7, 2).unwrap();
            let config = SystemConfig::new(7, 2, 0).with_byzantine(pr.byzantine.iter().copied());
            let proto = byzreg::registers::register_protocol(tag, V0, VerifyVariant::Faithful).unwrap();
            assert!(Simulation::new(create_system(config).unwrap(), proto, &Workload::default(), &pr.script).is_ok());
        }
    }
}
