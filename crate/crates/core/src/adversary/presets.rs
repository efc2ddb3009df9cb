//! Named adversary configurations used by sweeps and scenarios.

use std::collections::BTreeSet;

use crate::runtime::{ProcessId, Tick, TypeTag, Value};

use super::{AdversaryScript, Directive};

/// A value no correct writer ever writes.
pub const FORGED_VALUE: u64 = 999;

/// Values an equivocating writer alternates between.
pub const EQUIVOCATION_VALUES: [u64; 2] = [7, 9];

const CRASH_TICK: Tick = 400;
const RESET_TICK: Tick = 700;
/// Far beyond any counter a reader reaches, so the reply always looks fresh.
const FRESH_ROUND: u64 = 1 << 40;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    pub byzantine: BTreeSet<ProcessId>,
    pub script: AdversaryScript,
}

const NAMES: [&str; 8] = [
    "none",
    "silent_helper",
    "crash_mid",
    "stale_responder",
    "lying_witness",
    "byz_writer_equivocate",
    "byz_writer_reset",
    "byz_writer_silent",
];

pub fn preset_names() -> &'static [&'static str] {
    &NAMES
}

/// Builds preset `name` for `n` processes with `f` Byzantine ones. Faulty
/// readers are the last `f` processes; writer presets replace one of them
/// with p1.
pub fn preset(name: &str, tag: TypeTag, n: usize, f: usize) -> Option<Preset> {
    let name = *NAMES.iter().find(|x| **x == name)?;
    let last: Vec<ProcessId> = (n - f + 1..=n).map(|i| ProcessId(i as u32)).collect();
    let with_writer: Vec<ProcessId> =
        std::iter::once(ProcessId::WRITER).chain(last.iter().skip(1).copied()).collect();
    let each = |ps: &[ProcessId], d: &dyn Fn(ProcessId) -> Vec<Directive>| {
        ps.iter().fold(AdversaryScript::none(), |s, p| s.with(*p, d(*p)))
    };
    let (byz, script): (Vec<ProcessId>, AdversaryScript) = match name {
        "none" => (Vec::new(), AdversaryScript::none()),
        "silent_helper" => (last.clone(), each(&last, &|_| vec![Directive::Silent])),
        "crash_mid" => (last.clone(), each(&last, &|_| vec![Directive::CrashAtTick { tick: CRASH_TICK }])),
        "stale_responder" => (last.clone(), each(&last, &|_| vec![Directive::StaleResponder])),
        "lying_witness" => {
            let witness = match tag {
                TypeTag::Sticky => Value::Scalar(FORGED_VALUE),
                _ => Value::set_of([FORGED_VALUE]),
            };
            let script = each(&last, &|p| {
                (2..=n as u32)
                    .map(ProcessId)
                    .filter(|k| *k != p)
                    .map(|reader| Directive::LyingWitness {
                        reader,
                        witness: witness.clone(),
                        round: Some(FRESH_ROUND),
                        tick: 0,
                    })
                    .collect()
            });
            (last.clone(), script)
        }
        "byz_writer_equivocate" => (
            with_writer.clone(),
            AdversaryScript::none().with(
                ProcessId::WRITER,
                vec![Directive::Equivocate { values: EQUIVOCATION_VALUES.to_vec() }],
            ),
        ),
        "byz_writer_reset" => (
            with_writer.clone(),
            AdversaryScript::none().with(
                ProcessId::WRITER,
                vec![
                    Directive::CrashAtTick { tick: RESET_TICK },
                    Directive::ResetOwnRegistersAtTick { tick: RESET_TICK },
                ],
            ),
        ),
        "byz_writer_silent" => (with_writer.clone(), AdversaryScript::none()),
        _ => unreachable!("name checked above"),
    };
    Some(Preset { name, byzantine: byz.into_iter().collect(), script })
}
