//! Test-or-set objects: reductions onto each register, a naive quorum
//! backend, and an executable replay of the three-history impossibility
//! attack.

mod attack;
mod naive;

pub use attack::{attack_partition, run_attack, AttackReport, Partition, PhaseSummary};
pub use naive::NaiveQuorumTos;

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::registers::{AuthenticatedRegister, StickyRegister, VerifiableRegister, V0};
use crate::runtime::{
    CellName, Memory, OpKind, OpRequest, OpResult, ProcessId, ProcessLogic, Protocol, RuntimeError,
    StepCtx, TypeTag, Value,
};

/// The value a setter writes to mark the object as set.
pub const SET_VALUE: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TosBackend {
    /// Set = Write(1); Sign(1). Test = Verify(1).
    Verifiable,
    /// Set = Write(1). Test = Verify(1).
    Authenticated,
    /// Set = Write(1). Test = (Read = 1).
    Sticky,
    /// Flag plus quorum echoes, with no register underneath.
    NaiveQuorum,
}

impl TosBackend {
    pub const ALL: [TosBackend; 4] =
        [TosBackend::Verifiable, TosBackend::Authenticated, TosBackend::Sticky, TosBackend::NaiveQuorum];

    pub fn register_backends() -> [TosBackend; 3] {
        [TosBackend::Verifiable, TosBackend::Authenticated, TosBackend::Sticky]
    }
}

impl fmt::Display for TosBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TosBackend::Verifiable => "verifiable",
            TosBackend::Authenticated => "authenticated",
            TosBackend::Sticky => "sticky",
            TosBackend::NaiveQuorum => "naive_quorum",
        })
    }
}

/// The naive flag-and-echo backend.
pub fn naive_quorum_tos() -> TosBackend {
    TosBackend::NaiveQuorum
}

/// A test-or-set protocol on `backend`.
pub fn tos_protocol(backend: TosBackend) -> Box<dyn Protocol> {
    match backend {
        TosBackend::NaiveQuorum => Box::new(NaiveQuorumTos),
        b => Box::new(TosOverRegister::new(b)),
    }
}

/// Test-or-set implemented with operations of an underlying register.
pub struct TosOverRegister {
    backend: TosBackend,
    inner: Box<dyn Protocol>,
}

impl TosOverRegister {
    pub fn new(backend: TosBackend) -> Self {
        let inner: Box<dyn Protocol> = match backend {
            TosBackend::Verifiable => Box::new(VerifiableRegister::new(V0)),
            TosBackend::Authenticated => Box::new(AuthenticatedRegister::new(V0)),
            TosBackend::Sticky => Box::new(StickyRegister::new()),
            TosBackend::NaiveQuorum => panic!("the naive backend has no register"),
        };
        TosOverRegister { backend, inner }
    }
}

impl Protocol for TosOverRegister {
    fn type_tag(&self) -> TypeTag {
        TypeTag::TestOrSet
    }

    fn name(&self) -> String {
        format!("test_or_set/{}", self.backend)
    }

    fn v0(&self) -> Option<u64> {
        None
    }

    fn install(&self, mem: &mut Memory, n: usize) -> Result<(), RuntimeError> {
        self.inner.install(mem, n)
    }

    fn spawn(&self, pid: ProcessId, mem: &Memory, n: usize, f: usize) -> Box<dyn ProcessLogic> {
        Box::new(TosProcess {
            backend: self.backend,
            inner: self.inner.spawn(pid, mem, n, f),
            plan: VecDeque::new(),
            outer: OpKind::Set,
        })
    }

    fn equivocation(&self, pid: ProcessId, step: u64, values: &[u64]) -> Option<(CellName, Value)> {
        self.inner.equivocation(pid, step, values)
    }
}

struct TosProcess {
    backend: TosBackend,
    inner: Box<dyn ProcessLogic>,
    plan: VecDeque<OpRequest>,
    outer: OpKind,
}

impl ProcessLogic for TosProcess {
    fn invoke(&mut self, req: &OpRequest) {
        self.outer = req.kind;
        self.plan = match (req.kind, self.backend) {
            (OpKind::Set, TosBackend::Verifiable) => {
                [OpRequest::write(SET_VALUE), OpRequest::sign(SET_VALUE)].into()
            }
            (OpKind::Set, _) => [OpRequest::write(SET_VALUE)].into(),
            (OpKind::Test, TosBackend::Sticky) => [OpRequest::read()].into(),
            (OpKind::Test, _) => [OpRequest::verify(SET_VALUE)].into(),
            (other, _) => unreachable!("{other:?} on a test-or-set object"),
        };
        let first = self.plan.pop_front().expect("non-empty plan");
        self.inner.invoke(&first);
    }

    fn op_step(&mut self, ctx: &mut StepCtx<'_>) -> Result<Option<OpResult>, RuntimeError> {
        let Some(r) = self.inner.op_step(ctx)? else { return Ok(None) };
        if let Some(next) = self.plan.pop_front() {
            self.inner.invoke(&next);
            return Ok(None);
        }
        Ok(Some(match self.outer {
            OpKind::Set => OpResult::Done,
            _ => OpResult::Bit(u8::from(matches!(
                r,
                OpResult::True | OpResult::Read(Some(SET_VALUE))
            ))),
        }))
    }

    fn help_step(&mut self, ctx: &mut StepCtx<'_>) -> Result<(), RuntimeError> {
        self.inner.help_step(ctx)
    }
}
