//! The interface between protocols and the simulator.

use crate::histories::Annotation;

use super::error::RuntimeError;
use super::memory::{CellId, Memory};
use super::op::{OpKey, OpRequest, OpResult, TypeTag};
use super::value::{CellName, ProcessId, Tick, Value};

/// A loop invariant that failed inside a correct process.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct InvariantViolation {
    pub tick: Tick,
    pub process: ProcessId,
    pub message: String,
}

/// Per-step view of the system handed to a process. At most one shared
/// access is allowed per step.
pub struct StepCtx<'a> {
    pid: ProcessId,
    mem: &'a mut Memory,
    op: Option<OpKey>,
    annotations: &'a mut Vec<Annotation>,
    violations: &'a mut Vec<InvariantViolation>,
    accessed: bool,
}

impl<'a> StepCtx<'a> {
    pub(crate) fn new(
        pid: ProcessId,
        mem: &'a mut Memory,
        op: Option<OpKey>,
        annotations: &'a mut Vec<Annotation>,
        violations: &'a mut Vec<InvariantViolation>,
    ) -> Self {
        StepCtx { pid, mem, op, annotations, violations, accessed: false }
    }

    pub fn pid(&self) -> ProcessId {
        self.pid
    }

    pub fn now(&self) -> Tick {
        self.mem.clock()
    }

    pub fn accessed(&self) -> bool {
        self.accessed
    }

    fn claim(&mut self) -> Result<(), RuntimeError> {
        if self.accessed {
            return Err(RuntimeError::MultipleAccesses(self.pid));
        }
        self.accessed = true;
        Ok(())
    }

    pub fn read(&mut self, cell: CellId) -> Result<Value, RuntimeError> {
        self.claim()?;
        self.mem.atomic_read(cell, self.pid)
    }

    pub fn write(&mut self, cell: CellId, value: Value) -> Result<(), RuntimeError> {
        self.claim()?;
        self.mem.atomic_write(cell, self.pid, value)
    }

    /// Contents of a register this process owns, without a shared access.
    pub fn peek_own(&self, cell: CellId) -> Option<&Value> {
        let c = self.mem.cell(cell);
        (c.owner == self.pid).then_some(&c.value)
    }

    pub fn lookup(&self, name: CellName) -> Option<CellId> {
        self.mem.lookup(name)
    }

    /// Records the current tick as the linearization point of the running
    /// operation.
    pub fn mark_lp(&mut self) {
        if let Some(op) = self.op {
            self.annotations.push(Annotation::LinPoint { op, tick: self.mem.clock() });
        }
    }

    pub fn note_verify(&mut self, value: u64, start: Tick, result: bool) {
        if let Some(op) = self.op {
            self.annotations.push(Annotation::VerifyProcedure {
                op,
                value,
                start,
                end: self.mem.clock(),
                result,
            });
        }
    }

    pub fn report_violation(&mut self, message: String) {
        self.violations.push(InvariantViolation {
            tick: self.mem.clock(),
            process: self.pid,
            message,
        });
    }
}

/// Local state machine of one process: an operation thread and a help
/// thread that share local variables.
pub trait ProcessLogic {
    fn invoke(&mut self, req: &OpRequest);

    /// Advances the running operation by one step. Returns its result when
    /// the operation completes.
    fn op_step(&mut self, ctx: &mut StepCtx<'_>) -> Result<Option<OpResult>, RuntimeError>;

    fn help_step(&mut self, ctx: &mut StepCtx<'_>) -> Result<(), RuntimeError>;
}

/// A register protocol: its register layout and per-process logic.
pub trait Protocol {
    fn type_tag(&self) -> TypeTag;

    fn name(&self) -> String;

    /// Initial value returned by Reads before any Write, if the type has one.
    fn v0(&self) -> Option<u64>;

    fn install(&self, mem: &mut Memory, n: usize) -> Result<(), RuntimeError>;

    fn spawn(&self, pid: ProcessId, mem: &Memory, n: usize, f: usize) -> Box<dyn ProcessLogic>;

    /// The `step`-th write of an equivocating process.
    fn equivocation(&self, pid: ProcessId, step: u64, values: &[u64]) -> Option<(CellName, Value)>;
}

/// Looks up a register the protocol is known to have allocated.
pub fn cell(mem: &Memory, name: CellName) -> CellId {
    mem.lookup(name)
        .unwrap_or_else(|| panic!("layout is missing register {name}"))
}
