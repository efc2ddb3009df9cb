//! Verifiable register: Write/Read on a plain register, Sign/Verify through
//! witness sets relayed by helpers.

use std::collections::BTreeSet;

use crate::runtime::{
    cell, CellId, CellName, Memory, OpKind, OpRequest, OpResult, ProcessId, ProcessLogic, Protocol,
    Readers, RuntimeError, StepCtx, TypeTag, Value,
};

use super::common::{install_request_cells, processes, OwnWitness, ReaderCells};
use super::help::{HelpMode, WitnessHelp};
use super::verify::{AnyVerify, VerifyVariant};

#[derive(Clone, Debug)]
pub struct VerifiableRegister {
    pub v0: u64,
    pub variant: VerifyVariant,
}

impl VerifiableRegister {
    pub fn new(v0: u64) -> Self {
        VerifiableRegister { v0, variant: VerifyVariant::Faithful }
    }

    pub fn with_variant(mut self, variant: VerifyVariant) -> Self {
        self.variant = variant;
        self
    }
}

impl Protocol for VerifiableRegister {
    fn type_tag(&self) -> TypeTag {
        TypeTag::Verifiable
    }

    fn name(&self) -> String {
        match self.variant {
            VerifyVariant::Faithful => "verifiable".into(),
            VerifyVariant::Flawed => "verifiable/flawed".into(),
        }
    }

    fn v0(&self) -> Option<u64> {
        Some(self.v0)
    }

    fn install(&self, mem: &mut Memory, n: usize) -> Result<(), RuntimeError> {
        mem.alloc_register(CellName::Star, ProcessId::WRITER, Readers::All, Value::Scalar(self.v0))?;
        for i in processes(n) {
            mem.alloc_register(CellName::Witness(i), i, Readers::All, Value::empty_set())?;
        }
        install_request_cells(mem, n, Value::reply(Value::empty_set(), 0))
    }

    fn spawn(&self, pid: ProcessId, mem: &Memory, n: usize, f: usize) -> Box<dyn ProcessLogic> {
        Box::new(VerifiableProcess {
            n,
            f,
            v0: self.v0,
            variant: self.variant,
            star: cell(mem, CellName::Star),
            own: OwnWitness { cell: cell(mem, CellName::Witness(pid)), set: BTreeSet::new() },
            written: BTreeSet::new(),
            reader: ReaderCells::new(mem, pid, n),
            help: WitnessHelp::new(mem, pid, n, f, HelpMode::Verifiable),
            op: None,
        })
    }

    fn equivocation(&self, pid: ProcessId, step: u64, values: &[u64]) -> Option<(CellName, Value)> {
        let v = values[(step / 2) as usize % values.len()];
        if pid == ProcessId::WRITER && step.is_multiple_of(2) {
            Some((CellName::Star, Value::Scalar(v)))
        } else {
            Some((CellName::Witness(pid), Value::set_of([v])))
        }
    }
}

#[derive(Clone, Debug)]
enum Op {
    Write(u64),
    Read,
    Sign(u64),
    Verify(AnyVerify),
}

struct VerifiableProcess {
    n: usize,
    f: usize,
    v0: u64,
    variant: VerifyVariant,
    star: CellId,
    own: OwnWitness,
    /// Values this process has written (the writer's local set).
    written: BTreeSet<u64>,
    reader: Option<ReaderCells>,
    help: WitnessHelp,
    op: Option<Op>,
}

impl ProcessLogic for VerifiableProcess {
    fn invoke(&mut self, req: &OpRequest) {
        self.op = Some(match req.kind {
            OpKind::Write => Op::Write(req.value()),
            OpKind::Read => Op::Read,
            OpKind::Sign => Op::Sign(req.value()),
            OpKind::Verify => Op::Verify(AnyVerify::new(self.variant, req.value(), self.n)),
            other => unreachable!("{other:?} on a verifiable register"),
        });
    }

    fn op_step(&mut self, ctx: &mut StepCtx<'_>) -> Result<Option<OpResult>, RuntimeError> {
        let op = self.op.as_mut().expect("op_step without a running operation");
        let result = match op {
            Op::Write(v) => {
                ctx.write(self.star, Value::Scalar(*v))?;
                ctx.mark_lp();
                self.written.insert(*v);
                Some(OpResult::Done)
            }
            Op::Read => {
                let r = ctx.read(self.star)?;
                ctx.mark_lp();
                Some(OpResult::Read(Some(r.as_scalar().unwrap_or(self.v0))))
            }
            Op::Sign(v) => {
                if self.written.contains(v) {
                    self.own.set.insert(*v);
                    ctx.write(self.own.cell, Value::Set(self.own.set.clone()))?;
                    ctx.mark_lp();
                    Some(OpResult::Success)
                } else {
                    Some(OpResult::Fail)
                }
            }
            Op::Verify(frame) => {
                let reader = self.reader.as_mut().expect("only readers verify");
                frame.step(ctx, reader, self.n, self.f)?.map(OpResult::from_bool)
            }
        };
        if result.is_some() {
            self.op = None;
        }
        Ok(result)
    }

    fn help_step(&mut self, ctx: &mut StepCtx<'_>) -> Result<(), RuntimeError> {
        self.help.step(ctx, &mut self.own)
    }
}
