//! Authenticated register: the writer appends timestamped values, and a Read
//! returns the latest one only if it verifies.

use std::collections::BTreeSet;

use crate::runtime::{
    cell, CellId, CellName, Memory, OpKind, OpRequest, OpResult, ProcessId, ProcessLogic, Protocol,
    Readers, RuntimeError, StepCtx, TypeTag, Value,
};

use super::common::{install_request_cells, processes, OwnWitness, ReaderCells};
use super::help::{HelpMode, WitnessHelp};
use super::verify::VerifyFrame;

#[derive(Clone, Debug)]
pub struct AuthenticatedRegister {
    pub v0: u64,
}

impl AuthenticatedRegister {
    pub fn new(v0: u64) -> Self {
        AuthenticatedRegister { v0 }
    }
}

impl Protocol for AuthenticatedRegister {
    fn type_tag(&self) -> TypeTag {
        TypeTag::Authenticated
    }

    fn name(&self) -> String {
        "authenticated".into()
    }

    fn v0(&self) -> Option<u64> {
        Some(self.v0)
    }

    fn install(&self, mem: &mut Memory, n: usize) -> Result<(), RuntimeError> {
        let initial = Value::Pairs([(0, self.v0)].into_iter().collect());
        mem.alloc_register(CellName::Witness(ProcessId::WRITER), ProcessId::WRITER, Readers::All, initial)?;
        for i in processes(n).skip(1) {
            mem.alloc_register(CellName::Witness(i), i, Readers::All, Value::set_of([self.v0]))?;
        }
        install_request_cells(mem, n, Value::reply(Value::empty_set(), 0))
    }

    fn spawn(&self, pid: ProcessId, mem: &Memory, n: usize, f: usize) -> Box<dyn ProcessLogic> {
        let writer_cell = cell(mem, CellName::Witness(ProcessId::WRITER));
        Box::new(AuthenticatedProcess {
            n,
            f,
            v0: self.v0,
            writer_cell,
            pairs: [(0, self.v0)].into_iter().collect(),
            timestamp: 0,
            own: OwnWitness {
                cell: cell(mem, CellName::Witness(pid)),
                set: [self.v0].into_iter().collect(),
            },
            reader: ReaderCells::new(mem, pid, n),
            help: WitnessHelp::new(mem, pid, n, f, HelpMode::Authenticated),
            op: None,
        })
    }

    fn equivocation(&self, pid: ProcessId, step: u64, values: &[u64]) -> Option<(CellName, Value)> {
        let v = values[step as usize % values.len()];
        if pid == ProcessId::WRITER {
            let pairs = [(step + 1, v)].into_iter().collect();
            Some((CellName::Witness(pid), Value::Pairs(pairs)))
        } else {
            Some((CellName::Witness(pid), Value::set_of([v])))
        }
    }
}

#[derive(Clone, Debug)]
enum Op {
    Write(u64),
    Read(Option<VerifyFrame>),
    Verify(VerifyFrame),
}

struct AuthenticatedProcess {
    n: usize,
    f: usize,
    v0: u64,
    writer_cell: CellId,
    /// The writer's copy of its pair set.
    pairs: BTreeSet<(u64, u64)>,
    timestamp: u64,
    own: OwnWitness,
    reader: Option<ReaderCells>,
    help: WitnessHelp,
    op: Option<Op>,
}

impl ProcessLogic for AuthenticatedProcess {
    fn invoke(&mut self, req: &OpRequest) {
        self.op = Some(match req.kind {
            OpKind::Write => Op::Write(req.value()),
            OpKind::Read => Op::Read(None),
            OpKind::Verify => Op::Verify(VerifyFrame::new(req.value(), self.n)),
            other => unreachable!("{other:?} on an authenticated register"),
        });
    }

    fn op_step(&mut self, ctx: &mut StepCtx<'_>) -> Result<Option<OpResult>, RuntimeError> {
        let op = self.op.as_mut().expect("op_step without a running operation");
        let result = match op {
            Op::Write(v) => {
                self.timestamp += 1;
                self.pairs.insert((self.timestamp, *v));
                ctx.write(self.writer_cell, Value::Pairs(self.pairs.clone()))?;
                ctx.mark_lp();
                Some(OpResult::Done)
            }
            Op::Read(None) => {
                let r = ctx.read(self.writer_cell)?;
                ctx.mark_lp();
                match r {
                    Value::Pairs(p) if !p.is_empty() => {
                        let (_, v) = *p.iter().next_back().expect("non-empty");
                        *op = Op::Read(Some(VerifyFrame::new(v, self.n)));
                        None
                    }
                    _ => Some(OpResult::Read(Some(self.v0))),
                }
            }
            Op::Read(Some(frame)) => {
                let reader = self.reader.as_mut().expect("only readers read");
                match frame.step(ctx, reader, self.n, self.f)? {
                    None => None,
                    Some(ok) => {
                        let start = frame.start.unwrap_or_else(|| ctx.now());
                        ctx.note_verify(frame.value(), start, ok);
                        let v = if ok { frame.value() } else { self.v0 };
                        Some(OpResult::Read(Some(v)))
                    }
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
