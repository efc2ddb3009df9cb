//! Flag-and-echo test-or-set. Testers trust a majority of echoes and add
//! their own once `f` others have echoed. Intended as an attack target.

use crate::runtime::{
    cell, CellId, CellName, Memory, OpKind, OpRequest, OpResult, ProcessId, ProcessLogic, Protocol,
    Readers, RuntimeError, StepCtx, TypeTag, Value,
};

#[derive(Clone, Copy, Debug, Default)]
pub struct NaiveQuorumTos;

fn set(v: &Value) -> bool {
    v.as_scalar() == Some(1)
}

impl Protocol for NaiveQuorumTos {
    fn type_tag(&self) -> TypeTag {
        TypeTag::TestOrSet
    }

    fn name(&self) -> String {
        "test_or_set/naive_quorum".into()
    }

    fn v0(&self) -> Option<u64> {
        None
    }

    fn install(&self, mem: &mut Memory, n: usize) -> Result<(), RuntimeError> {
        mem.alloc_register(CellName::Flag, ProcessId::WRITER, Readers::All, Value::Scalar(0))?;
        for i in (1..=n as u32).map(ProcessId) {
            mem.alloc_register(CellName::Echo(i), i, Readers::All, Value::Scalar(0))?;
        }
        Ok(())
    }

    fn spawn(&self, pid: ProcessId, mem: &Memory, n: usize, f: usize) -> Box<dyn ProcessLogic> {
        Box::new(NaiveProcess {
            me: pid.index(),
            n,
            f,
            quorum: (n + 2) / 2,
            flag: cell(mem, CellName::Flag),
            echoes: (1..=n as u32).map(|i| cell(mem, CellName::Echo(ProcessId(i)))).collect(),
            echoed: false,
            help_echo: false,
            op: None,
        })
    }

    fn equivocation(&self, pid: ProcessId, step: u64, _values: &[u64]) -> Option<(CellName, Value)> {
        let bit = Value::Scalar(step % 2);
        if pid == ProcessId::WRITER && step % 4 < 2 {
            Some((CellName::Flag, bit))
        } else {
            Some((CellName::Echo(pid), bit))
        }
    }
}

#[derive(Clone, Debug)]
enum Op {
    SetFlag,
    AwaitEchoes { cursor: usize, last: Vec<bool> },
    ReadFlag,
    EchoThen(u8),
    Count { i: usize, count: usize },
}

struct NaiveProcess {
    me: usize,
    n: usize,
    f: usize,
    quorum: usize,
    flag: CellId,
    echoes: Vec<CellId>,
    echoed: bool,
    help_echo: bool,
    op: Option<Op>,
}

impl ProcessLogic for NaiveProcess {
    fn invoke(&mut self, req: &OpRequest) {
        self.op = Some(match req.kind {
            OpKind::Set => Op::SetFlag,
            OpKind::Test => Op::ReadFlag,
            other => unreachable!("{other:?} on a test-or-set object"),
        });
    }

    fn op_step(&mut self, ctx: &mut StepCtx<'_>) -> Result<Option<OpResult>, RuntimeError> {
        let op = self.op.as_mut().expect("op_step without a running operation");
        let result = match op {
            Op::SetFlag => {
                ctx.write(self.flag, Value::Scalar(1))?;
                *op = Op::AwaitEchoes { cursor: 0, last: vec![false; self.n] };
                None
            }
            Op::AwaitEchoes { cursor, last } => {
                last[*cursor] = set(&ctx.read(self.echoes[*cursor])?);
                *cursor = (*cursor + 1) % self.n;
                (last.iter().filter(|b| **b).count() >= self.quorum).then_some(OpResult::Done)
            }
            Op::ReadFlag => {
                if set(&ctx.read(self.flag)?) {
                    if self.echoed {
                        Some(OpResult::Bit(1))
                    } else {
                        *op = Op::EchoThen(1);
                        None
                    }
                } else {
                    *op = Op::Count { i: 0, count: 0 };
                    None
                }
            }
            Op::EchoThen(bit) => {
                let bit = *bit;
                ctx.write(self.echoes[self.me], Value::Scalar(1))?;
                self.echoed = true;
                Some(OpResult::Bit(bit))
            }
            Op::Count { i, count } => {
                if set(&ctx.read(self.echoes[*i])?) {
                    *count += 1;
                }
                *i += 1;
                if *i < self.n {
                    None
                } else if *count >= self.f && !self.echoed {
                    if *count + 1 >= self.quorum {
                        *op = Op::EchoThen(1);
                        None
                    } else {
                        *op = Op::EchoThen(0);
                        None
                    }
                } else {
                    Some(OpResult::Bit(u8::from(*count >= self.quorum)))
                }
            }
        };
        if result.is_some() {
            self.op = None;
        }
        Ok(result)
    }

    fn help_step(&mut self, ctx: &mut StepCtx<'_>) -> Result<(), RuntimeError> {
        if self.help_echo {
            self.help_echo = false;
            if !self.echoed {
                self.echoed = true;
                ctx.write(self.echoes[self.me], Value::Scalar(1))?;
            }
            return Ok(());
        }
        if set(&ctx.read(self.flag)?) && !self.echoed {
            self.help_echo = true;
        }
        Ok(())
    }
}
