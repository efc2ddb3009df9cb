//! Sticky register: the first written value is echoed, witnessed and then
//! never changes.

use crate::runtime::{
    cell, CellId, CellName, Memory, OpKind, OpRequest, OpResult, ProcessId, ProcessLogic, Protocol,
    Readers, RuntimeError, StepCtx, TypeTag, Value,
};

use super::common::{install_request_cells, processes, AskerTracker, ReaderCells};

#[derive(Clone, Debug, Default)]
pub struct StickyRegister;

impl StickyRegister {
    pub fn new() -> Self {
        StickyRegister
    }
}

fn encode(v: Option<u64>) -> Value {
    v.map_or(Value::Bottom, Value::Scalar)
}

/// Most frequent value among `vals` if it occurs at least `k` times.
fn quorum_value(vals: &[Option<u64>], k: usize) -> Option<u64> {
    let mut seen: Vec<u64> = vals.iter().flatten().copied().collect();
    seen.sort_unstable();
    seen.chunk_by(|a, b| a == b).find(|run| run.len() >= k).map(|run| run[0])
}

impl Protocol for StickyRegister {
    fn type_tag(&self) -> TypeTag {
        TypeTag::Sticky
    }

    fn name(&self) -> String {
        "sticky".into()
    }

    fn v0(&self) -> Option<u64> {
        None
    }

    fn install(&self, mem: &mut Memory, n: usize) -> Result<(), RuntimeError> {
        for i in processes(n) {
            mem.alloc_register(CellName::Echo(i), i, Readers::All, Value::Bottom)?;
            mem.alloc_register(CellName::Witness(i), i, Readers::All, Value::Bottom)?;
        }
        install_request_cells(mem, n, Value::reply(Value::Bottom, 0))
    }

    fn spawn(&self, pid: ProcessId, mem: &Memory, n: usize, f: usize) -> Box<dyn ProcessLogic> {
        Box::new(StickyProcess {
            me: pid,
            n,
            f,
            echoes: processes(n).map(|i| cell(mem, CellName::Echo(i))).collect(),
            witnesses: processes(n).map(|i| cell(mem, CellName::Witness(i))).collect(),
            echo: None,
            witness: None,
            reader: ReaderCells::new(mem, pid, n),
            asks: AskerTracker::new(mem, pid, n),
            scratch: vec![None; n],
            help: Help::Start,
            op: None,
        })
    }

    fn equivocation(&self, pid: ProcessId, step: u64, values: &[u64]) -> Option<(CellName, Value)> {
        let v = Value::Scalar(values[(step / 2) as usize % values.len()]);
        if step.is_multiple_of(2) {
            Some((CellName::Echo(pid), v))
        } else {
            Some((CellName::Witness(pid), v))
        }
    }
}

#[derive(Clone, Debug)]
enum WritePhase {
    Check,
    Echo,
    Await { cursor: usize, last: Vec<Option<u64>> },
}

#[derive(Clone, Debug)]
struct ReadFrame {
    bottom: Vec<bool>,
    vals: Vec<Option<u64>>,
    scan: Option<(Vec<usize>, usize)>,
}

#[derive(Clone, Debug)]
enum Op {
    Write(u64, WritePhase),
    Read(ReadFrame),
}

#[derive(Clone, Copy, Debug)]
enum Help {
    Start,
    EchoWrite(u64),
    EchoScan(usize),
    WitnessWrite(u64, bool),
    Counters(usize),
    WitnessScan(usize),
    Publish(usize),
}

struct StickyProcess {
    me: ProcessId,
    n: usize,
    f: usize,
    echoes: Vec<CellId>,
    witnesses: Vec<CellId>,
    echo: Option<u64>,
    witness: Option<u64>,
    reader: Option<ReaderCells>,
    asks: AskerTracker,
    scratch: Vec<Option<u64>>,
    help: Help,
    op: Option<Op>,
}

impl StickyProcess {
    fn write_step(
        &mut self,
        ctx: &mut StepCtx<'_>,
        v: u64,
        phase: &mut WritePhase,
    ) -> Result<Option<OpResult>, RuntimeError> {
        match phase {
            WritePhase::Check => {
                if !ctx.read(self.echoes[0])?.is_bottom() {
                    return Ok(Some(OpResult::Done));
                }
                *phase = WritePhase::Echo;
            }
            WritePhase::Echo => {
                ctx.write(self.echoes[0], Value::Scalar(v))?;
                self.echo = Some(v);
                *phase = WritePhase::Await { cursor: 0, last: vec![None; self.n] };
            }
            WritePhase::Await { cursor, last } => {
                last[*cursor] = ctx.read(self.witnesses[*cursor])?.as_scalar();
                *cursor = (*cursor + 1) % self.n;
                if last.iter().filter(|w| **w == Some(v)).count() >= self.n - self.f {
                    return Ok(Some(OpResult::Done));
                }
            }
        }
        Ok(None)
    }

    fn read_step(
        &mut self,
        ctx: &mut StepCtx<'_>,
        fr: &mut ReadFrame,
    ) -> Result<Option<OpResult>, RuntimeError> {
        let (n, f) = (self.n, self.f);
        let me = self.reader.as_mut().expect("only readers read");
        let Some((candidates, cursor)) = &mut fr.scan else {
            me.round += 1;
            ctx.write(me.counter, Value::Scalar(me.round))?;
            let s: Vec<usize> =
                (0..n).filter(|&j| !fr.bottom[j] && fr.vals[j].is_none()).collect();
            fr.scan = Some((s, 0));
            return Ok(None);
        };
        if candidates.is_empty() {
            return Ok(None);
        }
        let j = candidates[*cursor];
        let reply = ctx.read(me.replies[j])?;
        let Some((witness, _)) = reply.as_reply().filter(|(_, c)| *c >= me.round) else {
            *cursor = (*cursor + 1) % candidates.len();
            return Ok(None);
        };
        match witness.as_scalar() {
            Some(u) => {
                fr.vals[j] = Some(u);
                fr.bottom.iter_mut().for_each(|b| *b = false);
            }
            None => fr.bottom[j] = true,
        }
        fr.scan = None;
        if let Some(v) = quorum_value(&fr.vals, n - f) {
            return Ok(Some(OpResult::Read(Some(v))));
        }
        if fr.bottom.iter().filter(|b| **b).count() > f {
            return Ok(Some(OpResult::Read(None)));
        }
        Ok(None)
    }
}

impl ProcessLogic for StickyProcess {
    fn invoke(&mut self, req: &OpRequest) {
        self.op = Some(match req.kind {
            OpKind::Write => Op::Write(req.value(), WritePhase::Check),
            OpKind::Read => Op::Read(ReadFrame {
                bottom: vec![false; self.n],
                vals: vec![None; self.n],
                scan: None,
            }),
            other => unreachable!("{other:?} on a sticky register"),
        });
    }

    fn op_step(&mut self, ctx: &mut StepCtx<'_>) -> Result<Option<OpResult>, RuntimeError> {
        let mut op = self.op.take().expect("op_step without a running operation");
        let result = match &mut op {
            Op::Write(v, phase) => self.write_step(ctx, *v, phase)?,
            Op::Read(fr) => self.read_step(ctx, fr)?,
        };
        if result.is_none() {
            self.op = Some(op);
        }
        Ok(result)
    }

    fn help_step(&mut self, ctx: &mut StepCtx<'_>) -> Result<(), RuntimeError> {
        let (n, f) = (self.n, self.f);
        let me = self.me.index();
        loop {
            match self.help {
                Help::Start => {
                    if self.echo.is_none() {
                        self.help = match ctx.read(self.echoes[0])?.as_scalar() {
                            Some(u) if me != 0 => Help::EchoWrite(u),
                            _ => self.after_echo(),
                        };
                        return Ok(());
                    }
                    self.help = self.after_echo();
                }
                Help::EchoWrite(u) => {
                    ctx.write(self.echoes[me], Value::Scalar(u))?;
                    self.echo = Some(u);
                    self.help = self.after_echo();
                    return Ok(());
                }
                Help::EchoScan(i) => {
                    self.scratch[i] = ctx.read(self.echoes[i])?.as_scalar();
                    self.help = if i + 1 < n {
                        Help::EchoScan(i + 1)
                    } else {
                        match quorum_value(&self.scratch, n - f) {
                            Some(v) => Help::WitnessWrite(v, false),
                            None => Help::Counters(0),
                        }
                    };
                    return Ok(());
                }
                Help::WitnessWrite(v, then_publish) => {
                    ctx.write(self.witnesses[me], Value::Scalar(v))?;
                    self.witness = Some(v);
                    self.help = if then_publish { Help::Publish(0) } else { Help::Counters(0) };
                    return Ok(());
                }
                Help::Counters(idx) => {
                    self.help = if !self.asks.poll(ctx, idx)? {
                        Help::Counters(idx + 1)
                    } else if self.asks.askers.is_empty() {
                        Help::Start
                    } else if self.witness.is_none() {
                        Help::WitnessScan(0)
                    } else {
                        Help::Publish(0)
                    };
                    return Ok(());
                }
                Help::WitnessScan(i) => {
                    self.scratch[i] = ctx.read(self.witnesses[i])?.as_scalar();
                    self.help = if i + 1 < n {
                        Help::WitnessScan(i + 1)
                    } else {
                        match quorum_value(&self.scratch, f + 1) {
                            Some(v) => Help::WitnessWrite(v, true),
                            None => Help::Publish(0),
                        }
                    };
                    return Ok(());
                }
                Help::Publish(a) => {
                    let done = self.asks.publish(ctx, a, encode(self.witness))?;
                    self.help = if done { Help::Start } else { Help::Publish(a + 1) };
                    return Ok(());
                }
            }
        }
    }
}

impl StickyProcess {
    fn after_echo(&self) -> Help {
        if self.witness.is_none() {
            Help::EchoScan(0)
        } else {
            Help::Counters(0)
        }
    }
}
