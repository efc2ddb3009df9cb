//! The Verify loop shared by the verifiable and authenticated registers,
//! and the single-quorum variant used as a negative control.

use serde::{Deserialize, Serialize};

use crate::runtime::{RuntimeError, StepCtx, Tick, Value};

use super::common::ReaderCells;

/// Which Verify procedure a reader runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyVariant {
    #[default]
    Faithful,
    /// One quorum of `2f + 1` fresh replies, a single retry in the
    /// ambiguous band, then false. Does not guarantee relay.
    Flawed,
}

#[derive(Clone, Debug)]
enum Phase {
    Bump,
    Scan { candidates: Vec<usize>, cursor: usize },
}

/// State of one Verify(v) execution.
#[derive(Clone, Debug)]
pub(crate) struct VerifyFrame {
    value: u64,
    set0: Vec<bool>,
    set1: Vec<bool>,
    n0: usize,
    n1: usize,
    phase: Phase,
    pub start: Option<Tick>,
}

impl VerifyFrame {
    pub fn new(value: u64, n: usize) -> Self {
        VerifyFrame {
            value,
            set0: vec![false; n],
            set1: vec![false; n],
            n0: 0,
            n1: 0,
            phase: Phase::Bump,
            start: None,
        }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn step(
        &mut self,
        ctx: &mut StepCtx<'_>,
        me: &mut ReaderCells,
        n: usize,
        f: usize,
    ) -> Result<Option<bool>, RuntimeError> {
        match &mut self.phase {
            Phase::Bump => {
                self.check_invariants(ctx, n, f);
                me.round += 1;
                ctx.write(me.counter, Value::Scalar(me.round))?;
                self.start.get_or_insert(ctx.now());
                let candidates = (0..n).filter(|&j| !self.set0[j] && !self.set1[j]).collect();
                self.phase = Phase::Scan { candidates, cursor: 0 };
                Ok(None)
            }
            Phase::Scan { candidates, cursor } => {
                if candidates.is_empty() {
                    return Ok(None);
                }
                let j = candidates[*cursor];
                let reply = ctx.read(me.replies[j])?;
                let Some((witness, _)) = reply.as_reply().filter(|(_, c)| *c >= me.round) else {
                    *cursor = (*cursor + 1) % candidates.len();
                    return Ok(None);
                };
                if witness.set_contains(self.value) {
                    self.set1[j] = true;
                    self.n1 += 1;
                    self.set0.iter_mut().for_each(|b| *b = false);
                    self.n0 = 0;
                } else {
                    self.set0[j] = true;
                    self.n0 += 1;
                }
                if self.n1 >= n - f {
                    return Ok(Some(true));
                }
                if self.n0 > f {
                    return Ok(Some(false));
                }
                self.phase = Phase::Bump;
                Ok(None)
            }
        }
    }

    fn check_invariants(&self, ctx: &mut StepCtx<'_>, n: usize, f: usize) {
        if self.set0.iter().zip(&self.set1).any(|(a, b)| *a && *b) {
            ctx.report_violation("verify: set0 and set1 intersect".into());
        }
        if self.n1 >= n - f {
            ctx.report_violation(format!("verify: |set1| = {} at loop head", self.n1));
        }
        if self.n0 > f {
            ctx.report_violation(format!("verify: |set0| = {} at loop head", self.n0));
        }
    }
}

/// Single-quorum Verify: waits for `2f + 1` distinct fresh replies and
/// decides on the number that contain the value.
#[derive(Clone, Debug)]
pub(crate) struct FlawedVerifyFrame {
    value: u64,
    retried: bool,
    replied: Vec<Option<bool>>,
    count: usize,
    cursor: usize,
    bumped: bool,
}

impl FlawedVerifyFrame {
    pub fn new(value: u64, n: usize) -> Self {
        FlawedVerifyFrame {
            value,
            retried: false,
            replied: vec![None; n],
            count: 0,
            cursor: 0,
            bumped: false,
        }
    }

    pub fn step(
        &mut self,
        ctx: &mut StepCtx<'_>,
        me: &mut ReaderCells,
        n: usize,
        f: usize,
    ) -> Result<Option<bool>, RuntimeError> {
        if !self.bumped {
            me.round += 1;
            ctx.write(me.counter, Value::Scalar(me.round))?;
            self.replied.iter_mut().for_each(|r| *r = None);
            self.count = 0;
            self.cursor = 0;
            self.bumped = true;
            return Ok(None);
        }
        while self.replied[self.cursor].is_some() {
            self.cursor = (self.cursor + 1) % n;
        }
        let j = self.cursor;
        self.cursor = (self.cursor + 1) % n;
        let reply = ctx.read(me.replies[j])?;
        let Some((witness, _)) = reply.as_reply().filter(|(_, c)| *c >= me.round) else {
            return Ok(None);
        };
        self.replied[j] = Some(witness.set_contains(self.value));
        self.count += 1;
        if self.count < 2 * f + 1 {
            return Ok(None);
        }
        let yes = self.replied.iter().filter(|r| **r == Some(true)).count();
        if yes > 2 * f {
            return Ok(Some(true));
        }
        if yes < f + 1 || self.retried {
            return Ok(Some(false));
        }
        self.retried = true;
        self.bumped = false;
        Ok(None)
    }
}

/// Either Verify procedure.
#[derive(Clone, Debug)]
pub(crate) enum AnyVerify {
    Faithful(VerifyFrame),
    Flawed(FlawedVerifyFrame),
}

impl AnyVerify {
    pub fn new(variant: VerifyVariant, value: u64, n: usize) -> Self {
        match variant {
            VerifyVariant::Faithful => AnyVerify::Faithful(VerifyFrame::new(value, n)),
            VerifyVariant::Flawed => AnyVerify::Flawed(FlawedVerifyFrame::new(value, n)),
        }
    }

    pub fn step(
        &mut self,
        ctx: &mut StepCtx<'_>,
        me: &mut ReaderCells,
        n: usize,
        f: usize,
    ) -> Result<Option<bool>, RuntimeError> {
        match self {
            AnyVerify::Faithful(v) => v.step(ctx, me, n, f),
            AnyVerify::Flawed(v) => v.step(ctx, me, n, f),
        }
    }
}
