use serde::{Deserialize, Serialize};

use crate::runtime::{OpResult, Tick};

use super::event::Operation;
use super::sequential::LinOp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
}

/// Evidence attached to a verdict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    None,
    /// A legal sequential order of the (extended) correct history.
    Linearization(Vec<LinOp>),
    /// Operations that jointly violate a property.
    Conflict { description: String, ops: Vec<Operation> },
    /// No tick can host the operation that a true check requires: every
    /// false check starts at or after `t0`, which is not before `t1`.
    EmptyWindow { value: Option<u64>, t0: Tick, t1: Tick },
    /// The operation at `index` returned something other than `expected`.
    SequentialViolation { index: usize, op: LinOp, expected: Option<OpResult> },
    /// Exhaustive search found no linearization.
    Exhausted { explored: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub outcome: Outcome,
    pub witness: Witness,
}

impl Verdict {
    pub fn pass(check: &str, witness: Witness) -> Self {
        Verdict { check: check.into(), outcome: Outcome::Pass, witness }
    }

    pub fn fail(check: &str, witness: Witness) -> Self {
        Verdict { check: check.into(), outcome: Outcome::Fail, witness }
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    pub fn renamed(mut self, check: &str) -> Self {
        self.check = check.into();
        self
    }
}
