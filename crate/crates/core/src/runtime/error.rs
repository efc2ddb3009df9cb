use thiserror::Error;

use super::memory::{AccessKind, CellId};
use super::value::{CellName, ProcessId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("need 1 <= f < n, got n={n} f={f}")]
    Resilience { n: usize, f: usize },
    #[error("correct set has {got} processes, need at least n-f={need}")]
    TooFewCorrect { got: usize, need: usize },
    #[error("process {0} is outside 1..=n")]
    UnknownProcess(ProcessId),
    #[error("fairness window {window} is smaller than n={n}")]
    Window { window: u64, n: usize },
    #[error("step budget must be positive")]
    Budget,
    #[error("invalid workload: {0}")]
    Workload(String),
    #[error("invalid adversary script: {0}")]
    Adversary(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuntimeError {
    #[error("{process} may not {kind:?} {cell}")]
    AccessViolation {
        process: ProcessId,
        cell: CellName,
        kind: AccessKind,
    },
    #[error("no register with id {0:?}")]
    UnknownCell(CellId),
    #[error("register {0} allocated twice")]
    DuplicateCell(CellName),
    #[error("{0} took more than one shared access in a single step")]
    MultipleAccesses(ProcessId),
    #[error(transparent)]
    Config(#[from] ConfigError),
}
