use serde::{Deserialize, Serialize};

use super::error::ConfigError;
use super::op::{OpKind, OpRequest, TypeTag};
use super::value::{ProcessId, Tick};

/// One operation submitted by a process. It is invoked no earlier than tick
/// `at` and only after every entry listed in `after` has responded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadEntry {
    pub process: ProcessId,
    pub op: OpKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arg: Option<u64>,
    #[serde(default)]
    pub at: Tick,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub after: Vec<usize>,
}

impl WorkloadEntry {
    pub fn new(process: ProcessId, req: OpRequest) -> Self {
        WorkloadEntry { process, op: req.kind, arg: req.arg, at: 0, after: Vec::new() }
    }

    pub fn at(mut self, t: Tick) -> Self {
        self.at = t;
        self
    }

    pub fn after(mut self, deps: impl IntoIterator<Item = usize>) -> Self {
        self.after.extend(deps);
        self
    }

    pub fn request(&self) -> OpRequest {
        OpRequest { kind: self.op, arg: self.arg }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Workload {
    pub entries: Vec<WorkloadEntry>,
}

impl Workload {
    pub fn new(entries: Vec<WorkloadEntry>) -> Self {
        Workload { entries }
    }

    pub fn push(&mut self, e: WorkloadEntry) -> usize {
        self.entries.push(e);
        self.entries.len() - 1
    }

    pub fn validate(&self, tag: TypeTag, n: usize) -> Result<(), ConfigError> {
        for (i, e) in self.entries.iter().enumerate() {
            validate_entry(i, e, tag, n)?;
        }
        Ok(())
    }
}

/// Writer-only operations belong to p1, the rest to p2..pn.
pub(crate) fn validate_entry(
    i: usize,
    e: &WorkloadEntry,
    tag: TypeTag,
    n: usize,
) -> Result<(), ConfigError> {
    let bad = |msg: String| ConfigError::Workload(format!("entry {i}: {msg}"));
    if e.process.0 < 1 || e.process.0 as usize > n {
        return Err(bad(format!("unknown process {}", e.process)));
    }
    if !tag.allows(e.op) {
        return Err(bad(format!("{:?} is not an operation of the {tag} type", e.op)));
    }
    let writer = e.process == ProcessId::WRITER;
    if TypeTag::writer_only(e.op) != writer {
        return Err(bad(format!("{:?} cannot be invoked by {}", e.op, e.process)));
    }
    if e.op.takes_arg() != e.arg.is_some() {
        return Err(bad(format!("{:?} argument mismatch", e.op)));
    }
    if let Some(d) = e.after.iter().find(|d| **d >= i) {
        return Err(bad(format!("dependency {d} is not an earlier entry")));
    }
    Ok(())
}
