//! Operation requests, results and the object types they apply to.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::value::{ProcessId, Tick};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeTag {
    Verifiable,
    Authenticated,
    Sticky,
    TestOrSet,
}

impl TypeTag {
    pub fn allows(self, kind: OpKind) -> bool {
        use OpKind::*;
        match self {
            TypeTag::Verifiable => matches!(kind, Write | Read | Sign | Verify),
            TypeTag::Authenticated => matches!(kind, Write | Read | Verify),
            TypeTag::Sticky => matches!(kind, Write | Read),
            TypeTag::TestOrSet => matches!(kind, Set | Test),
        }
    }

    /// Whether only the writer (setter) may invoke `kind`.
    pub fn writer_only(kind: OpKind) -> bool {
        matches!(kind, OpKind::Write | OpKind::Sign | OpKind::Set)
    }
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TypeTag::Verifiable => "verifiable",
            TypeTag::Authenticated => "authenticated",
            TypeTag::Sticky => "sticky",
            TypeTag::TestOrSet => "test_or_set",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Write,
    Read,
    Sign,
    Verify,
    Set,
    Test,
}

impl OpKind {
    pub fn takes_arg(self) -> bool {
        matches!(self, OpKind::Write | OpKind::Sign | OpKind::Verify)
    }
}

/// An operation as submitted by the workload.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpRequest {
    pub kind: OpKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arg: Option<u64>,
}

impl OpRequest {
    pub fn write(v: u64) -> Self {
        OpRequest { kind: OpKind::Write, arg: Some(v) }
    }
    pub fn read() -> Self {
        OpRequest { kind: OpKind::Read, arg: None }
    }
    pub fn sign(v: u64) -> Self {
        OpRequest { kind: OpKind::Sign, arg: Some(v) }
    }
    pub fn verify(v: u64) -> Self {
        OpRequest { kind: OpKind::Verify, arg: Some(v) }
    }
    pub fn set() -> Self {
        OpRequest { kind: OpKind::Set, arg: None }
    }
    pub fn test() -> Self {
        OpRequest { kind: OpKind::Test, arg: None }
    }

    pub fn value(&self) -> u64 {
        self.arg.unwrap_or_default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpResult {
    Done,
    Success,
    Fail,
    True,
    False,
    /// A Read's return value. `None` is ⊥.
    Read(Option<u64>),
    Bit(u8),
}

impl OpResult {
    pub fn from_bool(b: bool) -> Self {
        if b {
            OpResult::True
        } else {
            OpResult::False
        }
    }
}

impl fmt::Display for OpResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpResult::Done => f.write_str("done"),
            OpResult::Success => f.write_str("success"),
            OpResult::Fail => f.write_str("fail"),
            OpResult::True => f.write_str("true"),
            OpResult::False => f.write_str("false"),
            OpResult::Read(Some(v)) => write!(f, "{v}"),
            OpResult::Read(None) => f.write_str("⊥"),
            OpResult::Bit(b) => write!(f, "{b}"),
        }
    }
}

/// Identifies an operation instance: a process runs one operation at a time,
/// so the invocation tick is unique per process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OpKey {
    pub process: ProcessId,
    pub invoked: Tick,
}
