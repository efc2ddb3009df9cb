//! Register contents, process identifiers and cell names.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Global event-clock value. Every shared access, invocation and response
/// consumes exactly one tick.
pub type Tick = u64;

/// 1-based process identifier. `p1` is always the writer (or setter).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessId(pub u32);

impl ProcessId {
    pub const WRITER: ProcessId = ProcessId(1);

    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(i: usize) -> Self {
        ProcessId(i as u32 + 1)
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// Contents of a shared register.
///
/// Pairs order lexicographically, which is the order the authenticated
/// register uses to pick its latest write.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    Bottom,
    Scalar(u64),
    Set(BTreeSet<u64>),
    Pairs(BTreeSet<(u64, u64)>),
    Reply { witness: Box<Value>, round: u64 },
}

impl Value {
    pub fn empty_set() -> Self {
        Value::Set(BTreeSet::new())
    }

    pub fn set_of<I: IntoIterator<Item = u64>>(items: I) -> Self {
        Value::Set(items.into_iter().collect())
    }

    pub fn reply(witness: Value, round: u64) -> Self {
        Value::Reply { witness: Box::new(witness), round }
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, Value::Bottom)
    }

    pub fn as_scalar(&self) -> Option<u64> {
        match self {
            Value::Scalar(v) => Some(*v),
            _ => None,
        }
    }

    /// The set view of a witness register. Anything else reads as empty.
    pub fn as_set(&self) -> Option<&BTreeSet<u64>> {
        match self {
            Value::Set(s) => Some(s),
            _ => None,
        }
    }

    pub fn set_contains(&self, v: u64) -> bool {
        self.as_set().is_some_and(|s| s.contains(&v))
    }

    /// Splits a reply tuple into its witness and round.
    pub fn as_reply(&self) -> Option<(&Value, u64)> {
        match self {
            Value::Reply { witness, round } => Some((witness, *round)),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bottom => write!(f, "⊥"),
            Value::Scalar(v) => write!(f, "{v}"),
            Value::Set(s) => {
                write!(f, "{{")?;
                for (i, v) in s.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "}}")
            }
            Value::Pairs(s) => {
                write!(f, "{{")?;
                for (i, (l, v)) in s.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "<{l},{v}>")?;
                }
                write!(f, "}}")
            }
            Value::Reply { witness, round } => write!(f, "<{witness},{round}>"),
        }
    }
}

/// Logical name of a register in a protocol's layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellName {
    /// The writer's current-value register.
    Star,
    /// The witness register owned by a process.
    Witness(ProcessId),
    /// Reply register written by `from`, read only by `to`.
    Reply { from: ProcessId, to: ProcessId },
    /// A reader's request counter.
    Counter(ProcessId),
    /// Echo register of a process.
    Echo(ProcessId),
    /// The setter's flag.
    Flag,
}

impl CellName {
    /// The only process allowed to write this register.
    pub fn owner(self) -> ProcessId {
        match self {
            CellName::Star | CellName::Flag => ProcessId::WRITER,
            CellName::Witness(p) | CellName::Counter(p) | CellName::Echo(p) => p,
            CellName::Reply { from, .. } => from,
        }
    }
}

impl fmt::Display for CellName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellName::Star => write!(f, "R*"),
            CellName::Witness(p) => write!(f, "R[{}]", p.0),
            CellName::Reply { from, to } => write!(f, "R[{},{}]", from.0, to.0),
            CellName::Counter(p) => write!(f, "C[{}]", p.0),
            CellName::Echo(p) => write!(f, "E[{}]", p.0),
            CellName::Flag => write!(f, "F"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_order_lexicographically() {
        let pairs: BTreeSet<(u64, u64)> = [(2, 1), (1, 9), (2, 0)].into_iter().collect();
        assert_eq!(pairs.iter().next_back(), Some(&(2, 1)));
    }

    #[test]
    fn value_json_round_trip() {
        let vals = [
            Value::Bottom,
            Value::Scalar(3),
            Value::set_of([1, 2]),
            Value::Pairs([(0, 0), (1, 5)].into_iter().collect()),
            Value::reply(Value::set_of([4]), 7),
        ];
        for v in vals {
            let s = serde_json::to_string(&v).unwrap();
            let back: Value = serde_json::from_str(&s).unwrap();
            assert_eq!(v, back);
        }
    }

    #[test]
    fn cell_owner() {
        let c = CellName::Reply { from: ProcessId(3), to: ProcessId(2) };
        assert_eq!(c.owner(), ProcessId(3));
        assert_eq!(CellName::Star.owner(), ProcessId::WRITER);
    }
}
