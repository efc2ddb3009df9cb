//! Shared-memory substrate: atomic SWMR/SWSR registers with enforced
//! ownership and reader sets, and an access log.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::error::RuntimeError;
use super::value::{CellName, ProcessId, Tick, Value};

/// Handle to an allocated register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Readers {
    All,
    Only(BTreeSet<ProcessId>),
}

impl Readers {
    pub fn single(p: ProcessId) -> Self {
        Readers::Only([p].into_iter().collect())
    }

    fn allows(&self, p: ProcessId) -> bool {
        match self {
            Readers::All => true,
            Readers::Only(s) => s.contains(&p),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RegisterCell {
    pub name: CellName,
    pub owner: ProcessId,
    pub readers: Readers,
    pub initial: Value,
    pub value: Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessKind {
    Read,
    Write,
}

/// One entry of the access log. Writes carry the value written.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Access {
    pub tick: Tick,
    pub process: ProcessId,
    pub cell: CellName,
    pub kind: AccessKind,
    pub value: Option<Value>,
}

/// The register file plus the global event clock.
#[derive(Clone, Debug, Default)]
pub struct Memory {
    cells: Vec<RegisterCell>,
    names: BTreeMap<CellName, CellId>,
    clock: Tick,
    log: Vec<Access>,
    log_reads: bool,
}

impl Memory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Also record reads in the access log (writes are always recorded).
    pub fn set_log_reads(&mut self, on: bool) {
        self.log_reads = on;
    }

    pub fn alloc_register(
        &mut self,
        name: CellName,
        owner: ProcessId,
        readers: Readers,
        initial: Value,
    ) -> Result<CellId, RuntimeError> {
        if self.names.contains_key(&name) {
            return Err(RuntimeError::DuplicateCell(name));
        }
        let id = CellId(self.cells.len());
        self.cells.push(RegisterCell {
            name,
            owner,
            readers,
            value: initial.clone(),
            initial,
        });
        self.names.insert(name, id);
        Ok(id)
    }

    pub fn lookup(&self, name: CellName) -> Option<CellId> {
        self.names.get(&name).copied()
    }

    pub fn cell(&self, id: CellId) -> &RegisterCell {
        &self.cells[id.0]
    }

    pub fn cells(&self) -> impl Iterator<Item = (CellId, &RegisterCell)> {
        self.cells.iter().enumerate().map(|(i, c)| (CellId(i), c))
    }

    pub fn clock(&self) -> Tick {
        self.clock
    }

    /// Moves the clock forward so that the next event gets tick `t + 1`.
    /// Never moves it backwards.
    pub fn advance_clock_to(&mut self, t: Tick) {
        self.clock = self.clock.max(t);
    }

    /// Consumes one tick for a non-access event.
    pub fn next_tick(&mut self) -> Tick {
        self.clock += 1;
        self.clock
    }

    pub fn atomic_read(&mut self, id: CellId, reader: ProcessId) -> Result<Value, RuntimeError> {
        let cell = self.cells.get(id.0).ok_or(RuntimeError::UnknownCell(id))?;
        if !cell.readers.allows(reader) {
            return Err(RuntimeError::AccessViolation {
                process: reader,
                cell: cell.name,
                kind: AccessKind::Read,
            });
        }
        let value = cell.value.clone();
        self.clock += 1;
        if self.log_reads {
            self.log.push(Access {
                tick: self.clock,
                process: reader,
                cell: cell.name,
                kind: AccessKind::Read,
                value: None,
            });
        }
        Ok(value)
    }

    pub fn atomic_write(
        &mut self,
        id: CellId,
        writer: ProcessId,
        value: Value,
    ) -> Result<(), RuntimeError> {
        let cell = self.cells.get_mut(id.0).ok_or(RuntimeError::UnknownCell(id))?;
        if cell.owner != writer {
            return Err(RuntimeError::AccessViolation {
                process: writer,
                cell: cell.name,
                kind: AccessKind::Write,
            });
        }
        self.clock += 1;
        self.log.push(Access {
            tick: self.clock,
            process: writer,
            cell: cell.name,
            kind: AccessKind::Write,
            value: Some(value.clone()),
        });
        cell.value = value;
        Ok(())
    }

    pub fn access_log(&self) -> &[Access] {
        &self.log
    }

    /// Current contents of every register, keyed by name.
    pub fn snapshot(&self) -> BTreeMap<CellName, Value> {
        self.cells.iter().map(|c| (c.name, c.value.clone())).collect()
    }

    /// Cells owned by `p` with their initial values.
    pub fn owned_cells(&self, p: ProcessId) -> Vec<(CellId, Value)> {
        self.cells()
            .filter(|(_, c)| c.owner == p)
            .map(|(id, c)| (id, c.initial.clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(i: u32) -> ProcessId {
        ProcessId(i)
    }

    #[test]
    fn ownership_is_enforced() {
        let mut m = Memory::new();
        let c = m
            .alloc_register(CellName::Witness(p(2)), p(2), Readers::All, Value::empty_set())
            .unwrap();
        assert!(m.atomic_write(c, p(3), Value::Scalar(1)).is_err());
        m.atomic_write(c, p(2), Value::Scalar(1)).unwrap();
        assert_eq!(m.atomic_read(c, p(4)).unwrap(), Value::Scalar(1));
        assert_eq!(m.clock(), 2);
    }

    #[test]
    fn reader_set_is_enforced() {
        let mut m = Memory::new();
        let name = CellName::Reply { from: p(1), to: p(2) };
        let c = m
            .alloc_register(name, p(1), Readers::single(p(2)), Value::reply(Value::empty_set(), 0))
            .unwrap();
        assert!(m.atomic_read(c, p(3)).is_err());
        assert!(m.atomic_read(c, p(2)).is_ok());
        // A rejected access does not consume a tick.
        assert_eq!(m.clock(), 1);
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut m = Memory::new();
        m.alloc_register(CellName::Star, p(1), Readers::All, Value::Scalar(0)).unwrap();
        assert!(m.alloc_register(CellName::Star, p(1), Readers::All, Value::Scalar(0)).is_err());
    }
}
