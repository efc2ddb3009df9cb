//! Deterministic simulated shared memory, processes and scheduler.

mod config;
mod error;
mod memory;
mod op;
mod process;
mod system;
mod value;
mod workload;

pub use config::{default_window, Machine, SchedulePolicy, ScheduleEntry, Slot, SystemConfig, DEFAULT_BUDGET};
pub use error::{ConfigError, RuntimeError};
pub use memory::{Access, AccessKind, CellId, Memory, Readers, RegisterCell};
pub use op::{OpKey, OpKind, OpRequest, OpResult, TypeTag};
pub use process::{cell, InvariantViolation, ProcessLogic, Protocol, StepCtx};
pub use system::{create_system, run, RunOutcome, RunStatus, Simulation, System};
pub use value::{CellName, ProcessId, Tick, Value};
pub use workload::{Workload, WorkloadEntry};
