//! Signature-free Byzantine-tolerant single-writer multi-reader registers
//! (verifiable, authenticated and sticky) over a deterministic simulated
//! shared memory, with Byzantine linearizability checking and test-or-set
//! reductions.

pub mod adversary;
pub mod histories;
pub mod registers;
pub mod runtime;
pub mod tos;
pub mod workloads;
