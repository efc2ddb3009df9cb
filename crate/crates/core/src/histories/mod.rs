//! Histories and their checkers.

mod bruteforce;
mod constructive;
mod event;
mod jsonl;
mod observations;
mod sequential;
mod verdict;

pub use bruteforce::{byz_linearize_bruteforce, BRUTE_FORCE_LIMIT};
pub use constructive::{byz_linearize_constructive, windows, CheckError, Window, CHECK};
pub use event::{Annotation, Event, EventKind, HistoryTrace, Operation, TraceError, TraceMeta};
pub use jsonl::{read_jsonl, to_jsonl_string, write_jsonl, JsonlError};
pub use observations::{check_observations, check_saver};
pub use sequential::{check_sequential, LinOp, SpecState};
pub use verdict::{Outcome, Verdict, Witness};
