//! Seeded random workloads for sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adversary::{EQUIVOCATION_VALUES, FORGED_VALUE};
use crate::registers::V0;
use crate::runtime::{OpRequest, ProcessId, Tick, TypeTag, Workload, WorkloadEntry};

/// Values correct writers use.
pub const WRITE_VALUES: [u64; 3] = [11, 22, 33];

/// A workload of `size` operations for `n` processes: roughly a third from
/// the writer, the rest spread over readers, with invocation times spread
/// over the first few thousand ticks.
pub fn random_workload(tag: TypeTag, n: usize, seed: u64, size: usize) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let spread: Tick = 300 * n as Tick;
    let mut w = Workload::default();
    let writer_ops = match tag {
        TypeTag::TestOrSet => 1,
        _ => (size / 3).max(1),
    };
    let mut written: Vec<u64> = Vec::new();
    let mut t = rng.gen_range(0..spread / 2);
    for i in 0..writer_ops {
        let req = match tag {
            TypeTag::Verifiable if i % 2 == 1 => {
                if rng.gen_bool(0.2) {
                    OpRequest::sign(FORGED_VALUE)
                } else {
                    OpRequest::sign(*written.last().expect("a write came first"))
                }
            }
            TypeTag::TestOrSet => OpRequest::set(),
            _ => {
                let v = WRITE_VALUES[written.len() % WRITE_VALUES.len()];
                written.push(v);
                OpRequest::write(v)
            }
        };
        w.push(WorkloadEntry::new(ProcessId::WRITER, req).at(t));
        t += rng.gen_range(0..spread / 4);
    }
    let mut candidates: Vec<u64> = WRITE_VALUES.to_vec();
    candidates.push(FORGED_VALUE);
    candidates.extend(EQUIVOCATION_VALUES);
    if tag == TypeTag::Authenticated {
        candidates.push(V0);
    }
    for _ in writer_ops..size {
        let p = ProcessId(rng.gen_range(2..=n as u32));
        let req = match tag {
            TypeTag::Verifiable | TypeTag::Authenticated if rng.gen_bool(0.6) => {
                OpRequest::verify(candidates[rng.gen_range(0..candidates.len())])
            }
            TypeTag::TestOrSet => OpRequest::test(),
            _ => OpRequest::read(),
        };
        w.push(WorkloadEntry::new(p, req).at(rng.gen_range(0..spread)));
    }
    w
}
