use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::error::ConfigError;
use super::value::{ProcessId, Tick};

pub const DEFAULT_BUDGET: Tick = 500_000;

/// How the scheduler orders step machines within a round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulePolicy {
    /// Fixed order, one step per machine per round.
    RoundRobin,
    /// Fresh seeded permutation every round, one step per machine.
    Shuffled,
    /// Seeded permutation with several consecutive steps per machine,
    /// sized to stay inside the fairness window.
    Bursty,
    /// Re-execute a recorded schedule, then continue as `Shuffled`.
    Replay(Vec<ScheduleEntry>),
}

/// One of the two step machines of a process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Op,
    Help,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Machine {
    pub process: ProcessId,
    pub slot: Slot,
}

/// A step that produced at least one event, keyed by its first tick.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub tick: Tick,
    pub machine: Machine,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n: usize,
    pub f: usize,
    pub correct: BTreeSet<ProcessId>,
    pub seed: u64,
    pub budget: Tick,
    pub fairness_window: Tick,
    pub policy: SchedulePolicy,
}

impl SystemConfig {
    /// All processes correct, shuffled schedule, default budget and window.
    pub fn new(n: usize, f: usize, seed: u64) -> Self {
        SystemConfig {
            n,
            f,
            correct: (1..=n as u32).map(ProcessId).collect(),
            seed,
            budget: DEFAULT_BUDGET,
            fairness_window: default_window(n),
            policy: SchedulePolicy::Shuffled,
        }
    }

    pub fn with_byzantine<I: IntoIterator<Item = ProcessId>>(mut self, byz: I) -> Self {
        for p in byz {
            self.correct.remove(&p);
        }
        self
    }

    pub fn processes(&self) -> impl Iterator<Item = ProcessId> {
        (1..=self.n as u32).map(ProcessId)
    }

    pub fn is_correct(&self, p: ProcessId) -> bool {
        self.correct.contains(&p)
    }

    pub fn byzantine(&self) -> BTreeSet<ProcessId> {
        self.processes().filter(|p| !self.is_correct(*p)).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let (n, f) = (self.n, self.f);
        if f < 1 || f >= n {
            return Err(ConfigError::Resilience { n, f });
        }
        if let Some(p) = self.correct.iter().find(|p| p.0 < 1 || p.0 as usize > n) {
            return Err(ConfigError::UnknownProcess(*p));
        }
        if self.correct.len() < n - f {
            return Err(ConfigError::TooFewCorrect { got: self.correct.len(), need: n - f });
        }
        if self.fairness_window < n as Tick {
            return Err(ConfigError::Window { window: self.fairness_window, n });
        }
        if self.budget == 0 {
            return Err(ConfigError::Budget);
        }
        Ok(())
    }
}

/// A shuffled round takes at most four ticks per process, so any machine is
/// selected again within two rounds.
pub fn default_window(n: usize) -> Tick {
    8 * n as Tick
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_resilience() {
        assert!(SystemConfig::new(3, 0, 0).validate().is_err());
        assert!(SystemConfig::new(3, 3, 0).validate().is_err());
        assert!(SystemConfig::new(3, 1, 0).validate().is_ok());
    }

    #[test]
    fn rejects_too_many_byzantine() {
        let c = SystemConfig::new(4, 1, 0).with_byzantine([ProcessId(3), ProcessId(4)]);
        assert_eq!(c.validate(), Err(ConfigError::TooFewCorrect { got: 2, need: 3 }));
    }

    #[test]
    fn rejects_small_window_and_budget() {
        let mut c = SystemConfig::new(4, 1, 0);
        c.fairness_window = 3;
        assert!(matches!(c.validate(), Err(ConfigError::Window { .. })));
        let mut c = SystemConfig::new(4, 1, 0);
        c.budget = 0;
        assert_eq!(c.validate(), Err(ConfigError::Budget));
    }
}
