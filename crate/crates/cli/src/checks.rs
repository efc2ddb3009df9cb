//! Applying the history checkers to a trace.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use byzreg::histories::{
    byz_linearize_bruteforce, byz_linearize_constructive, check_observations, CheckError, HistoryTrace,
    Verdict,
};

use crate::scenario::Check;

/// The verdicts of one requested check, or why it could not be applied.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: Check,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refused: Option<String>,
    pub verdicts: Vec<Verdict>,
}

impl CheckReport {
    fn done(check: Check, verdicts: Vec<Verdict>) -> Self {
        CheckReport { check, refused: None, verdicts }
    }

    fn refused(check: Check, why: impl ToString) -> Self {
        CheckReport { check, refused: Some(why.to_string()), verdicts: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.refused.is_none() && self.verdicts.iter().all(Verdict::passed)
    }

    pub fn failed(&self) -> bool {
        self.verdicts.iter().any(|v| !v.passed())
    }
}

pub fn run_check(trace: &HistoryTrace, check: Check, max_synth: usize) -> CheckReport {
    match check {
        Check::Observations => match check_observations(trace) {
            Ok(vs) => CheckReport::done(check, vs),
            Err(e) => CheckReport::refused(check, e),
        },
        Check::Constructive => match byz_linearize_constructive(trace) {
            Ok(v) => CheckReport::done(check, vec![v]),
            // Without recorded linearization points only the search can decide.
            Err(e @ CheckError::MissingAnnotation(_)) => match byz_linearize_bruteforce(trace, max_synth) {
                Ok(v) => CheckReport::done(check, vec![v]),
                Err(_) => CheckReport::refused(check, e),
            },
            Err(e) => CheckReport::refused(check, e),
        },
        Check::Bruteforce => match byz_linearize_bruteforce(trace, max_synth) {
            Ok(v) => CheckReport::done(check, vec![v]),
            Err(e) => CheckReport::refused(check, e),
        },
    }
}

pub fn run_checks(trace: &HistoryTrace, checks: &BTreeSet<Check>, max_synth: usize) -> Vec<CheckReport> {
    checks.iter().map(|c| run_check(trace, *c, max_synth)).collect()
}
