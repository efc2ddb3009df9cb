//! Scenario runner for the byzreg simulator: single runs, seed sweeps,
//! offline trace checking and the test-or-set attack.

pub mod checks;
pub mod error;
pub mod scenario;

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use byzreg::histories::{read_jsonl, write_jsonl, HistoryTrace};
use byzreg::runtime::{create_system, InvariantViolation, RunStatus, Simulation, Tick};
use byzreg::tos::{run_attack, AttackReport};

pub use checks::{run_check, run_checks, CheckReport};
pub use error::CliError;
pub use scenario::{Check, Mode, Overrides, Scenario};

/// Overall result of a run, a sweep or a check, in order of precedence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    /// A check could not be applied to the trace.
    Refused,
    Fail,
    NonTerminating,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Refused => 2,
            Status::NonTerminating => 3,
        }
    }
}

/// Exit code for errors raised before anything ran.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub protocol: String,
    pub seed: u64,
    pub run: RunStatus,
    pub final_tick: Tick,
    pub status: Status,
    pub checks: Vec<CheckReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub invariant_violations: Vec<InvariantViolation>,
}

fn status_of(run: RunStatus, checks: &[CheckReport], violations: &[InvariantViolation]) -> Status {
    if run != RunStatus::Completed {
        Status::NonTerminating
    } else if !violations.is_empty() || checks.iter().any(CheckReport::failed) {
        Status::Fail
    } else if checks.iter().any(|c| c.refused.is_some()) {
        Status::Refused
    } else {
        Status::Pass
    }
}

/// Simulates a run-mode scenario and checks its trace.
pub fn execute(s: &Scenario) -> Result<(RunReport, HistoryTrace), CliError> {
    if s.mode != Mode::Run {
        return Err(CliError::Invalid("scenario is not in run mode".into()));
    }
    let config = s.config()?;
    let (script, _) = s.adversary()?;
    let protocol = s.protocol();
    let name = protocol.name();
    let mut sim = Simulation::new(create_system(config)?, protocol, &s.workload(), &script)?;
    let run = sim.run()?;
    let out = sim.into_outcome(run);
    let checks = run_checks(&out.trace, &s.checks, s.max_synth);
    let report = RunReport {
        scenario: s.name.clone(),
        protocol: name,
        seed: s.system.seed,
        run,
        final_tick: out.final_tick,
        status: status_of(run, &checks, &out.violations),
        checks,
        invariant_violations: out.violations,
    };
    Ok((report, out.trace))
}

pub fn execute_attack(s: &Scenario) -> Result<AttackReport, CliError> {
    let backend = match (s.mode, s.backend) {
        (Mode::Attack, Some(b)) => b,
        _ => return Err(CliError::Invalid("scenario is not an attack".into())),
    };
    Ok(run_attack(backend, s.system.n, s.system.f, s.system.seed)?)
}

/// Where a scenario's files go: the flag, else the scenario's own setting,
/// else `out/<name>`.
pub fn output_dir(s: &Scenario, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| s.output.clone())
        .unwrap_or_else(|| Path::new("out").join(if s.name.is_empty() { "scenario" } else { &s.name }))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.into(), e))
}

pub fn write_trace(path: &Path, trace: &HistoryTrace) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::Io(path.into(), e))?;
    write_jsonl(trace, BufWriter::new(file))?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<HistoryTrace, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Io(path.into(), e))?;
    Ok(read_jsonl(std::io::BufReader::new(file))?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(path.into(), e))
}

/// Writes `trace.jsonl` and `verdict.json` into `dir`.
pub fn write_run(dir: &Path, report: &RunReport, trace: &HistoryTrace) -> Result<(), CliError> {
    create_dir(dir)?;
    write_trace(&dir.join("trace.jsonl"), trace)?;
    write_json(&dir.join("verdict.json"), report)
}

/// Writes `report.json` and one trace per attack phase into `dir`.
pub fn write_attack(dir: &Path, report: &AttackReport) -> Result<(), CliError> {
    create_dir(dir)?;
    for phase in &report.phases {
        write_trace(&dir.join(format!("{}.jsonl", phase.name.to_lowercase())), &phase.trace)?;
    }
    write_json(&dir.join("report.json"), report)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub scenario: String,
    pub seeds: Range<u64>,
    pub runs: usize,
    pub pass: usize,
    pub fail: usize,
    pub refused: usize,
    pub non_terminating: usize,
    /// Failing verdicts per check name.
    pub failed_checks: BTreeMap<String, usize>,
    pub failing_seeds: Vec<u64>,
    pub non_terminating_seeds: Vec<u64>,
}

impl SweepSummary {
    pub fn status(&self) -> Status {
        if self.non_terminating > 0 {
            Status::NonTerminating
        } else if self.fail > 0 {
            Status::Fail
        } else if self.refused > 0 {
            Status::Refused
        } else {
            Status::Pass
        }
    }
}

/// Runs `s` once per seed in `seeds`, in parallel. Reports come back in seed
/// order regardless of scheduling.
pub fn sweep_reports(s: &Scenario, seeds: Range<u64>) -> Result<Vec<(RunReport, HistoryTrace)>, CliError> {
    seeds
        .into_par_iter()
        .map(|seed| {
            let mut one = s.clone();
            one.system.seed = seed;
            execute(&one)
        })
        .collect()
}

pub fn summarize(s: &Scenario, seeds: Range<u64>, reports: &[RunReport]) -> SweepSummary {
    let mut sum = SweepSummary { scenario: s.name.clone(), seeds, ..Default::default() };
    for r in reports {
        sum.runs += 1;
        match r.status {
            Status::Pass => sum.pass += 1,
            Status::Refused => sum.refused += 1,
            Status::Fail => {
                sum.fail += 1;
                sum.failing_seeds.push(r.seed);
            }
            Status::NonTerminating => {
                sum.non_terminating += 1;
                sum.non_terminating_seeds.push(r.seed);
            }
        }
        for v in r.checks.iter().flat_map(|c| &c.verdicts).filter(|v| !v.passed()) {
            *sum.failed_checks.entry(v.check.clone()).or_default() += 1;
        }
        if !r.invariant_violations.is_empty() {
            *sum.failed_checks.entry("invariants".into()).or_default() += 1;
        }
    }
    sum
}

/// Sweeps `s` over `seeds`. With `dir`, writes `summary.json` there and the
/// trace and verdict of every seed that did not pass under `seeds/`.
pub fn sweep(s: &Scenario, seeds: Range<u64>, dir: Option<&Path>) -> Result<SweepSummary, CliError> {
    let results = sweep_reports(s, seeds.clone())?;
    let reports: Vec<RunReport> = results.iter().map(|(r, _)| r.clone()).collect();
    let summary = summarize(s, seeds, &reports);
    if let Some(dir) = dir {
        create_dir(dir)?;
        for (r, trace) in results.iter().filter(|(r, _)| r.status != Status::Pass) {
            let seed_dir = dir.join("seeds").join(r.seed.to_string());
            write_run(&seed_dir, r, trace)?;
        }
        write_json(&dir.join("summary.json"), &summary)?;
    }
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckFileReport {
    pub trace: PathBuf,
    pub status: Status,
    pub checks: Vec<CheckReport>,
}

/// Checks a trace file offline.
pub fn check_file(path: &Path, checks: &std::collections::BTreeSet<Check>, max_synth: usize) -> Result<CheckFileReport, CliError> {
    let trace = read_trace(path)?;
    let checks = run_checks(&trace, checks, max_synth);
    Ok(CheckFileReport { trace: path.into(), status: status_of(RunStatus::Completed, &checks, &[]), checks })
}
