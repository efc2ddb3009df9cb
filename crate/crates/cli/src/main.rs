use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use byzreg::runtime::Tick;
use byzreg::tos::{run_attack, TosBackend};
use byzreg_cli::{
    check_file, execute, execute_attack, output_dir, sweep, write_attack, write_json, write_run, Check,
    CliError, Mode, Overrides, Scenario, EXIT_CONFIG,
};

#[derive(Parser)]
#[command(name = "byzreg", version, about = "Simulate and check signature-free Byzantine registers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunFlags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<Tick>,
    #[arg(long)]
    fairness_window: Option<Tick>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunFlags {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, budget: self.budget, fairness_window: self.fairness_window }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its trace and verdicts.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run a scenario once per seed in `--seeds START..END`.
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_parser = parse_range)]
        seeds: std::ops::Range<u64>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Check a JSONL trace.
    Check {
        trace: PathBuf,
        /// Checks to apply; defaults to observations and constructive.
        #[arg(long, value_delimiter = ',', value_parser = parse_check)]
        checks: Vec<Check>,
        #[arg(long, default_value_t = 4)]
        max_synth: usize,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay the three-history attack against a test-or-set backend.
    Attack {
        #[arg(long, value_parser = parse_backend, default_value = "naive_quorum")]
        backend: TosBackend,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        f: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> Result<std::ops::Range<u64>, String> {
    let (a, b) = s.split_once("..").ok_or("expected START..END")?;
    let a: u64 = a.parse().map_err(|e| format!("{e}"))?;
    let b: u64 = b.parse().map_err(|e| format!("{e}"))?;
    if b < a {
        return Err("END is below START".into());
    }
    Ok(a..b)
}

fn parse_json_name<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|e| e.to_string())
}

fn parse_check(s: &str) -> Result<Check, String> {
    parse_json_name(s)
}

fn parse_backend(s: &str) -> Result<TosBackend, String> {
    parse_json_name(s)
}

fn load(path: &Path, flags: &RunFlags) -> Result<Scenario, CliError> {
    let mut s = Scenario::load(path)?;
    s.apply(&flags.overrides());
    s.validate()?;
    Ok(s)
}

fn main_inner(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { scenario, flags } => {
            let s = load(&scenario, &flags)?;
            let dir = output_dir(&s, flags.out.as_deref());
            match s.mode {
                Mode::Run => {
                    let (report, trace) = execute(&s)?;
                    write_run(&dir, &report, &trace)?;
                    println!("{}: {:?} at tick {} -> {}", s.name, report.status, report.final_tick, dir.display());
                    for c in &report.checks {
                        let group = serde_json::to_value(c.check).expect("check serializes");
                        let group = group.as_str().unwrap_or_default();
                        for v in &c.verdicts {
                            println!("  {group:<13} {:<18} {:?}", v.check, v.outcome);
                        }
                        if let Some(why) = &c.refused {
                            println!("  {group:<13} refused: {why}");
                        }
                    }
                    Ok(report.status.exit_code())
                }
                Mode::Attack => {
                    let report = execute_attack(&s)?;
                    write_attack(&dir, &report)?;
                    println!(
                        "{}: backend {} applicable={} violation={} -> {}",
                        s.name,
                        report.backend,
                        report.applicable,
                        report.violation,
                        dir.display()
                    );
                    Ok(0)
                }
            }
        }
        Command::Sweep { scenario, seeds, flags } => {
            let s = load(&scenario, &flags)?;
            let summary = sweep(&s, seeds, flags.out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            Ok(summary.status().exit_code())
        }
        Command::Check { trace, checks, max_synth, out } => {
            let checks: BTreeSet<Check> = if checks.is_empty() {
                [Check::Observations, Check::Constructive].into_iter().collect()
            } else {
                checks.into_iter().collect()
            };
            let report = check_file(&trace, &checks, max_synth)?;
            match out {
                Some(path) => write_json(&path, &report)?,
                None => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
            }
            Ok(report.status.exit_code())
        }
        Command::Attack { backend, n, f, seed, out } => {
            let report = run_attack(backend, n, f, seed)?;
            match out {
                Some(dir) => write_attack(&dir, &report)?,
                None => {
                    let mut brief = serde_json::to_value(&report).expect("report serializes");
                    brief.as_object_mut().expect("object").remove("phases");
                    println!("{}", serde_json::to_string_pretty(&brief).expect("report serializes"));
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
