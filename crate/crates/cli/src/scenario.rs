//! Scenario files: what to simulate and which checks to apply.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use byzreg::adversary::{preset, AdversaryScript};
use byzreg::registers::{register_protocol, VerifyVariant, V0};
use byzreg::runtime::{
    default_window, ProcessId, Protocol, SchedulePolicy, SystemConfig, Tick, TypeTag, Workload,
    DEFAULT_BUDGET,
};
use byzreg::tos::{tos_protocol, TosBackend};
use byzreg::workloads::random_workload;

use crate::error::CliError;

/// The only scenario format version understood.
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Simulate the workload and check the resulting trace.
    #[default]
    Run,
    /// Replay the three-history attack against a test-or-set backend.
    Attack,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Observations,
    Constructive,
    Bruteforce,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub n: usize,
    pub f: usize,
    #[serde(default)]
    pub seed: u64,
    /// Faulty processes besides those named by the adversary.
    #[serde(default)]
    pub byzantine: BTreeSet<ProcessId>,
    #[serde(default)]
    pub budget: Option<Tick>,
    #[serde(default)]
    pub fairness_window: Option<Tick>,
    #[serde(default)]
    pub policy: Option<SchedulePolicy>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversarySpec {
    #[default]
    None,
    /// A named library preset.
    Preset(String),
    Script(AdversaryScript),
}

/// A workload drawn from the run's seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomWorkload {
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub mode: Mode,
    pub register_type: TypeTag,
    /// Required for test-or-set.
    #[serde(default)]
    pub backend: Option<TosBackend>,
    pub system: SystemSpec,
    #[serde(default)]
    pub workload: Option<Workload>,
    #[serde(default)]
    pub random_workload: Option<RandomWorkload>,
    #[serde(default)]
    pub adversary: AdversarySpec,
    #[serde(default)]
    pub verify_variant: VerifyVariant,
    #[serde(default = "default_checks")]
    pub checks: BTreeSet<Check>,
    /// Writer operations the brute-force search may add for a faulty writer.
    #[serde(default = "default_max_synth")]
    pub max_synth: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_checks() -> BTreeSet<Check> {
    [Check::Observations, Check::Constructive].into_iter().collect()
}

fn default_max_synth() -> usize {
    4
}

/// Command-line settings that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub budget: Option<Tick>,
    pub fairness_window: Option<Tick>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let s: Scenario = serde_json::from_str(text).map_err(CliError::Parse)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.into(), e))?;
        let mut s = Self::from_json(&text)?;
        if s.name.is_empty() {
            s.name = path.file_stem().map(|x| x.to_string_lossy().into_owned()).unwrap_or_default();
        }
        Ok(s)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.system.seed = s;
        }
        if let Some(b) = o.budget {
            self.system.budget = Some(b);
        }
        if let Some(w) = o.fairness_window {
            self.system.fairness_window = Some(w);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |m: &str| Err(CliError::Invalid(m.into()));
        if self.version != VERSION {
            return Err(CliError::Invalid(format!("unsupported version {}, expected {VERSION}", self.version)));
        }
        match (self.register_type, self.backend) {
            (TypeTag::TestOrSet, None) => return invalid("test_or_set needs a backend"),
            (TypeTag::TestOrSet, Some(_)) => {}
            (_, Some(_)) => return invalid("backend applies only to test_or_set"),
            _ => {}
        }
        if self.verify_variant == VerifyVariant::Flawed && self.register_type != TypeTag::Verifiable {
            return invalid("the flawed verify variant exists only for the verifiable register");
        }
        match self.mode {
            Mode::Attack => {
                if self.register_type != TypeTag::TestOrSet {
                    return invalid("attack mode needs register_type test_or_set");
                }
                if self.workload.is_some()
                    || self.random_workload.is_some()
                    || self.adversary != AdversarySpec::None
                    || !self.system.byzantine.is_empty()
                {
                    return invalid("attack mode builds its own workload and adversary");
                }
            }
            Mode::Run => {
                if self.workload.is_some() == self.random_workload.is_some() {
                    return invalid("give exactly one of workload and random_workload");
                }
                if let Some(w) = &self.workload {
                    w.validate(self.register_type, self.system.n)?;
                }
            }
        }
        self.config()?.validate()?;
        Ok(())
    }

    /// The type presets are built for: test-or-set runs on a register.
    fn preset_tag(&self) -> TypeTag {
        match (self.register_type, self.backend) {
            (TypeTag::TestOrSet, Some(TosBackend::Sticky)) => TypeTag::Sticky,
            (TypeTag::TestOrSet, _) => TypeTag::Verifiable,
            (t, _) => t,
        }
    }

    /// The adversary script and the processes it makes faulty.
    pub fn adversary(&self) -> Result<(AdversaryScript, BTreeSet<ProcessId>), CliError> {
        let (n, f) = (self.system.n, self.system.f);
        let (script, mut byz) = match &self.adversary {
            AdversarySpec::None => (AdversaryScript::none(), BTreeSet::new()),
            AdversarySpec::Preset(name) => {
                if f >= n {
                    return Err(CliError::Invalid(format!("f={f} must be below n={n}")));
                }
                let p = preset(name, self.preset_tag(), n, f)
                    .ok_or_else(|| CliError::Invalid(format!("unknown adversary preset {name:?}")))?;
                (p.script, p.byzantine)
            }
            AdversarySpec::Script(s) => (s.clone(), s.byzantine.keys().copied().collect()),
        };
        byz.extend(self.system.byzantine.iter().copied());
        Ok((script, byz))
    }

    pub fn config(&self) -> Result<SystemConfig, CliError> {
        let s = &self.system;
        let (_, byz) = self.adversary()?;
        let mut c = SystemConfig::new(s.n, s.f, s.seed).with_byzantine(byz);
        c.budget = s.budget.unwrap_or(DEFAULT_BUDGET);
        c.fairness_window = s.fairness_window.unwrap_or_else(|| default_window(s.n));
        if let Some(p) = &s.policy {
            c.policy = p.clone();
        }
        Ok(c)
    }

    pub fn workload(&self) -> Workload {
        match (&self.workload, self.random_workload) {
            (Some(w), _) => w.clone(),
            (None, Some(r)) => random_workload(self.register_type, self.system.n, self.system.seed, r.size),
            (None, None) => Workload::default(),
        }
    }

    pub fn protocol(&self) -> Box<dyn Protocol> {
        match self.register_type {
            TypeTag::TestOrSet => tos_protocol(self.backend.expect("validated")),
            t => register_protocol(t, V0, self.verify_variant).expect("register type"),
        }
    }
}
