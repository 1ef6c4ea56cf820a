//! Experiment description: a JSON spec file, with every field overridable
//! from the command line.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use qsearch_core::{
    toffoli4_cnot15_config, toffoli_target, GateConfiguration, GateKind, OptimizerSettings, SearchPlan,
    StateVector, Target, TargetSource, TaskKind, UnitaryMatrix,
};

/// Where the target comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TargetSpec {
    Haar,
    Toffoli,
    File(PathBuf),
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSpec::Haar => f.write_str("haar"),
            TargetSpec::Toffoli => f.write_str("toffoli"),
            TargetSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for TargetSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "haar" => Ok(TargetSpec::Haar),
            "toffoli" => Ok(TargetSpec::Toffoli),
            _ => match s.strip_prefix("file:") {
                Some(path) if !path.is_empty() => Ok(TargetSpec::File(PathBuf::from(path))),
                _ => Err(format!("target must be haar, toffoli or file:<path>, got `{s}`")),
            },
        }
    }
}

impl Serialize for TargetSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TargetSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inclusive range of circuit sizes, written `lo..hi` or a single `N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SizeRange {
    pub lo: usize,
    pub hi: usize,
}

impl SizeRange {
    pub fn sizes(&self) -> Vec<usize> {
        (self.lo..=self.hi).collect()
    }

    pub fn single(&self) -> Option<usize> {
        (self.lo == self.hi).then_some(self.lo)
    }
}

impl fmt::Display for SizeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}..{}", self.lo, self.hi)
        }
    }
}

impl FromStr for SizeRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad circuit size `{t}`"));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let v = parse(s)?;
                (v, v)
            }
        };
        if lo > hi {
            return Err(format!("empty size range `{s}`"));
        }
        Ok(Self { lo, hi })
    }
}

impl Serialize for SizeRange {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SizeRange {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(Self { lo: v, hi: v }),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    #[default]
    Fast,
    Long,
}

/// Named configurations that can replace random sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ConfigFixture {
    Toffoli4Cnot15,
}

impl ConfigFixture {
    pub fn config(self) -> GateConfiguration {
        match self {
            ConfigFixture::Toffoli4Cnot15 => toffoli4_cnot15_config(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub task: TaskKind,
    pub kind: GateKind,
    pub n: usize,
    /// Omitted for sweeps means "from the lower bound, 5 sizes".
    pub sizes: Option<SizeRange>,
    pub n_samples: u64,
    pub settings: OptimizerSettings,
    pub seed: u64,
    pub target: TargetSpec,
    pub per_trial_targets: bool,
    pub config: Option<ConfigFixture>,
    pub output: PathBuf,
    pub workers: usize,
    pub tier: Tier,
}

/// Spec file contents; every field optional so flags can fill the gaps.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    task: Option<TaskKind>,
    kind: Option<GateKind>,
    n: Option<usize>,
    sizes: Option<SizeRange>,
    n_samples: Option<u64>,
    settings: Option<OptimizerSettings>,
    seed: Option<u64>,
    target: Option<TargetSpec>,
    per_trial_targets: Option<bool>,
    config: Option<ConfigFixture>,
    output: Option<PathBuf>,
    workers: Option<usize>,
    tier: Option<Tier>,
}

#[derive(Clone, Debug, Default, Args)]
pub struct SpecArgs {
    /// JSON spec file; flags override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// sp (state preparation) or u (unitary synthesis).
    #[arg(long)]
    pub task: Option<TaskKind>,
    /// Entangler: cnot or b.
    #[arg(long)]
    pub kind: Option<GateKind>,
    /// Number of qubits.
    #[arg(long)]
    pub n: Option<usize>,
    /// Circuit size N, or an inclusive range `lo..hi`.
    #[arg(long)]
    pub sizes: Option<SizeRange>,
    /// Random configurations per circuit size.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Master seed (required here or in the spec file).
    #[arg(long)]
    pub seed: Option<u64>,
    /// haar, toffoli or file:<path>.
    #[arg(long)]
    pub target: Option<TargetSpec>,
    /// Draw a fresh Haar target for every trial.
    #[arg(long)]
    pub per_trial_targets: bool,
    /// Optimize a named configuration instead of sampling.
    #[arg(long, value_enum)]
    pub config: Option<ConfigFixture>,
    #[arg(long)]
    pub max_iters: Option<u64>,
    #[arg(long)]
    pub restarts: Option<u32>,
    #[arg(long)]
    pub perfect_threshold: Option<f64>,
    /// Output directory.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Worker threads (0: all cores). Does not change results.
    #[arg(long)]
    pub workers: Option<usize>,
    /// `long` unlocks paper-scale runs (n≥5 unitaries, n≥7 states).
    #[arg(long, value_enum)]
    pub tier: Option<Tier>,
}

impl SpecArgs {
    pub fn resolve(&self) -> Result<ExperimentSpec> {
        let file = match &self.spec {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str::<SpecFile>(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => SpecFile::default(),
        };
        let target = self.target.clone().or(file.target).unwrap_or(TargetSpec::Haar);
        let task = match self.task.or(file.task) {
            Some(t) => t,
            None if target == TargetSpec::Toffoli => TaskKind::UnitarySynthesis,
            None => bail!("--task is required"),
        };
        let config = self.config.or(file.config);
        let n = match (self.n.or(file.n), &target, config) {
            (Some(n), _, _) => n,
            (None, _, Some(fixture)) => fixture.config().n(),
            (None, TargetSpec::File(path), _) => load_target(task, path)?.n(),
            _ => bail!("--n is required"),
        };
        let mut settings = file.settings.unwrap_or_default();
        if let Some(v) = self.max_iters {
            settings.max_iterations = v;
        }
        if let Some(v) = self.restarts {
            settings.restarts = v;
        }
        if let Some(v) = self.perfect_threshold {
            settings.perfect_threshold = v;
        }
        let Some(seed) = self.seed.or(file.seed) else {
            bail!("a master seed is required (--seed or `seed` in the spec file)");
        };
        let spec = ExperimentSpec {
            task,
            kind: self.kind.or(file.kind).unwrap_or(GateKind::Cnot),
            n,
            sizes: self.sizes.or(file.sizes),
            n_samples: self.samples.or(file.n_samples).unwrap_or(100),
            settings,
            seed,
            target,
            per_trial_targets: self.per_trial_targets || file.per_trial_targets.unwrap_or(false),
            config,
            output: self.output.clone().or(file.output).unwrap_or_else(|| PathBuf::from("out")),
            workers: self.workers.or(file.workers).unwrap_or(0),
            tier: self.tier.or(file.tier).unwrap_or_default(),
        };
        spec.check()?;
        Ok(spec)
    }
}

impl ExperimentSpec {
    fn check(&self) -> Result<()> {
        if !(2..=qsearch_core::tensor::MAX_QUBITS).contains(&self.n) {
            bail!("n must be between 2 and {}", qsearch_core::tensor::MAX_QUBITS);
        }
        self.settings.validate()?;
        if self.per_trial_targets && self.target != TargetSpec::Haar {
            bail!("per-trial targets only apply to Haar targets");
        }
        if self.target == TargetSpec::Toffoli && self.task != TaskKind::UnitarySynthesis {
            bail!("the Toffoli target is a unitary synthesis task");
        }
        if let Some(fixture) = self.config {
            let c = fixture.config();
            if c.n() != self.n || c.kind() != self.kind {
                bail!(
                    "configuration {:?} is {}-qubit {}, spec asks for {}-qubit {}",
                    fixture,
                    c.n(),
                    c.kind().name(),
                    self.n,
                    self.kind.name()
                );
            }
        }
        let long = match self.task {
            TaskKind::StatePrep => self.n >= 7,
            TaskKind::UnitarySynthesis => self.n >= 5,
        };
        if long && self.tier != Tier::Long {
            bail!("n={} {} runs take hours to days; pass --tier long", self.n, self.task.short_name());
        }
        Ok(())
    }

    pub fn target_source(&self) -> Result<TargetSource> {
        Ok(match &self.target {
            TargetSpec::Haar if self.per_trial_targets => TargetSource::PerTrialHaar,
            TargetSpec::Haar => TargetSource::SharedHaar,
            TargetSpec::Toffoli => TargetSource::Fixed(Target::Unitary(toffoli_target(self.n)?)),
            TargetSpec::File(path) => {
                let t = load_target(self.task, path)?;
                if t.n() != self.n {
                    bail!("{} holds a {}-qubit target, spec says n={}", path.display(), t.n(), self.n);
                }
                TargetSource::Fixed(t)
            }
        })
    }

    pub fn plan(&self) -> Result<SearchPlan> {
        Ok(SearchPlan::new(self.task, self.kind, self.n, self.n_samples, self.seed)
            .with_settings(self.settings.clone())
            .with_targets(self.target_source()?)
            .with_workers(self.workers))
    }
}

/// Reads a state (flat `[re, im]` list) or unitary (rows, or flat row-major).
pub fn load_target(task: TaskKind, path: &Path) -> Result<Target> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let target = match task {
        TaskKind::StatePrep => Target::StatePrep(StateVector::from_json(&value)?),
        TaskKind::UnitarySynthesis => Target::Unitary(UnitaryMatrix::from_json(&value)?),
    };
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_ranges() {
        assert_eq!("6..10".parse::<SizeRange>().unwrap(), SizeRange { lo: 6, hi: 10 });
        assert_eq!("6..=10".parse::<SizeRange>().unwrap(), SizeRange { lo: 6, hi: 10 });
        assert_eq!("3".parse::<SizeRange>().unwrap().single(), Some(3));
        assert!("10..6".parse::<SizeRange>().is_err());
        let v: SizeRange = serde_json::from_str("14").unwrap();
        assert_eq!(v.sizes(), vec![14]);
        let v: SizeRange = serde_json::from_str("\"13..14\"").unwrap();
        assert_eq!(v.sizes(), vec![13, 14]);
    }

    #[test]
    fn target_specs() {
        assert_eq!("haar".parse::<TargetSpec>().unwrap(), TargetSpec::Haar);
        assert_eq!(
            "file:a/b.json".parse::<TargetSpec>().unwrap(),
            TargetSpec::File(PathBuf::from("a/b.json"))
        );
        assert!("file:".parse::<TargetSpec>().is_err());
        assert!("ghz".parse::<TargetSpec>().is_err());
    }

    #[test]
    fn flags_override_file_and_seed_is_mandatory() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spec.json");
        std::fs::write(
            &path,
            r#"{"task":"state_prep","kind":"b","n":3,"sizes":"1..3","seed":9,"settings":{"restarts":2}}"#,
        )
        .unwrap();
        let args = SpecArgs {
            spec: Some(path.clone()),
            kind: Some(GateKind::Cnot),
            restarts: Some(4),
            ..Default::default()
        };
        let spec = args.resolve().unwrap();
        assert_eq!(spec.kind, GateKind::Cnot);
        assert_eq!(spec.task, TaskKind::StatePrep);
        assert_eq!(spec.settings.restarts, 4);
        assert_eq!(spec.seed, 9);
        assert_eq!(spec.sizes.unwrap().sizes(), vec![1, 2, 3]);

        let args = SpecArgs {
            task: Some(TaskKind::StatePrep),
            n: Some(3),
            ..Default::default()
        };
        assert!(args.resolve().is_err());
    }

    #[test]
    fn long_runs_need_the_long_tier() {
        let mut args = SpecArgs {
            task: Some(TaskKind::UnitarySynthesis),
            n: Some(5),
            seed: Some(1),
            ..Default::default()
        };
        assert!(args.resolve().is_err());
        args.tier = Some(Tier::Long);
        assert!(args.resolve().is_ok());
    }

    #[test]
    fn fixture_must_match_spec() {
        let args = SpecArgs {
            config: Some(ConfigFixture::Toffoli4Cnot15),
            target: Some(TargetSpec::Toffoli),
            seed: Some(1),
            ..Default::default()
        };
        let spec = args.resolve().unwrap();
        assert_eq!((spec.n, spec.task), (4, TaskKind::UnitarySynthesis));
        let args = SpecArgs {
            config: Some(ConfigFixture::Toffoli4Cnot15),
            kind: Some(GateKind::B),
            seed: Some(1),
            ..Default::default()
        };
        assert!(args.resolve().is_err());
    }
}
