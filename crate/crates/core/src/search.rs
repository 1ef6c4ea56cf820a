//! Random combinatorial search over entangler configurations.
//!
//! Every trial draws its configuration and its optimizer initialization from
//! streams keyed by `(master seed, circuit size, trial index)`, so results do
//! not depend on the number of workers or the order trials finish in.

use std::time::Instant;

use num_bigint::BigUint;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{config_count, lower_bound, TaskKind};
use crate::circuit::{GateConfiguration, GateKind, Placement};
use crate::error::{Error, Result};
use crate::grape::{optimize, OptimizationResult, OptimizerSettings, Target};
use crate::stats::{bayes_posterior, error_bars, DEFAULT_POSTERIOR_BINS};
use crate::tensor::{haar_random_state, haar_random_unitary, RngSeed};

const CONFIG_TAG: u64 = 0x636f_6e66;
const OPTIMIZER_TAG: u64 = 0x6f70_7469;
const TARGET_TAG: u64 = 0x7461_7267;

pub const DEFAULT_SCAN_CAP: u64 = 100_000;

/// Draws `size` placements independently and uniformly from the n(n−1)/2
/// unordered pairs.
pub fn sample_config(n: usize, size: usize, kind: GateKind, seed: RngSeed) -> Result<GateConfiguration> {
    if n < 2 {
        return Err(Error::InvalidQubitCount(n));
    }
    let pairs = Placement::all(n);
    let mut rng = seed.rng();
    let placements = (0..size).map(|_| pairs[rng.random_range(0..pairs.len())]).collect();
    GateConfiguration::new(n, kind, placements)
}

/// Haar-random target for `task` drawn from `seed`.
pub fn haar_target(task: TaskKind, n: usize, seed: RngSeed) -> Result<Target> {
    Ok(match task {
        TaskKind::StatePrep => Target::StatePrep(haar_random_state(n, seed)?),
        TaskKind::UnitarySynthesis => Target::Unitary(haar_random_unitary(n, seed)?),
    })
}

/// Where trial targets come from.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetSource {
    /// One Haar target derived from the master seed, shared by every trial
    /// and circuit size.
    SharedHaar,
    /// A fresh Haar target per trial.
    PerTrialHaar,
    /// A caller-supplied target (Toffoli, file, ...).
    Fixed(Target),
}

/// Everything that determines a batch of trials.
#[derive(Clone, Debug)]
pub struct SearchPlan {
    pub task: TaskKind,
    pub kind: GateKind,
    pub n: usize,
    pub n_samples: u64,
    pub settings: OptimizerSettings,
    pub master_seed: u64,
    pub targets: TargetSource,
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
}

impl SearchPlan {
    pub fn new(task: TaskKind, kind: GateKind, n: usize, n_samples: u64, master_seed: u64) -> Self {
        Self {
            task,
            kind,
            n,
            n_samples,
            settings: OptimizerSettings::default(),
            master_seed,
            targets: TargetSource::SharedHaar,
            workers: 0,
        }
    }

    pub fn with_settings(mut self, settings: OptimizerSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn with_targets(mut self, targets: TargetSource) -> Self {
        self.targets = targets;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    fn master(&self) -> RngSeed {
        RngSeed::new(self.master_seed, 0)
    }

    pub fn config_seed(&self, size: usize, trial: u64) -> RngSeed {
        self.master().child(CONFIG_TAG).child(size as u64).with_stream(trial)
    }

    pub fn optimizer_seed(&self, size: usize, trial: u64) -> RngSeed {
        self.master().child(OPTIMIZER_TAG).child(size as u64).with_stream(trial)
    }

    /// The target seen by `trial`.
    pub fn target_for(&self, trial: u64) -> Result<Target> {
        let base = self.master().child(TARGET_TAG);
        match &self.targets {
            TargetSource::SharedHaar => haar_target(self.task, self.n, base),
            TargetSource::PerTrialHaar => haar_target(self.task, self.n, base.with_stream(trial + 1)),
            TargetSource::Fixed(t) => Ok(t.clone()),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidQubitCount(self.n));
        }
        if let TargetSource::Fixed(t) = &self.targets {
            if t.n() != self.n || t.task() != self.task {
                return Err(Error::InvalidArgument(format!(
                    "fixed target is a {}-qubit {:?} target, plan wants {}-qubit {:?}",
                    t.n(),
                    t.task(),
                    self.n,
                    self.task
                )));
            }
        }
        self.settings.validate()
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub config: GateConfiguration,
    pub result: OptimizationResult,
    /// Seconds; excluded from equality of deterministic payloads.
    pub wall_time: f64,
}

/// Samples, optimizes and records `plan.n_samples` trials at circuit size
/// `size`, ordered by trial index.
pub fn run_trials(plan: &SearchPlan, size: usize) -> Result<Vec<TrialRecord>> {
    run_with(plan, size, |t| sample_config(plan.n, size, plan.kind, plan.config_seed(size, t)))
}

/// Like [`run_trials`], but every trial optimizes the same configuration
/// from its own initialization.
pub fn run_fixed_config(plan: &SearchPlan, config: &GateConfiguration) -> Result<Vec<TrialRecord>> {
    if config.n() != plan.n || config.kind() != plan.kind {
        return Err(Error::InvalidArgument(format!(
            "configuration is {}-qubit {}, plan wants {}-qubit {}",
            config.n(),
            config.kind().name(),
            plan.n,
            plan.kind.name()
        )));
    }
    run_with(plan, config.size(), |_| Ok(config.clone()))
}

fn run_with<C>(plan: &SearchPlan, size: usize, make_config: C) -> Result<Vec<TrialRecord>>
where
    C: Fn(u64) -> Result<GateConfiguration> + Sync,
{
    plan.validate()?;
    let shared = match plan.targets {
        TargetSource::PerTrialHaar => None,
        _ => Some(plan.target_for(0)?),
    };
    let run_one = |t: u64| -> Result<TrialRecord> {
        let start = Instant::now();
        let config = make_config(t)?;
        let owned;
        let target = match &shared {
            Some(target) => target,
            None => {
                owned = plan.target_for(t)?;
                &owned
            }
        };
        let result = optimize(&config, target, &plan.settings, plan.optimizer_seed(size, t))?;
        Ok(TrialRecord {
            trial_index: t,
            config,
            result,
            wall_time: start.elapsed().as_secs_f64(),
        })
    };
    plan.pool()?
        .install(|| (0..plan.n_samples).into_par_iter().map(run_one).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Circuit size N.
    pub size: usize,
    pub n_samples: u64,
    pub n_perfect: u64,
    pub p_num: f64,
    pub err_lo: f64,
    pub err_hi: f64,
}

impl SweepPoint {
    pub fn from_counts(size: usize, n_perfect: u64, n_samples: u64) -> Result<Self> {
        let posterior = bayes_posterior(n_perfect, n_samples, DEFAULT_POSTERIOR_BINS)?;
        let (err_lo, err_hi) = error_bars(&posterior);
        let p_num = if n_samples == 0 {
            0.0
        } else {
            n_perfect as f64 / n_samples as f64
        };
        Ok(Self {
            size,
            n_samples,
            n_perfect,
            p_num,
            err_lo: err_lo.min(p_num),
            err_hi: err_hi.max(p_num),
        })
    }

    pub fn from_trials(size: usize, trials: &[TrialRecord]) -> Result<Self> {
        let perfect = trials.iter().filter(|t| t.result.perfect).count() as u64;
        Self::from_counts(size, perfect, trials.len() as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub task: TaskKind,
    pub kind: GateKind,
    pub n: usize,
    pub points: Vec<SweepPoint>,
    /// Smallest N with at least one perfect circuit.
    pub n_min_perfect: Option<usize>,
    /// Smallest N with `p_num > 0.5`.
    pub n_threshold: Option<usize>,
}

impl SweepResult {
    pub fn from_points(task: TaskKind, kind: GateKind, n: usize, mut points: Vec<SweepPoint>) -> Self {
        points.sort_by_key(|p| p.size);
        let n_min_perfect = points.iter().find(|p| p.n_perfect > 0).map(|p| p.size);
        let n_threshold = points.iter().find(|p| p.p_num > 0.5).map(|p| p.size);
        Self {
            task,
            kind,
            n,
            points,
            n_min_perfect,
            n_threshold,
        }
    }

    pub fn point(&self, size: usize) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.size == size)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,n_samples,n_perfect,p_num,err_lo,err_hi\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.size, p.n_samples, p.n_perfect, p.p_num, p.err_lo, p.err_hi
            ));
        }
        out
    }
}

/// Default circuit-size range: from the lower bound, `count` sizes.
pub fn default_range(task: TaskKind, kind: GateKind, n: usize, count: usize) -> Result<Vec<usize>> {
    let start = lower_bound(task, kind, n)? as usize;
    Ok((start..start + count).collect())
}

/// Runs [`run_trials`] for each size, calling `on_trials` with every batch
/// as it completes.
pub fn sweep_with<F, E>(plan: &SearchPlan, sizes: &[usize], mut on_trials: F) -> std::result::Result<SweepResult, E>
where
    F: FnMut(usize, &[TrialRecord]) -> std::result::Result<(), E>,
    E: From<Error>,
{
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let mut points = Vec::with_capacity(sizes.len());
    for &size in &sizes {
        let trials = run_trials(plan, size)?;
        on_trials(size, &trials)?;
        points.push(SweepPoint::from_trials(size, &trials)?);
    }
    Ok(SweepResult::from_points(plan.task, plan.kind, plan.n, points))
}

pub fn sweep(plan: &SearchPlan, sizes: &[usize]) -> Result<SweepResult> {
    sweep_with(plan, sizes, |_, _| Ok::<(), Error>(()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub config: GateConfiguration,
    pub fidelity: f64,
    pub perfect: bool,
}

/// All configurations of `size` entanglers in lexicographic order of their
/// pair indices.
pub fn enumerate_configs(n: usize, kind: GateKind, size: usize, cap: u64) -> Result<Vec<GateConfiguration>> {
    let count = config_count(n, size);
    if count > BigUint::from(cap) {
        return Err(Error::CapExceeded {
            count: count.to_string(),
            cap,
        });
    }
    let pairs = Placement::all(n);
    let total: usize = count.to_string().parse().expect("count fits under cap");
    let mut digits = vec![0usize; size];
    let mut out = Vec::with_capacity(total);
    for _ in 0..total {
        let placements = digits.iter().map(|&d| pairs[d]).collect();
        out.push(GateConfiguration::new(n, kind, placements)?);
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < pairs.len() {
                break;
            }
            *d = 0;
        }
    }
    Ok(out)
}

/// Optimizes every configuration of `size` entanglers against `target`.
/// Refuses when the configuration space exceeds `cap`.
pub fn exhaustive_scan(
    kind: GateKind,
    size: usize,
    target: &Target,
    settings: &OptimizerSettings,
    master_seed: u64,
    cap: u64,
    workers: usize,
) -> Result<Vec<ScanEntry>> {
    settings.validate()?;
    let configs = enumerate_configs(target.n(), kind, size, cap)?;
    let base = RngSeed::new(master_seed, 0).child(OPTIMIZER_TAG).child(size as u64);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    pool.install(|| {
        configs
            .into_par_iter()
            .enumerate()
            .map(|(i, config)| {
                let r = optimize(&config, target, settings, base.with_stream(i as u64))?;
                Ok(ScanEntry {
                    config,
                    fidelity: r.fidelity,
                    perfect: r.perfect,
                })
            })
            .collect()
    })
}

/// Fraction of entries reaching unit fidelity.
pub fn perfect_fraction(entries: &[ScanEntry]) -> f64 {
    if entries.is_empty() {
        return 0.0;
    }
    entries.iter().filter(|e| e.perfect).count() as f64 / entries.len() as f64
}

/// Re-optimizes only the rotations of a known configuration for a new target.
pub fn retarget(
    config: &GateConfiguration,
    new_target: &Target,
    settings: &OptimizerSettings,
    seed: RngSeed,
) -> Result<OptimizationResult> {
    optimize(config, new_target, settings, seed)
}
