//! Quantum circuit synthesis by random combinatorial search.
//!
//! Entangler configurations (CNOT or B gate placements) are drawn at random,
//! the single-qubit rotations around them are optimized by gradient ascent,
//! and the fraction of configurations reaching unit fidelity is estimated
//! with Bayesian error bars.

pub mod bounds;
pub mod circuit;
pub mod error;
pub mod grape;
pub mod search;
pub mod stats;
pub mod tensor;

pub use bounds::{config_count, lower_bound, TaskKind};
pub use circuit::{
    circuit_apply, circuit_unitary, toffoli4_cnot15_config, toffoli_target, GateConfiguration, GateKind,
    ParameterizedCircuit, Placement, RotationParams,
};
pub use error::{Error, Result};
pub use grape::{fidelity, fidelity_gradient, optimize, OptimizationResult, OptimizerSettings, Target, Termination};
pub use tensor::{apply_gate, haar_random_state, haar_random_unitary, RngSeed, StateVector, UnitaryMatrix};
pub use search::{
    exhaustive_scan, run_fixed_config, run_trials, sample_config, sweep, SearchPlan, SweepPoint, SweepResult,
    TargetSource, TrialRecord,
};
pub use stats::{bayes_posterior, binomial_sigma, error_bars, fidelity_histogram, success_probability};
