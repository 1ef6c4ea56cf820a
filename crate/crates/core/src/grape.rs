//! Fidelity, its analytic gradient, and gradient ascent over the rotation
//! angles of a fixed entangler configuration.
//!
//! Both target kinds share one evaluator. The forward operator is kept as a
//! `d × m` buffer `X` (the evolving state for `m = 1`, the evolving unitary
//! for `m = d`) and the backward costate as an `m × d` buffer `Y` that starts
//! at `⟨ψ_F|` or `U_F†`. The overlap is `o = Tr(Y X)` at any cut of the
//! circuit, so the derivative with respect to an angle of rotation `R` on
//! qubit `q` is `Σ_ab ∂R_ab · S_ab` where `S` is the 2×2 contraction of the
//! suffix costate with the prefix operator over all indices except qubit `q`.
//! One forward sweep (storing prefixes) plus one backward sweep yields every
//! partial derivative.

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::TaskKind;
use crate::circuit::{
    euler_rotation, euler_rotation_derivatives, GateConfiguration, Layer, LayerKernel, ParameterizedCircuit,
    RotationParams,
};
use crate::error::{Error, Result};
use crate::tensor::{Mat2, RngSeed, StateVector, UnitaryMatrix, ZERO};

/// Infidelity below which a result counts as exact but is still worth
/// flagging, since the optimizer normally reaches its success stop first.
pub const NEAR_MISS_FLOOR: f64 = 1e-12;

const STEP_GROWTH: f64 = 1.2;
const STEP_SHRINK: f64 = 0.5;
const STEP_FLOOR: f64 = 1e-9;
const STEP_CAP: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    StatePrep(StateVector),
    Unitary(UnitaryMatrix),
}

impl Target {
    pub fn n(&self) -> usize {
        match self {
            Target::StatePrep(s) => s.n(),
            Target::Unitary(u) => u.n(),
        }
    }

    pub fn task(&self) -> TaskKind {
        match self {
            Target::StatePrep(_) => TaskKind::StatePrep,
            Target::Unitary(_) => TaskKind::UnitarySynthesis,
        }
    }

    fn data(&self) -> &[C64] {
        match self {
            Target::StatePrep(s) => s.amplitudes(),
            Target::Unitary(u) => u.data(),
        }
    }

    /// Columns of the forward buffer: 1 for states, `d` for unitaries.
    fn columns(&self) -> usize {
        match self {
            Target::StatePrep(_) => 1,
            Target::Unitary(u) => u.dim(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Target::StatePrep(s) => s.to_json(),
            Target::Unitary(u) => u.to_json(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSettings {
    pub max_iterations: u64,
    /// Stop as soon as the fidelity exceeds this.
    pub success_stop: f64,
    /// Stop when the fidelity grew by less than `stall_delta` over this many
    /// iterations.
    pub stall_window: u64,
    pub stall_delta: f64,
    /// A result is perfect when `1 − F` is below this.
    pub perfect_threshold: f64,
    pub restarts: u32,
    /// Initial length of the parameter step, in radians.
    pub initial_step: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            success_stop: 1.0 - 1e-12,
            stall_window: 1_000,
            stall_delta: 1e-12,
            perfect_threshold: 1e-8,
            restarts: 1,
            initial_step: 0.1,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = self.max_iterations > 0
            && self.stall_window > 0
            && self.restarts > 0
            && self.success_stop > 0.0
            && self.stall_delta > 0.0
            && self.perfect_threshold > 0.0
            && self.initial_step > 0.0;
        if !positive {
            return Err(Error::InvalidArgument("optimizer settings must all be positive".into()));
        }
        if self.success_stop >= 1.0 {
            return Err(Error::InvalidArgument("success_stop must be below 1".into()));
        }
        Ok(())
    }

    pub fn with_restarts(mut self, restarts: u32) -> Self {
        self.restarts = restarts;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    SuccessStop,
    Stalled,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub fidelity: f64,
    pub params: RotationParams,
    /// Iterations of the run that produced `params`.
    pub iterations: u64,
    pub termination: Termination,
    pub perfect: bool,
    /// Perfect, but with `1 − F` not below [`NEAR_MISS_FLOOR`].
    pub near_miss: bool,
    /// Independent initializations actually run.
    pub restarts_used: u32,
}

impl OptimizationResult {
    pub fn infidelity(&self) -> f64 {
        1.0 - self.fidelity
    }
}

pub fn classify(fidelity: f64, perfect_threshold: f64) -> (bool, bool) {
    let infidelity = 1.0 - fidelity;
    let perfect = infidelity < perfect_threshold;
    (perfect, perfect && infidelity >= NEAR_MISS_FLOOR)
}

fn contract(a: &Mat2, b: &Mat2) -> C64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

fn check_dims(config: &GateConfiguration, target: &Target) -> Result<()> {
    if config.n() != target.n() {
        return Err(Error::DimensionMismatch {
            expected: 1 << config.n(),
            found: 1 << target.n(),
        });
    }
    Ok(())
}

/// Forward/backward sweeps over one configuration and target.
pub(crate) struct Evaluator<'a> {
    config: &'a GateConfiguration,
    target: &'a [C64],
    layers: Vec<Layer>,
    n: usize,
    dim: usize,
    cols: usize,
    forward: LayerKernel,
    backward: LayerKernel,
    initial: Vec<C64>,
    costate_init: Vec<C64>,
    prefixes: Vec<Vec<C64>>,
    rotations: Vec<Mat2>,
    buf: Vec<C64>,
    overlap: C64,
    scale: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(config: &'a GateConfiguration, target: &'a Target) -> Result<Self> {
        check_dims(config, target)?;
        let n = config.n();
        let dim = 1usize << n;
        let cols = target.columns();
        let extra = cols.trailing_zeros() as usize;
        let qubits = n + extra;

        let mut initial = vec![ZERO; dim * cols];
        for i in 0..cols {
            initial[i * cols + i] = C64::new(1.0, 0.0);
        }
        // Y₀[j][c] = conj(T[c][j]); for states T is a column
        let data = target.data();
        let mut costate_init = vec![ZERO; cols * dim];
        for c in 0..dim {
            for j in 0..cols {
                costate_init[j * dim + c] = data[c * cols + j].conj();
            }
        }
        let rot = config.rotation_count();
        Ok(Self {
            config,
            target: data,
            layers: config.layers().collect(),
            n,
            dim,
            cols,
            forward: LayerKernel::new(config.kind(), qubits, 0, false),
            backward: LayerKernel::new(config.kind(), qubits, extra, true),
            initial,
            costate_init,
            prefixes: vec![vec![ZERO; dim * cols]; rot],
            rotations: vec![[[ZERO; 2]; 2]; rot],
            buf: vec![ZERO; dim * cols],
            overlap: ZERO,
            scale: 1.0 / (cols * cols) as f64,
        })
    }

    /// Runs the circuit forward, caching prefixes, and returns the fidelity.
    pub fn fidelity(&mut self, params: &[f64]) -> f64 {
        debug_assert_eq!(params.len(), self.config.param_count());
        for (r, m) in self.rotations.iter_mut().enumerate() {
            *m = euler_rotation(params[3 * r], params[3 * r + 1], params[3 * r + 2]);
        }
        self.buf.copy_from_slice(&self.initial);
        for layer in &self.layers {
            match *layer {
                Layer::Entangler { a, b } => self.forward.entangler(&mut self.buf, a, b),
                Layer::Rotation { qubit, index } => {
                    self.prefixes[index].copy_from_slice(&self.buf);
                    self.forward.rotation(&mut self.buf, qubit, &self.rotations[index]);
                }
            }
        }
        self.overlap = self
            .target
            .iter()
            .zip(&self.buf)
            .map(|(t, x)| t.conj() * x)
            .sum();
        self.overlap.norm_sqr() * self.scale
    }

    /// Gradient at the parameters of the last [`Self::fidelity`] call.
    pub fn gradient(&mut self, params: &[f64], grad: &mut [f64]) {
        let (dim, cols) = (self.dim, self.cols);
        self.buf.copy_from_slice(&self.costate_init);
        let weight = self.overlap.conj() * (2.0 * self.scale);
        for layer in self.layers.iter().rev() {
            match *layer {
                Layer::Entangler { a, b } => self.backward.entangler(&mut self.buf, a, b),
                Layer::Rotation { qubit, index } => {
                    let prefix = &self.prefixes[index];
                    let bit = 1usize << (self.n - 1 - qubit);
                    let pos = self.n - 1 - qubit;
                    let mut s = [[ZERO; 2]; 2];
                    for k in 0..dim / 2 {
                        let r0 = ((k >> pos) << (pos + 1)) | (k & (bit - 1));
                        let r1 = r0 | bit;
                        let x0 = &prefix[r0 * cols..(r0 + 1) * cols];
                        let x1 = &prefix[r1 * cols..(r1 + 1) * cols];
                        for j in 0..cols {
                            let y0 = self.buf[j * dim + r0];
                            let y1 = self.buf[j * dim + r1];
                            s[0][0] += y0 * x0[j];
                            s[0][1] += y0 * x1[j];
                            s[1][0] += y1 * x0[j];
                            s[1][1] += y1 * x1[j];
                        }
                    }
                    let t = &params[3 * index..3 * index + 3];
                    let derivs = euler_rotation_derivatives(t[0], t[1], t[2]);
                    for (g, d) in grad[3 * index..3 * index + 3].iter_mut().zip(&derivs) {
                        let dov = contract(d, &s);
                        *g = (weight * dov).re;
                    }
                    self.backward.rotation(&mut self.buf, qubit, &self.rotations[index]);
                }
            }
        }
    }
}

/// Phase-insensitive fidelity of `circuit` against `target`:
/// `|⟨ψ_F|U|0…0⟩|²` for states, `|Tr(U_F† U)/2^n|²` for unitaries.
pub fn fidelity(circuit: &ParameterizedCircuit, target: &Target) -> Result<f64> {
    let mut ev = Evaluator::new(circuit.config(), target)?;
    Ok(ev.fidelity(circuit.params().as_slice()))
}

/// Exact partial derivatives of [`fidelity`] with respect to every angle.
pub fn fidelity_gradient(circuit: &ParameterizedCircuit, target: &Target) -> Result<Vec<f64>> {
    let mut ev = Evaluator::new(circuit.config(), target)?;
    let params = circuit.params().as_slice();
    ev.fidelity(params);
    let mut grad = vec![0.0; params.len()];
    ev.gradient(params, &mut grad);
    Ok(grad)
}

struct Run {
    fidelity: f64,
    params: Vec<f64>,
    iterations: u64,
    termination: Termination,
}

fn ascend(ev: &mut Evaluator<'_>, mut params: Vec<f64>, settings: &OptimizerSettings) -> Run {
    let len = params.len();
    let mut grad = vec![0.0; len];
    let mut trial = vec![0.0; len];
    let mut fid = ev.fidelity(&params);
    ev.gradient(&params, &mut grad);

    let window = settings.stall_window as usize;
    let mut history = vec![f64::NEG_INFINITY; window];
    let mut step = settings.initial_step;
    let mut iterations = 0u64;

    let termination = loop {
        if fid > settings.success_stop {
            break Termination::SuccessStop;
        }
        if iterations >= settings.max_iterations {
            break Termination::MaxIterations;
        }
        let slot = (iterations % settings.stall_window) as usize;
        if iterations >= settings.stall_window && fid - history[slot] < settings.stall_delta {
            break Termination::Stalled;
        }
        history[slot] = fid;

        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            break Termination::Stalled;
        }
        let scale = step / norm;
        for ((t, p), g) in trial.iter_mut().zip(&params).zip(&grad) {
            *t = p + scale * g;
        }
        let candidate = ev.fidelity(&trial);
        if candidate > fid {
            std::mem::swap(&mut params, &mut trial);
            fid = candidate;
            ev.gradient(&params, &mut grad);
            step = (step * STEP_GROWTH).min(STEP_CAP);
        } else {
            step = (step * STEP_SHRINK).max(STEP_FLOOR);
        }
        iterations += 1;
    };
    Run {
        fidelity: fid,
        params,
        iterations,
        termination,
    }
}

/// Maximizes the fidelity over rotation angles for a fixed configuration.
///
/// Each restart draws every angle uniformly from `[0, 2π)` and climbs with a
/// normalized gradient step whose length grows by 1.2 after an improving step
/// and halves (reverting the step) otherwise. Restarts stop early once a
/// perfect result is found; the best run is returned.
pub fn optimize(
    config: &GateConfiguration,
    target: &Target,
    settings: &OptimizerSettings,
    seed: RngSeed,
) -> Result<OptimizationResult> {
    settings.validate()?;
    let mut ev = Evaluator::new(config, target)?;
    let mut rng = seed.rng();
    let mut best: Option<Run> = None;
    let mut used = 0;
    for _ in 0..settings.restarts {
        used += 1;
        let init: Vec<f64> = (0..config.param_count())
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        let run = ascend(&mut ev, init, settings);
        let done = classify(run.fidelity, settings.perfect_threshold).0;
        if best.as_ref().is_none_or(|b| run.fidelity > b.fidelity) {
            best = Some(run);
        }
        if done {
            break;
        }
    }
    let best = best.expect("at least one restart");
    let (perfect, near_miss) = classify(best.fidelity, settings.perfect_threshold);
    Ok(OptimizationResult {
        fidelity: best.fidelity,
        params: RotationParams::new(best.params)?,
        iterations: best.iterations,
        termination: best.termination,
        perfect,
        near_miss,
        restarts_used: used,
    })
}
