//! Entangler configurations and parameterized circuits.
//!
//! A circuit over `n` qubits with `N` entanglers is laid out as
//!
//! ```text
//! R(q0) R(q1) ... R(q_{n-1})  |  E(i0,j0) R(i0) R(j0)  |  E(i1,j1) R(i1) R(j1)  | ...
//! ```
//!
//! where every `R` is a ZYZ Euler rotation `Rz(z2)·Ry(y)·Rz(z1)` carrying
//! three angles. Angles are stored rotation by rotation as `(z1, y, z2)`,
//! giving `3(n + 2N)` parameters in total.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{
    apply_1q, apply_2q, apply_cnot, transpose4, Mat2, Mat4, StateVector, UnitaryMatrix, MAX_QUBITS, ONE,
    ZERO,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Cnot,
    B,
}

impl GateKind {
    /// The fixed two-qubit matrix in the basis |00⟩, |01⟩, |10⟩, |11⟩, where
    /// the left label is the lower-indexed qubit of the placement.
    pub fn matrix(self) -> Mat4 {
        let mut m = [[ZERO; 4]; 4];
        match self {
            GateKind::Cnot => {
                m[0][0] = ONE;
                m[1][1] = ONE;
                m[2][3] = ONE;
                m[3][2] = ONE;
            }
            GateKind::B => {
                let r = C64::new(FRAC_1_SQRT_2, 0.0);
                let i = C64::new(0.0, FRAC_1_SQRT_2);
                m[0][0] = ONE;
                m[1][1] = r;
                m[1][2] = i;
                m[2][3] = ONE;
                m[3][1] = i;
                m[3][2] = r;
            }
        }
        m
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Cnot => "cnot",
            GateKind::B => "b",
        }
    }
}

impl std::str::FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cnot" | "cx" => Ok(GateKind::Cnot),
            "b" => Ok(GateKind::B),
            other => Err(Error::InvalidArgument(format!("unknown gate kind `{other}`"))),
        }
    }
}

/// An unordered pair of distinct qubits, stored with `i < j`.
///
/// For the CNOT the lower index is the control. Reversing control and
/// target only changes the gate by single-qubit rotations, which the
/// neighbouring rotation layers absorb.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Placement {
    i: usize,
    j: usize,
}

impl Placement {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::DuplicateQubit(a));
        }
        Ok(Self {
            i: a.min(b),
            j: a.max(b),
        })
    }

    pub fn i(&self) -> usize {
        self.i
    }

    pub fn j(&self) -> usize {
        self.j
    }

    /// All n(n−1)/2 pairs in lexicographic order.
    pub fn all(n: usize) -> Vec<Placement> {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| Placement { i, j }))
            .collect()
    }
}

impl Serialize for Placement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.i, self.j].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Placement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [a, b] = <[usize; 2]>::deserialize(d)?;
        Placement::new(a, b).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GateConfiguration {
    n: usize,
    kind: GateKind,
    placements: Vec<Placement>,
}

impl GateConfiguration {
    pub fn new(n: usize, kind: GateKind, placements: Vec<Placement>) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n) {
            return Err(Error::InvalidQubitCount(n));
        }
        if let Some(p) = placements.iter().find(|p| p.j >= n) {
            return Err(Error::QubitOutOfRange { index: p.j, n });
        }
        Ok(Self { n, kind, placements })
    }

    /// Builds from raw index pairs.
    pub fn from_pairs(n: usize, kind: GateKind, pairs: &[(usize, usize)]) -> Result<Self> {
        let placements = pairs
            .iter()
            .map(|&(a, b)| Placement::new(a, b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, kind, placements)
    }

    pub fn empty(n: usize, kind: GateKind) -> Result<Self> {
        Self::new(n, kind, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn placements(&self) -> &[Placement] {
        &self.placements
    }

    /// Number of entanglers, `N`.
    pub fn size(&self) -> usize {
        self.placements.len()
    }

    pub fn rotation_count(&self) -> usize {
        self.n + 2 * self.placements.len()
    }

    pub fn param_count(&self) -> usize {
        3 * self.rotation_count()
    }

    /// The layer sequence in application order.
    pub fn layers(&self) -> impl Iterator<Item = Layer> + '_ {
        let initial = (0..self.n).map(|q| Layer::Rotation { qubit: q, index: q });
        let body = self.placements.iter().enumerate().flat_map(move |(k, p)| {
            let r = self.n + 2 * k;
            [
                Layer::Entangler { a: p.i, b: p.j },
                Layer::Rotation { qubit: p.i, index: r },
                Layer::Rotation { qubit: p.j, index: r + 1 },
            ]
        });
        initial.chain(body)
    }
}

/// One step of a circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    /// Euler rotation number `index` acting on `qubit`.
    Rotation { qubit: usize, index: usize },
    /// The configuration's entangler on `(a, b)`, `a < b`.
    Entangler { a: usize, b: usize },
}

/// `Rz(z2)·Ry(y)·Rz(z1)` with `Rz(t) = diag(e^{-it/2}, e^{it/2})` and
/// `Ry(t) = [[cos t/2, −sin t/2], [sin t/2, cos t/2]]`.
pub fn euler_rotation(z1: f64, y: f64, z2: f64) -> Mat2 {
    let (s, c) = (y / 2.0).sin_cos();
    let sum = C64::from_polar(1.0, -(z1 + z2) / 2.0);
    let diff = C64::from_polar(1.0, (z1 - z2) / 2.0);
    [[sum * c, -diff * s], [diff.conj() * s, sum.conj() * c]]
}

/// Partial derivatives of [`euler_rotation`] with respect to `(z1, y, z2)`.
pub fn euler_rotation_derivatives(z1: f64, y: f64, z2: f64) -> [Mat2; 3] {
    let r = euler_rotation(z1, y, z2);
    let half_i = C64::new(0.0, 0.5);
    // z1 scales the columns by ∓i/2, z2 the rows
    let d_z1 = [[-half_i * r[0][0], half_i * r[0][1]], [-half_i * r[1][0], half_i * r[1][1]]];
    let d_z2 = [[-half_i * r[0][0], -half_i * r[0][1]], [half_i * r[1][0], half_i * r[1][1]]];
    let (s, c) = (y / 2.0).sin_cos();
    let sum = C64::from_polar(1.0, -(z1 + z2) / 2.0);
    let diff = C64::from_polar(1.0, (z1 - z2) / 2.0);
    let d_y = [
        [sum * (-s / 2.0), -diff * (c / 2.0)],
        [diff.conj() * (c / 2.0), sum.conj() * (-s / 2.0)],
    ];
    [d_z1, d_y, d_z2]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RotationParams(Vec<f64>);

impl RotationParams {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if let Some(bad) = angles.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite angle {bad}")));
        }
        Ok(Self(angles))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The `(z1, y, z2)` triple of rotation `index`.
    pub fn triple(&self, index: usize) -> (f64, f64, f64) {
        let t = &self.0[3 * index..3 * index + 3];
        (t[0], t[1], t[2])
    }
}

/// Applies circuit layers to a buffer viewed as a vector over `qubits` qubits,
/// with the circuit's qubit `q` living at buffer qubit `offset + q`.
pub(crate) struct LayerKernel {
    pub kind: GateKind,
    pub qubits: usize,
    pub offset: usize,
    /// Multiply by transposed gates (right multiplication of a row buffer).
    pub transposed: bool,
    matrix: Mat4,
}

impl LayerKernel {
    pub fn new(kind: GateKind, qubits: usize, offset: usize, transposed: bool) -> Self {
        let m = kind.matrix();
        let matrix = if transposed { transpose4(&m) } else { m };
        Self {
            kind,
            qubits,
            offset,
            transposed,
            matrix,
        }
    }

    pub fn entangler(&self, buf: &mut [C64], a: usize, b: usize) {
        let (a, b) = (a + self.offset, b + self.offset);
        match self.kind {
            // the CNOT permutation is its own transpose
            GateKind::Cnot => apply_cnot(buf, self.qubits, a, b),
            GateKind::B => apply_2q(buf, self.qubits, a, b, &self.matrix),
        }
    }

    pub fn rotation(&self, buf: &mut [C64], qubit: usize, m: &Mat2) {
        let m = if self.transposed {
            [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
        } else {
            *m
        };
        apply_1q(buf, self.qubits, qubit + self.offset, &m);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterizedCircuit {
    config: GateConfiguration,
    params: RotationParams,
}

impl ParameterizedCircuit {
    pub fn new(config: GateConfiguration, params: RotationParams) -> Result<Self> {
        if params.len() != config.param_count() {
            return Err(Error::DimensionMismatch {
                expected: config.param_count(),
                found: params.len(),
            });
        }
        Ok(Self { config, params })
    }

    /// All angles zero: the bare entangler sequence.
    pub fn zero_angles(config: GateConfiguration) -> Self {
        let params = RotationParams::zeros(config.param_count());
        Self { config, params }
    }

    pub fn config(&self) -> &GateConfiguration {
        &self.config
    }

    pub fn params(&self) -> &RotationParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    fn run_layers(&self, buf: &mut [C64], kernel: &LayerKernel) {
        for layer in self.config.layers() {
            match layer {
                Layer::Entangler { a, b } => kernel.entangler(buf, a, b),
                Layer::Rotation { qubit, index } => {
                    let (z1, y, z2) = self.params.triple(index);
                    kernel.rotation(buf, qubit, &euler_rotation(z1, y, z2));
                }
            }
        }
    }

    /// The full circuit unitary.
    pub fn unitary(&self) -> UnitaryMatrix {
        let n = self.n();
        let mut u = UnitaryMatrix::identity(n).expect("configuration validated n");
        let kernel = LayerKernel::new(self.config.kind, 2 * n, 0, false);
        self.run_layers(u.data_mut(), &kernel);
        u
    }

    /// The circuit applied to `input`, gate by gate.
    pub fn apply(&self, input: &StateVector) -> Result<StateVector> {
        if input.n() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.n(),
                found: input.dim(),
            });
        }
        let mut out = input.clone();
        let kernel = LayerKernel::new(self.config.kind, self.n(), 0, false);
        self.run_layers(out.amps_mut(), &kernel);
        Ok(out)
    }

    /// One gate per line, for human inspection.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# n={} kind={} entanglers={}",
            self.n(),
            self.config.kind.name(),
            self.config.size()
        );
        for layer in self.config.layers() {
            match layer {
                Layer::Entangler { a, b } => {
                    let _ = writeln!(out, "{} q{} q{}", self.config.kind.name(), a, b);
                }
                Layer::Rotation { qubit, index } => {
                    let (z1, y, z2) = self.params.triple(index);
                    let _ = writeln!(out, "rot q{qubit} z1={z1:.12} y={y:.12} z2={z2:.12}");
                }
            }
        }
        out
    }
}

pub fn circuit_unitary(circuit: &ParameterizedCircuit) -> UnitaryMatrix {
    circuit.unitary()
}

pub fn circuit_apply(circuit: &ParameterizedCircuit, input: &StateVector) -> Result<StateVector> {
    circuit.apply(input)
}

/// On-disk circuit format, version 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitFile {
    pub version: u32,
    pub n: usize,
    pub kind: GateKind,
    pub placements: Vec<Placement>,
    pub angles: Vec<f64>,
}

impl CircuitFile {
    pub const VERSION: u32 = 1;

    pub fn into_circuit(self) -> Result<ParameterizedCircuit> {
        if self.version != Self::VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported circuit file version {}",
                self.version
            )));
        }
        let config = GateConfiguration::new(self.n, self.kind, self.placements)?;
        ParameterizedCircuit::new(config, RotationParams::new(self.angles)?)
    }
}

impl From<&ParameterizedCircuit> for CircuitFile {
    fn from(c: &ParameterizedCircuit) -> Self {
        Self {
            version: Self::VERSION,
            n: c.config.n,
            kind: c.config.kind,
            placements: c.config.placements.clone(),
            angles: c.params.0.clone(),
        }
    }
}

impl ParameterizedCircuit {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CircuitFile::from(self)).expect("circuit serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<CircuitFile>(text)?.into_circuit()
    }
}

/// The n-qubit Toffoli: identity except |1…10⟩ ↔ |1…11⟩.
pub fn toffoli_target(n: usize) -> Result<UnitaryMatrix> {
    if !(3..=MAX_QUBITS).contains(&n) {
        return Err(Error::InvalidQubitCount(n));
    }
    let d = 1usize << n;
    let mut data = vec![ZERO; d * d];
    for i in 0..d - 2 {
        data[i * d + i] = ONE;
    }
    data[(d - 2) * d + d - 1] = ONE;
    data[(d - 1) * d + d - 2] = ONE;
    UnitaryMatrix::new(n, data)
}

/// A 15-CNOT configuration known to realize the 4-qubit Toffoli up to
/// single-qubit rotations. Pairs below are 1-based, top to bottom.
pub fn toffoli4_cnot15_config() -> GateConfiguration {
    const PAIRS: [(usize, usize); 15] = [
        (2, 3),
        (1, 3),
        (3, 4),
        (1, 4),
        (2, 4),
        (2, 3),
        (1, 3),
        (1, 2),
        (2, 4),
        (1, 3),
        (2, 3),
        (1, 4),
        (3, 4),
        (1, 4),
        (1, 2),
    ];
    let zero_based: Vec<_> = PAIRS.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
    GateConfiguration::from_pairs(4, GateKind::Cnot, &zero_based).expect("fixture pairs are valid")
}
