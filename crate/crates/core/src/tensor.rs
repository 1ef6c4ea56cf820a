//! Dense complex linear algebra over n-qubit Hilbert spaces.
//!
//! Qubit 0 is the most significant bit of a basis index, so for two qubits
//! the computational basis is ordered |00⟩, |01⟩, |10⟩, |11⟩ with the left
//! label belonging to qubit 0.
//!
//! Gate application never forms the embedded 2^n × 2^n operator. The
//! kernels below walk the amplitude array with the stride of the touched
//! qubit. A row-major `d × d` matrix is itself a vector over `2n` qubits
//! (row bits first), which lets the same kernels multiply a gate onto a
//! matrix from the left (qubit `q`) or from the right (transposed gate on
//! qubit `n + q`).

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 8;

/// Tolerance used when validating externally supplied states and matrices.
pub const INPUT_TOLERANCE: f64 = 1e-10;

pub type Mat2 = [[C64; 2]; 2];
pub type Mat4 = [[C64; 4]; 4];

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

fn check_qubits(n: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidQubitCount(n))
    }
}

/// A seed for one reproducible random stream.
///
/// Streams with the same `seed` but different `stream` ids are independent,
/// so trial `t` of an experiment can draw from `(master, t)` no matter which
/// worker runs it or in what order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Derive an unrelated seed for a named purpose (targets, restarts, ...),
    /// keeping the stream id.
    pub fn child(&self, tag: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(tag)),
            stream: self.stream,
        }
    }

    pub fn with_stream(&self, stream: u64) -> Self {
        Self {
            seed: self.seed,
            stream,
        }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

// ---------------------------------------------------------------------------
// Kernels

/// Insert a zero bit at bit position `pos` of `x`.
#[inline]
fn insert_zero(x: usize, pos: usize) -> usize {
    let low = x & ((1 << pos) - 1);
    ((x >> pos) << (pos + 1)) | low
}

/// Apply a 2×2 gate to qubit `q` of a vector over `qubits` qubits.
pub fn apply_1q(amps: &mut [C64], qubits: usize, q: usize, m: &Mat2) {
    debug_assert_eq!(amps.len(), 1 << qubits);
    let stride = 1usize << (qubits - 1 - q);
    let [[m00, m01], [m10, m11]] = *m;
    for block in amps.chunks_exact_mut(2 * stride) {
        let (lo, hi) = block.split_at_mut(stride);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = m00 * x + m01 * y;
            *b = m10 * x + m11 * y;
        }
    }
}

/// Apply a 4×4 gate to qubits `(qa, qb)` of a vector over `qubits` qubits.
/// The gate's basis index is `2·bit(qa) + bit(qb)`.
pub fn apply_2q(amps: &mut [C64], qubits: usize, qa: usize, qb: usize, m: &Mat4) {
    debug_assert_eq!(amps.len(), 1 << qubits);
    debug_assert_ne!(qa, qb);
    let pa = qubits - 1 - qa;
    let pb = qubits - 1 - qb;
    let (sa, sb) = (1usize << pa, 1usize << pb);
    let (lo, hi) = if pa < pb { (pa, pb) } else { (pb, pa) };
    for k in 0..amps.len() >> 2 {
        let i00 = insert_zero(insert_zero(k, lo), hi);
        let idx = [i00, i00 | sb, i00 | sa, i00 | sa | sb];
        let v = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
        for (r, &i) in idx.iter().enumerate() {
            let row = &m[r];
            amps[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
        }
    }
}

/// Controlled-NOT: flips qubit `target` where qubit `control` is 1.
pub fn apply_cnot(amps: &mut [C64], qubits: usize, control: usize, target: usize) {
    let pc = qubits - 1 - control;
    let pt = qubits - 1 - target;
    let (lo, hi) = if pc < pt { (pc, pt) } else { (pt, pc) };
    let (sc, st) = (1usize << pc, 1usize << pt);
    for k in 0..amps.len() >> 2 {
        let base = insert_zero(insert_zero(k, lo), hi) | sc;
        amps.swap(base, base | st);
    }
}

pub fn transpose2(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

pub fn transpose4(m: &Mat4) -> Mat4 {
    let mut t = [[ZERO; 4]; 4];
    for (r, row) in m.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            t[c][r] = *v;
        }
    }
    t
}

// ---------------------------------------------------------------------------
// StateVector

/// A normalized pure state of `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// Validates length and normalization.
    pub fn new(n: usize, amps: Vec<C64>) -> Result<Self> {
        check_qubits(n)?;
        if amps.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                found: amps.len(),
            });
        }
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > INPUT_TOLERANCE {
            return Err(Error::NotNormalized(norm_sqr));
        }
        Ok(Self { n, amps })
    }

    /// Builds a state from arbitrary nonzero amplitudes by rescaling them.
    pub fn normalized(n: usize, mut amps: Vec<C64>) -> Result<Self> {
        check_qubits(n)?;
        if amps.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                found: amps.len(),
            });
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotNormalized(norm * norm));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { n, amps })
    }

    pub(crate) fn from_raw(n: usize, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n);
        Self { n, amps }
    }

    /// The basis state |index⟩.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_qubits(n)?;
        if index >= 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                found: index,
            });
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[index] = ONE;
        Ok(Self { n, amps })
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }
}

/// Draws a Haar-random pure state: 2^n i.i.d. complex Gaussians, normalized.
pub fn haar_random_state(n: usize, seed: RngSeed) -> Result<StateVector> {
    check_qubits(n)?;
    let mut rng = seed.rng();
    let amps = (0..1usize << n).map(|_| complex_gaussian(&mut rng)).collect();
    StateVector::normalized(n, amps)
}

// ---------------------------------------------------------------------------
// UnitaryMatrix

/// A square complex matrix on `n` qubits, stored row-major.
///
/// Constructors that accept caller data check unitarity; the algebra
/// operations (`compose`, `dagger`, `kron`) preserve it.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    n: usize,
    data: Vec<C64>,
}

impl UnitaryMatrix {
    pub fn new(n: usize, data: Vec<C64>) -> Result<Self> {
        check_qubits(n)?;
        let d = 1usize << n;
        if data.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: data.len(),
            });
        }
        let m = Self { n, data };
        let dev = m.unitarity_error();
        if dev.is_nan() || dev > INPUT_TOLERANCE {
            return Err(Error::NotUnitary(dev));
        }
        Ok(m)
    }

    pub(crate) fn from_raw(n: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), 1 << (2 * n));
        Self { n, data }
    }

    pub fn identity(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let d = 1usize << n;
        let mut data = vec![ZERO; d * d];
        for i in 0..d {
            data[i * d + i] = ONE;
        }
        Ok(Self { n, data })
    }

    pub fn from_mat2(m: &Mat2) -> Result<Self> {
        Self::new(1, m.iter().flatten().copied().collect())
    }

    pub fn from_mat4(m: &Mat4) -> Result<Self> {
        Self::new(2, m.iter().flatten().copied().collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim() + col]
    }

    pub fn row(&self, row: usize) -> &[C64] {
        let d = self.dim();
        &self.data[row * d..(row + 1) * d]
    }

    pub(crate) fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// `self · right`: applies `right` first, then `self`.
    pub fn compose(&self, right: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        if self.n != right.n {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: right.dim(),
            });
        }
        let d = self.dim();
        let mut out = vec![ZERO; d * d];
        for i in 0..d {
            let out_row = &mut out[i * d..(i + 1) * d];
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == ZERO {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(right.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(Self::from_raw(self.n, out))
    }

    pub fn dagger(&self) -> UnitaryMatrix {
        let d = self.dim();
        let mut out = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                out[j * d + i] = self.data[i * d + j].conj();
            }
        }
        Self::from_raw(self.n, out)
    }

    pub fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i]).sum()
    }

    /// Tensor product `self ⊗ other`; `self` acts on the leading qubits.
    pub fn kron(&self, other: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        let n = self.n + other.n;
        check_qubits(n)?;
        let (da, db) = (self.dim(), other.dim());
        let d = da * db;
        let mut out = vec![ZERO; d * d];
        for i in 0..da {
            for j in 0..da {
                let a = self.data[i * da + j];
                for k in 0..db {
                    for l in 0..db {
                        out[(i * db + k) * d + j * db + l] = a * other.data[k * db + l];
                    }
                }
            }
        }
        Ok(Self::from_raw(n, out))
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.dim(),
            });
        }
        let amps = (0..self.dim())
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(state.amplitudes())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        Ok(StateVector::from_raw(self.n, amps))
    }

    /// Largest entry of |U†U − I|.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut s = ZERO;
                for k in 0..d {
                    s += self.data[k * d + i].conj() * self.data[k * d + j];
                }
                if i == j {
                    s -= ONE;
                }
                worst = worst.max(s.norm());
            }
        }
        if worst.is_nan() {
            f64::INFINITY
        } else {
            worst
        }
    }

    pub fn max_abs_diff(&self, other: &UnitaryMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Distance to `other` after removing the best global phase.
    pub fn phase_insensitive_diff(&self, other: &UnitaryMatrix) -> f64 {
        let overlap: C64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            ONE
        };
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a * phase - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Draws a Haar-random unitary from a Ginibre matrix via QR, rescaling each
/// column of Q by the phase of the matching diagonal entry of R.
pub fn haar_random_unitary(n: usize, seed: RngSeed) -> Result<UnitaryMatrix> {
    check_qubits(n)?;
    let d = 1usize << n;
    let mut rng = seed.rng();
    // row-major draw order
    let ginibre = DMatrix::from_row_iterator(d, d, (0..d * d).map(|_| complex_gaussian(&mut rng)));
    let (q, r) = ginibre.qr().unpack();
    let mut data = vec![ZERO; d * d];
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { ONE };
        for i in 0..d {
            data[i * d + j] = q[(i, j)] * phase;
        }
    }
    Ok(UnitaryMatrix::from_raw(n, data))
}

/// Applies a one- or two-qubit `gate` to the listed `placement` qubits of
/// `state`. For two qubits the first placement index is the gate's leading
/// qubit.
pub fn apply_gate(state: &StateVector, gate: &UnitaryMatrix, placement: &[usize]) -> Result<StateVector> {
    let n = state.n();
    if placement.len() != gate.n() {
        return Err(Error::DimensionMismatch {
            expected: gate.n(),
            found: placement.len(),
        });
    }
    for (k, &q) in placement.iter().enumerate() {
        if q >= n {
            return Err(Error::QubitOutOfRange { index: q, n });
        }
        if placement[..k].contains(&q) {
            return Err(Error::DuplicateQubit(q));
        }
    }
    let mut out = state.clone();
    let g = gate.data();
    match placement {
        [q] => {
            let m = [[g[0], g[1]], [g[2], g[3]]];
            apply_1q(out.amps_mut(), n, *q, &m);
        }
        [a, b] => {
            let mut m = [[ZERO; 4]; 4];
            for (r, row) in m.iter_mut().enumerate() {
                row.copy_from_slice(&g[r * 4..r * 4 + 4]);
            }
            apply_2q(out.amps_mut(), n, *a, *b, &m);
        }
        _ => return Err(Error::UnsupportedArity(placement.len())),
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// JSON fixtures: arrays of [re, im] pairs, matrices as arrays of rows.

type Pair = [f64; 2];

fn to_pairs(v: &[C64]) -> Vec<Pair> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

fn from_pairs(v: &[Pair]) -> Vec<C64> {
    v.iter().map(|p| C64::new(p[0], p[1])).collect()
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim.is_power_of_two() && dim >= 2 {
        Ok(dim.trailing_zeros() as usize)
    } else {
        Err(Error::InvalidArgument(format!("dimension {dim} is not a power of two")))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixJson {
    Rows(Vec<Vec<Pair>>),
    Flat(Vec<Pair>),
}

impl StateVector {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(to_pairs(&self.amps)).expect("pairs serialize")
    }

    /// Parses `[[re, im], ...]`; amplitudes are renormalized if they are
    /// within 1e-6 of unit norm, rejected otherwise.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let pairs: Vec<Pair> = serde_json::from_value(value.clone())?;
        let n = qubits_for_dim(pairs.len())?;
        let amps = from_pairs(&pairs);
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > 1e-6 {
            return Err(Error::NotNormalized(norm_sqr));
        }
        Self::normalized(n, amps)
    }
}

impl UnitaryMatrix {
    pub fn to_json(&self) -> serde_json::Value {
        let d = self.dim();
        let rows: Vec<Vec<Pair>> = (0..d).map(|i| to_pairs(self.row(i))).collect();
        serde_json::to_value(rows).expect("pairs serialize")
    }

    /// Parses either an array of rows or a flat row-major array of pairs.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let parsed: MatrixJson = serde_json::from_value(value.clone())?;
        let (d, data) = match parsed {
            MatrixJson::Rows(rows) => {
                let d = rows.len();
                if let Some(bad) = rows.iter().find(|r| r.len() != d) {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: bad.len(),
                    });
                }
                (d, rows.iter().flat_map(|r| from_pairs(r)).collect::<Vec<_>>())
            }
            MatrixJson::Flat(flat) => {
                let d = (flat.len() as f64).sqrt().round() as usize;
                if d * d != flat.len() {
                    return Err(Error::InvalidArgument(format!(
                        "{} entries do not form a square matrix",
                        flat.len()
                    )));
                }
                (d, from_pairs(&flat))
            }
        };
        Self::new(qubits_for_dim(d)?, data)
    }
}
