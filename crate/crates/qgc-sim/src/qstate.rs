//! Dense statevector and density-matrix engine.
//!
//! Everything in this module is exact (up to floating-point rounding): states
//! are full complex amplitude vectors over `2^n` basis states, gates are dense
//! 2×2 or 4×4 unitaries, and measurement statistics are computed from squared
//! amplitudes rather than sampled — except for [`MeasurementDistribution::sample_shots`],
//! which draws seeded multinomial shot counts for variance studies.
//!
//! # Qubit ordering
//!
//! Qubit `i` owns bit `i` of a basis-state index (little-endian). Qubit 0 is
//! the rightmost position in ket notation and the uppermost wire in circuit
//! diagrams. All register arguments (`partial_trace`, `measure_register`)
//! follow this convention; a register listed as `[2, 0]` maps qubit 2 to the
//! low bit of the local outcome index and qubit 0 to the high bit.
//!
//! # Size limits
//!
//! The dense representation is intended for small systems; constructors
//! reject more than [`MAX_QUBITS`] qubits. Every shipped experiment fits in 13.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::{One, Zero};
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Hard cap on qubit counts for the dense representation (2^20 amplitudes).
pub const MAX_QUBITS: usize = 20;

/// Tolerance for the statevector normalization invariant (`f64`; the `f32`
/// instantiation loosens every invariant to [`Scalar::INVARIANT_TOL`]).
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance for the gate unitarity check (`f64`).
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance for density-matrix Hermiticity and unit-trace checks (`f64`).
pub const DENSITY_TOL: f64 = 1e-10;
/// Eigenvalue floor for the positive-semidefiniteness check (`f64`).
pub const PSD_TOL: f64 = -1e-8;
/// Tolerance on the imaginary part of expectation values (`f64`).
pub const EXPECTATION_IMAG_TOL: f64 = 1e-10;

/// Pure quantum state on `n_qubits` qubits: `2^n_qubits` complex amplitudes.
///
/// The amplitude at index `k` multiplies the computational basis state whose
/// bit `i` is qubit `i`'s value. Construction validates the unit-norm
/// invariant within [`NORM_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<S: Scalar> {
    n_qubits: usize,
    amps: Vec<Complex<S>>,
}

impl<S: Scalar> StateVector<S> {
    /// Build a state from explicit amplitudes, validating length and norm.
    pub fn new(n_qubits: usize, amps: Vec<Complex<S>>) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let dim = 1usize << n_qubits;
        if amps.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: amps.len() });
        }
        let state = Self { n_qubits, amps };
        let deviation = (state.norm_sqr_f64() - 1.0).abs();
        if deviation > S::INVARIANT_TOL {
            return Err(Error::NotNormalized { deviation, tolerance: S::INVARIANT_TOL });
        }
        Ok(state)
    }

    /// The all-zeros basis state `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let dim = 1usize << n_qubits;
        let mut amps = vec![Complex::zero(); dim];
        amps[0] = Complex::one();
        Ok(Self { n_qubits, amps })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: index });
        }
        let mut amps = vec![Complex::zero(); dim];
        amps[index] = Complex::one();
        Ok(Self { n_qubits, amps })
    }

    /// Internal constructor for amplitudes already known to be normalized.
    pub(crate) fn from_parts_unchecked(n_qubits: usize, amps: Vec<Complex<S>>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n_qubits);
        Self { n_qubits, amps }
    }

    /// Number of qubits.
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Dimension of the amplitude vector (`2^n_qubits`).
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// Amplitude slice in basis order.
    pub fn amplitudes(&self) -> &[Complex<S>] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex<S>] {
        &mut self.amps
    }

    /// Squared L2 norm (1 for any valid state).
    pub fn norm_sqr(&self) -> S {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn norm_sqr_f64(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr().to_f64_lossy()).sum()
    }

    /// Inner product `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex<S>> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .fold(Complex::zero(), |acc, (a, b)| acc + a.conj() * b))
    }

    /// Fidelity `|⟨self|other⟩|²` — the global-phase-insensitive overlap.
    pub fn fidelity(&self, other: &Self) -> Result<S> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Apply a dense 1- or 2-qubit unitary to the listed target qubits.
    ///
    /// `targets[0]` addresses the low bit of the gate's local basis index.
    /// The gate matrix is checked for unitarity within [`UNITARY_TOL`];
    /// targets must be distinct and in range. The returned state keeps unit
    /// norm to working precision because the matrix is (checked) unitary.
    pub fn apply_gate(&self, gate: &GateMatrix<S>, targets: &[usize]) -> Result<Self> {
        gate.check_unitary()?;
        if targets.len() != gate.arity() {
            return Err(Error::InvalidRegister {
                reason: format!(
                    "gate of arity {} given {} target(s)",
                    gate.arity(),
                    targets.len()
                ),
            });
        }
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.n_qubits {
                return Err(Error::QubitOutOfRange { index: t, n_qubits: self.n_qubits });
            }
            if targets[..i].contains(&t) {
                return Err(Error::DuplicateTarget { index: t });
            }
        }
        let mut out = self.clone();
        match gate {
            GateMatrix::One(m) => apply_one_qubit(&mut out.amps, targets[0], m),
            GateMatrix::Two(m) => apply_two_qubit(&mut out.amps, targets[0], targets[1], m),
        }
        Ok(out)
    }

    /// Multiply amplitude `k` by `e^{i·phases[k]}`.
    ///
    /// This is the exact dense form of any diagonal unitary; it preserves the
    /// norm identically. `phases` must have one entry per amplitude.
    pub fn apply_diagonal_phase(&self, phases: &[S]) -> Result<Self> {
        if phases.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: phases.len() });
        }
        let mut out = self.clone();
        apply_phases(&mut out.amps, phases);
        Ok(out)
    }

    /// Trace out the listed qubits, returning the reduced density matrix on
    /// the remaining qubits (ascending global order → local bit order).
    ///
    /// The traced set must be a proper subset of the register: at least one
    /// qubit must remain. The output satisfies the [`DensityMatrix`]
    /// invariants by construction and is re-validated.
    pub fn partial_trace(&self, traced: &[usize]) -> Result<DensityMatrix<S>> {
        let mut is_traced = vec![false; self.n_qubits];
        for &q in traced {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits: self.n_qubits });
            }
            if is_traced[q] {
                return Err(Error::InvalidRegister {
                    reason: format!("qubit {q} listed twice in traced set"),
                });
            }
            is_traced[q] = true;
        }
        let kept: Vec<usize> =
            (0..self.n_qubits).filter(|&q| !is_traced[q]).collect();
        if kept.is_empty() {
            return Err(Error::EmptyRemainder);
        }
        let traced_list: Vec<usize> =
            (0..self.n_qubits).filter(|&q| is_traced[q]).collect();

        let kept_dim = 1usize << kept.len();
        let traced_dim = 1usize << traced_list.len();
        // Scatter tables: local index → its bits placed at global positions.
        let kept_scatter = scatter_table(&kept);
        let traced_scatter = scatter_table(&traced_list);

        let mut entries = vec![Complex::<S>::zero(); kept_dim * kept_dim];
        for a in 0..traced_dim {
            let base = traced_scatter[a];
            // ρ[i][j] += ψ[base|i] · conj(ψ[base|j])
            for i in 0..kept_dim {
                let amp_i = self.amps[base | kept_scatter[i]];
                if amp_i.is_zero() {
                    continue;
                }
                let row = i * kept_dim;
                for j in 0..kept_dim {
                    let amp_j = self.amps[base | kept_scatter[j]];
                    entries[row + j] += amp_i * amp_j.conj();
                }
            }
        }
        DensityMatrix::new(kept.len(), entries)
    }

    /// Marginal outcome distribution of the listed register qubits.
    ///
    /// `register[j]` supplies bit `j` of the local outcome index; qubits not
    /// listed are summed over. The register must be non-empty with distinct,
    /// in-range indices.
    pub fn measure_register(&self, register: &[usize]) -> Result<MeasurementDistribution<S>> {
        if register.is_empty() {
            return Err(Error::InvalidRegister { reason: "empty measurement register".into() });
        }
        for (i, &q) in register.iter().enumerate() {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits: self.n_qubits });
            }
            if register[..i].contains(&q) {
                return Err(Error::DuplicateTarget { index: q });
            }
        }
        let local_dim = 1usize << register.len();
        let mut probs = vec![S::zero(); local_dim];
        for (idx, amp) in self.amps.iter().enumerate() {
            let mut local = 0usize;
            for (j, &q) in register.iter().enumerate() {
                local |= ((idx >> q) & 1) << j;
            }
            probs[local] += amp.norm_sqr();
        }
        MeasurementDistribution::new(register.to_vec(), probs)
    }

    // ---- in-crate fast paths (no per-call validation) ----

    pub(crate) fn apply_one_qubit_mut(&mut self, qubit: usize, m: &[[Complex<S>; 2]; 2]) {
        apply_one_qubit(&mut self.amps, qubit, m);
    }

    pub(crate) fn apply_cnot_mut(&mut self, control: usize, target: usize) {
        apply_cnot(&mut self.amps, control, target);
    }

    pub(crate) fn apply_phases_mut(&mut self, phases: &[S]) {
        apply_phases(&mut self.amps, phases);
    }

    /// `Ry(β)` on one qubit: real rotation, no trig on the hot path beyond
    /// the two half-angle terms.
    pub(crate) fn apply_ry_mut(&mut self, qubit: usize, beta: S) {
        let half = beta / S::from_f64_lossy(2.0);
        let (c, s) = (half.cos(), half.sin());
        let zero = S::zero();
        let m = [
            [Complex::new(c, zero), Complex::new(-s, zero)],
            [Complex::new(s, zero), Complex::new(c, zero)],
        ];
        apply_one_qubit(&mut self.amps, qubit, &m);
    }

    /// `Rz(β) = diag(e^{−iβ/2}, e^{+iβ/2})` on one qubit, applied as the
    /// pure phase multiply it is.
    pub(crate) fn apply_rz_mut(&mut self, qubit: usize, beta: S) {
        let half = beta / S::from_f64_lossy(2.0);
        let lo = Complex::new(half.cos(), -half.sin());
        let hi = Complex::new(half.cos(), half.sin());
        let mask = 1usize << qubit;
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            *amp *= if idx & mask == 0 { lo } else { hi };
        }
    }
}

/// Haar-ish random test state: i.i.d. complex-normal amplitudes, normalized.
///
/// Deterministic in `seed`. Intended for seeded oracle tests and examples.
pub fn random_state<S: Scalar>(n_qubits: usize, seed: u64) -> Result<StateVector<S>>
where
    StandardNormal: Distribution<S>,
{
    check_qubit_count(n_qubits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 1usize << n_qubits;
    let mut amps: Vec<Complex<S>> = (0..dim)
        .map(|_| {
            let re: S = StandardNormal.sample(&mut rng);
            let im: S = StandardNormal.sample(&mut rng);
            Complex::new(re, im)
        })
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<S>().sqrt();
    for a in &mut amps {
        *a = *a / norm;
    }
    Ok(StateVector::from_parts_unchecked(n_qubits, amps))
}

fn check_qubit_count(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::InvalidConfig {
            reason: format!("qubit count {n_qubits} outside supported range 1..={MAX_QUBITS}"),
        });
    }
    Ok(())
}

/// For each local index of `positions`, the global index with those bits
/// scattered to the listed global positions.
fn scatter_table(positions: &[usize]) -> Vec<usize> {
    let dim = 1usize << positions.len();
    (0..dim)
        .map(|local| {
            let mut global = 0usize;
            for (j, &q) in positions.iter().enumerate() {
                global |= ((local >> j) & 1) << q;
            }
            global
        })
        .collect()
}

fn apply_one_qubit<S: Scalar>(amps: &mut [Complex<S>], qubit: usize, m: &[[Complex<S>; 2]; 2]) {
    let stride = 1usize << qubit;
    let block = stride << 1;
    let dim = amps.len();
    let mut base = 0usize;
    while base < dim {
        for offset in base..base + stride {
            let a = amps[offset];
            let b = amps[offset + stride];
            amps[offset] = m[0][0] * a + m[0][1] * b;
            amps[offset + stride] = m[1][0] * a + m[1][1] * b;
        }
        base += block;
    }
}

fn apply_two_qubit<S: Scalar>(
    amps: &mut [Complex<S>],
    low: usize,
    high: usize,
    m: &[[Complex<S>; 4]; 4],
) {
    let b0 = 1usize << low;
    let b1 = 1usize << high;
    for i in 0..amps.len() {
        if i & (b0 | b1) != 0 {
            continue;
        }
        let idx = [i, i | b0, i | b1, i | b0 | b1];
        let v = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
        for (row, &out_idx) in idx.iter().enumerate() {
            amps[out_idx] = m[row][0] * v[0] + m[row][1] * v[1] + m[row][2] * v[2] + m[row][3] * v[3];
        }
    }
}

fn apply_cnot<S: Scalar>(amps: &mut [Complex<S>], control: usize, target: usize) {
    let cbit = 1usize << control;
    let tbit = 1usize << target;
    for i in 0..amps.len() {
        // Visit each swapped pair once: control set, target clear.
        if i & cbit != 0 && i & tbit == 0 {
            amps.swap(i, i | tbit);
        }
    }
}

fn apply_phases<S: Scalar>(amps: &mut [Complex<S>], phases: &[S]) {
    for (a, &p) in amps.iter_mut().zip(phases) {
        *a *= Complex::new(p.cos(), p.sin());
    }
}

/// Dense 1-qubit (2×2) or 2-qubit (4×4) gate matrix.
///
/// For the 2-qubit form the local basis index is `bit(targets[0]) +
/// 2·bit(targets[1])` — the first listed target is the low bit.
#[derive(Debug, Clone, PartialEq)]
pub enum GateMatrix<S: Scalar> {
    /// 2×2 unitary, row-major.
    One([[Complex<S>; 2]; 2]),
    /// 4×4 unitary, row-major.
    Two([[Complex<S>; 4]; 4]),
}

impl<S: Scalar> GateMatrix<S> {
    /// Number of target qubits (1 or 2).
    pub fn arity(&self) -> usize {
        match self {
            GateMatrix::One(_) => 1,
            GateMatrix::Two(_) => 2,
        }
    }

    /// Hadamard gate.
    pub fn hadamard() -> Self {
        let h = S::one() / S::from_f64_lossy(2.0).sqrt();
        let h = Complex::new(h, S::zero());
        GateMatrix::One([[h, h], [h, -h]])
    }

    /// Pauli-X gate.
    pub fn pauli_x() -> Self {
        let o = Complex::one();
        let z = Complex::zero();
        GateMatrix::One([[z, o], [o, z]])
    }

    /// Pauli-Y gate.
    pub fn pauli_y() -> Self {
        let i = Complex::new(S::zero(), S::one());
        let z = Complex::zero();
        GateMatrix::One([[z, -i], [i, z]])
    }

    /// Pauli-Z gate.
    pub fn pauli_z() -> Self {
        let o = Complex::one();
        let z = Complex::zero();
        GateMatrix::One([[o, z], [z, -o]])
    }

    /// Rotation about Y: `Ry(β) = [[cos β/2, −sin β/2], [sin β/2, cos β/2]]`.
    pub fn ry(beta: S) -> Self {
        let half = beta / S::from_f64_lossy(2.0);
        let c = Complex::new(half.cos(), S::zero());
        let s = Complex::new(half.sin(), S::zero());
        GateMatrix::One([[c, -s], [s, c]])
    }

    /// Rotation about Z: `Rz(β) = diag(e^{−iβ/2}, e^{+iβ/2})`.
    pub fn rz(beta: S) -> Self {
        let half = beta / S::from_f64_lossy(2.0);
        let em = Complex::new(half.cos(), -half.sin());
        let ep = Complex::new(half.cos(), half.sin());
        let z = Complex::zero();
        GateMatrix::One([[em, z], [z, ep]])
    }

    /// CNOT with `targets[0]` as control and `targets[1]` as target.
    pub fn cnot() -> Self {
        let o = Complex::one();
        let z = Complex::zero();
        // Local index = control_bit + 2·target_bit.
        GateMatrix::Two([
            [o, z, z, z],
            [z, z, z, o],
            [z, z, o, z],
            [z, o, z, z],
        ])
    }

    /// Max entrywise deviation of `U†U` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        match self {
            GateMatrix::One(m) => unitarity_deviation_generic(2, |r, c| m[r][c]),
            GateMatrix::Two(m) => unitarity_deviation_generic(4, |r, c| m[r][c]),
        }
    }

    fn check_unitary(&self) -> Result<()> {
        let deviation = self.unitarity_deviation();
        if deviation > S::INVARIANT_TOL {
            return Err(Error::NonUnitaryGate { deviation, tolerance: S::INVARIANT_TOL });
        }
        Ok(())
    }
}

fn unitarity_deviation_generic<S: Scalar>(
    dim: usize,
    m: impl Fn(usize, usize) -> Complex<S>,
) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = Complex::<S>::zero();
            for l in 0..dim {
                acc += m(l, i).conj() * m(l, j);
            }
            let target = if i == j { Complex::one() } else { Complex::zero() };
            let dev = (acc - target).norm().to_f64_lossy();
            worst = worst.max(dev);
        }
    }
    worst
}

/// Hermitian, unit-trace, positive-semidefinite matrix on `n_qubits` qubits.
///
/// Construction validates all three invariants: Hermiticity and unit trace
/// within [`DENSITY_TOL`] entrywise, and every eigenvalue at least
/// [`PSD_TOL`]. The eigenvalue check runs a cyclic Jacobi diagonalization,
/// which is O(dim³) per sweep — fine at the dimensions this crate targets.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<S: Scalar> {
    n_qubits: usize,
    entries: Vec<Complex<S>>,
}

impl<S: Scalar> DensityMatrix<S> {
    /// Build from row-major entries, validating all invariants.
    pub fn new(n_qubits: usize, entries: Vec<Complex<S>>) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let dim = 1usize << n_qubits;
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, actual: entries.len() });
        }
        // Hermiticity.
        let mut herm_dev = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                let d = (entries[i * dim + j] - entries[j * dim + i].conj()).norm();
                herm_dev = herm_dev.max(d.to_f64_lossy());
            }
        }
        if herm_dev > S::INVARIANT_TOL {
            return Err(Error::InvalidDensityMatrix {
                reason: format!(
                    "Hermiticity deviation {herm_dev:.3e} exceeds {:.1e}",
                    S::INVARIANT_TOL
                ),
            });
        }
        // Unit trace.
        let trace: Complex<S> = (0..dim).map(|i| entries[i * dim + i]).fold(Complex::zero(), |a, b| a + b);
        let trace_dev = (trace - Complex::<S>::one()).norm().to_f64_lossy();
        if trace_dev > S::INVARIANT_TOL {
            return Err(Error::InvalidDensityMatrix {
                reason: format!("trace deviates from 1 by {trace_dev:.3e}"),
            });
        }
        let dm = Self { n_qubits, entries };
        // Positive semidefiniteness via the full spectrum.
        let min_eig = dm
            .eigenvalues()
            .first()
            .copied()
            .map(|e| e.to_f64_lossy())
            .unwrap_or(0.0);
        if min_eig < S::PSD_FLOOR {
            return Err(Error::InvalidDensityMatrix {
                reason: format!("minimum eigenvalue {min_eig:.3e} below {:.1e}", S::PSD_FLOOR),
            });
        }
        Ok(dm)
    }

    /// Number of qubits.
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Matrix dimension (`2^n_qubits`).
    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    /// Row-major entry slice.
    pub fn entries(&self) -> &[Complex<S>] {
        &self.entries
    }

    /// Entry at (row, col).
    pub fn entry(&self, row: usize, col: usize) -> Complex<S> {
        self.entries[row * self.dim() + col]
    }

    /// All eigenvalues, ascending (real by Hermiticity).
    ///
    /// Computed with a cyclic complex Jacobi iteration; accurate to roughly
    /// machine precision times the matrix scale.
    pub fn eigenvalues(&self) -> Vec<S> {
        hermitian_eigenvalues(self.dim(), &self.entries)
    }

    /// Numerical rank: eigenvalues above `threshold`.
    pub fn numerical_rank(&self, threshold: S) -> usize {
        self.eigenvalues().iter().filter(|&&e| e > threshold).count()
    }

    /// Expectation value `⟨ψ|ρ|ψ⟩` as a real number.
    ///
    /// The imaginary part must vanish within [`EXPECTATION_IMAG_TOL`] — a
    /// larger residue means the inputs violate their invariants. The real
    /// part is clamped to `[0, 1]`, where it must lie for any valid pair.
    pub fn expectation(&self, psi: &StateVector<S>) -> Result<S> {
        let dim = self.dim();
        if psi.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: psi.dim() });
        }
        let mut acc = Complex::<S>::zero();
        for i in 0..dim {
            let mut row = Complex::<S>::zero();
            for j in 0..dim {
                row += self.entries[i * dim + j] * psi.amps[j];
            }
            acc += psi.amps[i].conj() * row;
        }
        let imag = acc.im.abs().to_f64_lossy();
        if imag > S::INVARIANT_TOL {
            return Err(Error::NonRealExpectation { imag, tolerance: S::INVARIANT_TOL });
        }
        Ok(acc.re.max(S::zero()).min(S::one()))
    }
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// O(dim³) per sweep with quadratic convergence once nearly diagonal. Only
/// eigenvalues are accumulated (no vectors). Ascending order.
fn hermitian_eigenvalues<S: Scalar>(dim: usize, entries: &[Complex<S>]) -> Vec<S> {
    let mut a: Vec<Complex<S>> = entries.to_vec();
    let scale: S = (0..dim)
        .map(|i| a[i * dim + i].norm())
        .fold(S::zero(), |m, v| m.max(v))
        .max(S::from_f64_lossy(1e-30));
    let stop = scale * S::from_f64_lossy(1e-14);

    for _sweep in 0..60 {
        // Largest off-diagonal magnitude decides convergence.
        let mut off = S::zero();
        for p in 0..dim {
            for q in (p + 1)..dim {
                off = off.max(a[p * dim + q].norm());
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = a[p * dim + q];
                let mag = apq.norm();
                if mag <= stop * S::from_f64_lossy(1e-2) {
                    continue;
                }
                // Phase factor making the pivot real, then a real Jacobi
                // rotation on the (p,q) plane: G = diag(u,1)·[[c, s], [−s, c]].
                let u = apq / Complex::new(mag, S::zero());
                let app = a[p * dim + p].re;
                let aqq = a[q * dim + q].re;
                let tau = (aqq - app) / (S::from_f64_lossy(2.0) * mag);
                let t = if tau >= S::zero() {
                    S::one() / (tau + (S::one() + tau * tau).sqrt())
                } else {
                    -S::one() / (-tau + (S::one() + tau * tau).sqrt())
                };
                let c = S::one() / (S::one() + t * t).sqrt();
                let s = t * c;
                let (cc, ss) = (Complex::new(c, S::zero()), Complex::new(s, S::zero()));
                // Column update: col_p ← c·u·col_p − s·col_q ; col_q ← s·u·col_p + c·col_q.
                for k in 0..dim {
                    let akp = a[k * dim + p];
                    let akq = a[k * dim + q];
                    a[k * dim + p] = cc * u * akp - ss * akq;
                    a[k * dim + q] = ss * u * akp + cc * akq;
                }
                // Row update with the conjugate transform.
                let ub = u.conj();
                for k in 0..dim {
                    let apk = a[p * dim + k];
                    let aqk = a[q * dim + k];
                    a[p * dim + k] = cc * ub * apk - ss * aqk;
                    a[q * dim + k] = ss * ub * apk + cc * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<S> = (0..dim).map(|i| a[i * dim + i].re).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    eigs
}

/// Outcome distribution of a register measurement.
///
/// `register_qubits[j]` supplies bit `j` of an outcome index; probabilities
/// sum to 1 within [`NORM_TOL`] and every entry is non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementDistribution<S: Scalar> {
    register_qubits: Vec<usize>,
    probabilities: Vec<S>,
}

impl<S: Scalar> MeasurementDistribution<S> {
    /// Build and validate a distribution.
    pub fn new(register_qubits: Vec<usize>, probabilities: Vec<S>) -> Result<Self> {
        let expected = 1usize
            .checked_shl(register_qubits.len() as u32)
            .unwrap_or(0);
        if register_qubits.is_empty() || probabilities.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: probabilities.len(),
            });
        }
        if let Some(&bad) = probabilities.iter().find(|&&p| p < S::zero()) {
            return Err(Error::InvalidRegister {
                reason: format!("negative probability {bad}"),
            });
        }
        let total: f64 = probabilities.iter().map(|p| p.to_f64_lossy()).sum();
        if (total - 1.0).abs() > S::INVARIANT_TOL {
            return Err(Error::NotNormalized {
                deviation: (total - 1.0).abs(),
                tolerance: S::INVARIANT_TOL,
            });
        }
        Ok(Self { register_qubits, probabilities })
    }

    /// The measured qubits, in local-bit order.
    pub fn register_qubits(&self) -> &[usize] {
        &self.register_qubits
    }

    /// Outcome probabilities, indexed by local outcome.
    pub fn probabilities(&self) -> &[S] {
        &self.probabilities
    }

    /// Probability of one outcome index.
    pub fn probability(&self, outcome: usize) -> S {
        self.probabilities[outcome]
    }

    /// Draw `s` multinomial shots with a seeded generator.
    ///
    /// Sampling inverts the cumulative distribution with i.i.d. uniforms from
    /// a counter-based ChaCha stream, so identical `(distribution, s, seed)`
    /// triples reproduce identical counts on every platform.
    pub fn sample_shots(&self, s: u64, seed: u64) -> Result<ShotCounts> {
        if s == 0 {
            return Err(Error::InvalidConfig { reason: "shot count must be at least 1".into() });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cdf: Vec<f64> = self
            .probabilities
            .iter()
            .scan(0.0f64, |acc, p| {
                *acc += p.to_f64_lossy();
                Some(*acc)
            })
            .collect();
        let total = *cdf.last().expect("non-empty distribution");
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        for _ in 0..s {
            let u: f64 = rng.random::<f64>() * total;
            // First index with cdf[idx] > u; rounding can push u to the top.
            let idx = match cdf.binary_search_by(|c| c.partial_cmp(&u).expect("finite cdf")) {
                Ok(i) => (i + 1).min(cdf.len() - 1),
                Err(i) => i.min(cdf.len() - 1),
            };
            *counts.entry(idx).or_insert(0) += 1;
        }
        Ok(ShotCounts { counts, total_shots: s })
    }
}

/// Multinomial shot-count record: outcome index → count, plus the total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotCounts {
    counts: BTreeMap<usize, u64>,
    total_shots: u64,
}

impl ShotCounts {
    /// Outcome → count map (only outcomes that were hit appear).
    pub fn counts(&self) -> &BTreeMap<usize, u64> {
        &self.counts
    }

    /// Count for one outcome (0 if never hit).
    pub fn count(&self, outcome: usize) -> u64 {
        self.counts.get(&outcome).copied().unwrap_or(0)
    }

    /// Total shots `S`; always equals the sum of all counts.
    pub fn total_shots(&self) -> u64 {
        self.total_shots
    }
}
