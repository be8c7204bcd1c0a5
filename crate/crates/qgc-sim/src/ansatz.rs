//! Hardware-efficient variational ansatz.
//!
//! The circuit acts on `n_T` qubits starting from `|0…0⟩`: one rotation
//! block, then `T` repetitions of a linear CNOT cascade followed by another
//! rotation block. A rotation block applies `Ry(θ)` then `Rz(θ)` to every
//! qubit, each angle a distinct trainable parameter.
//!
//! Parameter ordering (fixed, recorded in checkpoints as
//! [`PARAM_ORDERING_VERSION`]): blocks in circuit order, qubits ascending
//! within a block, `Ry` before `Rz` per qubit. Total parameter count is
//! `2·n_T·(T+1)`; the cascade contributes `T·(n_T−1)` CNOTs, which is also
//! the entangling depth since each cascade is a serial chain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::StateVector;
use crate::scalar::Scalar;

/// Version tag for the parameter-ordering convention stored in checkpoints.
pub const PARAM_ORDERING_VERSION: u32 = 1;

/// Shape of the hardware-efficient ansatz: qubit count and cascade layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeaLayout {
    n_qubits: usize,
    layers: usize,
}

impl HeaLayout {
    /// Build a layout on `n_qubits ≥ 1` with `layers ≥ 0` cascade layers.
    pub fn new(n_qubits: usize, layers: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidConfig { reason: "ansatz needs at least 1 qubit".into() });
        }
        if n_qubits > crate::qstate::MAX_QUBITS {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "ansatz on {n_qubits} qubits exceeds the {}-qubit cap",
                    crate::qstate::MAX_QUBITS
                ),
            });
        }
        Ok(Self { n_qubits, layers })
    }

    /// Qubit count `n_T`.
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Number of entangling layers `T`.
    pub fn layers(&self) -> usize {
        self.layers
    }

    /// Trainable parameter count `2·n_T·(T+1)`.
    pub fn param_count(&self) -> usize {
        2 * self.n_qubits * (self.layers + 1)
    }

    /// CNOT count `T·(n_T−1)`.
    pub fn cnot_count(&self) -> usize {
        self.layers * (self.n_qubits - 1)
    }

    /// Entangling depth. The linear cascade serializes, so this equals
    /// [`Self::cnot_count`]; single-qubit rotations are not counted.
    pub fn depth(&self) -> usize {
        self.cnot_count()
    }
}

/// One circuit operation in the ansatz op list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CircuitOp {
    /// `Ry(θ[param])` on `qubit`.
    Ry { qubit: usize, param: usize },
    /// `Rz(θ[param])` on `qubit`.
    Rz { qubit: usize, param: usize },
    /// CNOT with the given control and target.
    Cnot { control: usize, target: usize },
}

/// Flatten the layout into its op list, in application order.
pub fn hea_ops(layout: &HeaLayout) -> Vec<CircuitOp> {
    let n = layout.n_qubits;
    let mut ops = Vec::with_capacity(2 * n * (layout.layers + 1) + layout.cnot_count());
    let mut param = 0usize;
    let mut rotation_block = |ops: &mut Vec<CircuitOp>| {
        for qubit in 0..n {
            ops.push(CircuitOp::Ry { qubit, param });
            param += 1;
            ops.push(CircuitOp::Rz { qubit, param });
            param += 1;
        }
    };
    rotation_block(&mut ops);
    for _ in 0..layout.layers {
        for q in 0..n - 1 {
            ops.push(CircuitOp::Cnot { control: q, target: q + 1 });
        }
        rotation_block(&mut ops);
    }
    ops
}

/// Apply one op in place, reading angles from `theta`.
pub(crate) fn apply_op_mut<S: Scalar>(state: &mut StateVector<S>, op: &CircuitOp, theta: &[S]) {
    match *op {
        CircuitOp::Ry { qubit, param } => state.apply_ry_mut(qubit, theta[param]),
        CircuitOp::Rz { qubit, param } => state.apply_rz_mut(qubit, theta[param]),
        CircuitOp::Cnot { control, target } => state.apply_cnot_mut(control, target),
    }
}

/// Apply the inverse of one op in place.
pub(crate) fn apply_op_inverse_mut<S: Scalar>(
    state: &mut StateVector<S>,
    op: &CircuitOp,
    theta: &[S],
) {
    match *op {
        CircuitOp::Ry { qubit, param } => state.apply_ry_mut(qubit, -theta[param]),
        CircuitOp::Rz { qubit, param } => state.apply_rz_mut(qubit, -theta[param]),
        CircuitOp::Cnot { control, target } => state.apply_cnot_mut(control, target),
    }
}

/// Prepare the ansatz state `|q_T(θ)⟩` from `|0…0⟩`.
pub fn hea_state<S: Scalar>(layout: &HeaLayout, theta: &[S]) -> Result<StateVector<S>> {
    if theta.len() != layout.param_count() {
        return Err(Error::DimensionMismatch {
            expected: layout.param_count(),
            actual: theta.len(),
        });
    }
    let mut state = StateVector::zero(layout.n_qubits)?;
    for op in hea_ops(layout) {
        apply_op_mut(&mut state, &op, theta);
    }
    Ok(state)
}

/// Resource metadata `(parameter count, entangling depth)` for a layout.
pub fn hea_metadata(layout: &HeaLayout) -> (usize, usize) {
    (layout.param_count(), layout.depth())
}

/// Trainable parameters bound to a layout, with checkpoint serialization.
///
/// The JSON document records the layout, the ordering-convention version,
/// and the angles; loading rejects mismatched versions or lengths so stale
/// checkpoints fail loudly instead of silently permuting parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AnsatzParameters<S: Scalar> {
    ordering_version: u32,
    layout: HeaLayout,
    theta: Vec<S>,
}

impl<S: Scalar> AnsatzParameters<S> {
    /// All-zero angles (prepares exactly `|0…0⟩`).
    pub fn zeros(layout: HeaLayout) -> Self {
        Self {
            ordering_version: PARAM_ORDERING_VERSION,
            theta: vec![S::zero(); layout.param_count()],
            layout,
        }
    }

    /// Angles drawn i.i.d. uniform on `[0, 2π)` from a seeded generator.
    pub fn init_random(layout: HeaLayout, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let two_pi = 2.0 * std::f64::consts::PI;
        let theta = (0..layout.param_count())
            .map(|_| S::from_f64_lossy(rng.random::<f64>() * two_pi))
            .collect();
        Self { ordering_version: PARAM_ORDERING_VERSION, layout, theta }
    }

    /// Wrap explicit angles, validating the length against the layout.
    pub fn from_theta(layout: HeaLayout, theta: Vec<S>) -> Result<Self> {
        if theta.len() != layout.param_count() {
            return Err(Error::DimensionMismatch {
                expected: layout.param_count(),
                actual: theta.len(),
            });
        }
        Ok(Self { ordering_version: PARAM_ORDERING_VERSION, layout, theta })
    }

    /// The layout these parameters bind to.
    pub fn layout(&self) -> HeaLayout {
        self.layout
    }

    /// Angle slice in the fixed ordering.
    pub fn theta(&self) -> &[S] {
        &self.theta
    }

    /// Mutable angle slice (length is fixed by the layout).
    pub fn theta_mut(&mut self) -> &mut [S] {
        &mut self.theta
    }

    /// Prepare the ansatz state for these angles.
    pub fn state(&self) -> Result<StateVector<S>> {
        hea_state(&self.layout, &self.theta)
    }

    /// Serialize to the checkpoint JSON document.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parse and validate a checkpoint JSON document.
    pub fn from_json(doc: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(doc)?;
        if p.ordering_version != PARAM_ORDERING_VERSION {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "checkpoint uses parameter ordering version {} (expected {PARAM_ORDERING_VERSION})",
                    p.ordering_version
                ),
            });
        }
        if p.theta.len() != p.layout.param_count() {
            return Err(Error::DimensionMismatch {
                expected: p.layout.param_count(),
                actual: p.theta.len(),
            });
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::DensityMatrix;
    use approx::assert_abs_diff_eq;

    #[test]
    fn layout_counts_match_closed_forms() {
        let cases = [
            // (n_T, T) → (params, depth)
            ((8usize, 31usize), (512usize, 217usize)),
            ((8, 6), (112, 42)),
            ((9, 56), (1026, 448)),
        ];
        for ((n, t), (params, depth)) in cases {
            let layout = HeaLayout::new(n, t).unwrap();
            assert_eq!(hea_metadata(&layout), (params, depth));
            assert_eq!(layout.cnot_count(), depth);
        }
        assert!(HeaLayout::new(0, 1).is_err());
    }

    #[test]
    fn op_list_has_expected_structure() {
        let layout = HeaLayout::new(3, 2).unwrap();
        let ops = hea_ops(&layout);
        // 3 rotation blocks of 6 ops plus 2 cascades of 2 CNOTs.
        assert_eq!(ops.len(), 18 + 4);
        assert_eq!(ops[0], CircuitOp::Ry { qubit: 0, param: 0 });
        assert_eq!(ops[1], CircuitOp::Rz { qubit: 0, param: 1 });
        assert_eq!(ops[4], CircuitOp::Ry { qubit: 2, param: 4 });
        assert_eq!(ops[6], CircuitOp::Cnot { control: 0, target: 1 });
        assert_eq!(ops[7], CircuitOp::Cnot { control: 1, target: 2 });
        // Parameter indices cover 0..param_count exactly once.
        let mut seen = vec![false; layout.param_count()];
        for op in &ops {
            match *op {
                CircuitOp::Ry { param, .. } | CircuitOp::Rz { param, .. } => {
                    assert!(!seen[param]);
                    seen[param] = true;
                }
                CircuitOp::Cnot { .. } => {}
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn zero_angles_prepare_ground_state() {
        let layout = HeaLayout::new(4, 3).unwrap();
        let state = AnsatzParameters::<f64>::zeros(layout).state().unwrap();
        assert_abs_diff_eq!(state.amplitudes()[0].re, 1.0, epsilon = 1e-12);
        for a in &state.amplitudes()[1..] {
            assert!(a.norm() < 1e-12);
        }
    }

    #[test]
    fn single_parameter_hits_documented_slot() {
        // Slot 2 is Ry on qubit 1 in the initial block: amplitude moves to
        // basis index 2 (bit 1 set) with weight sin(β/2).
        let layout = HeaLayout::new(2, 0).unwrap();
        let beta = 0.9f64;
        let mut theta = vec![0.0; layout.param_count()];
        theta[2] = beta;
        let state = hea_state(&layout, &theta).unwrap();
        assert_abs_diff_eq!(state.amplitudes()[0].re, (beta / 2.0).cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(state.amplitudes()[2].re, (beta / 2.0).sin(), epsilon = 1e-12);
        assert!(state.amplitudes()[1].norm() < 1e-15);
        assert!(state.amplitudes()[3].norm() < 1e-15);
    }

    #[test]
    fn cascade_propagates_excitation() {
        // Ry(π) flips qubit 0; the cascade copies it onto qubit 1 → |11⟩.
        let layout = HeaLayout::new(2, 1).unwrap();
        let mut theta = vec![0.0; layout.param_count()];
        theta[0] = std::f64::consts::PI;
        let state = hea_state(&layout, &theta).unwrap();
        assert_abs_diff_eq!(state.amplitudes()[3].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn state_is_normalized_for_random_angles() {
        for seed in 0..10u64 {
            let layout = HeaLayout::new(5, 3).unwrap();
            let params = AnsatzParameters::<f64>::init_random(layout, seed);
            assert!(params.theta().iter().all(|&t| (0.0..2.0 * std::f64::consts::PI).contains(&t)));
            let state = params.state().unwrap();
            assert_abs_diff_eq!(state.norm_sqr(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn init_is_deterministic_in_seed() {
        let layout = HeaLayout::new(3, 2).unwrap();
        let a = AnsatzParameters::<f64>::init_random(layout, 42);
        let b = AnsatzParameters::<f64>::init_random(layout, 42);
        let c = AnsatzParameters::<f64>::init_random(layout, 43);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn angles_are_two_pi_periodic_up_to_phase() {
        let layout = HeaLayout::new(3, 2).unwrap();
        let base = AnsatzParameters::<f64>::init_random(layout, 7);
        let ref_state = base.state().unwrap();
        for j in [0usize, 5, 11, base.theta().len() - 1] {
            let mut shifted = base.clone();
            shifted.theta_mut()[j] += 2.0 * std::f64::consts::PI;
            let s = shifted.state().unwrap();
            let fidelity = ref_state.fidelity(&s).unwrap();
            assert!(fidelity > 1.0 - 1e-12, "fidelity {fidelity} at slot {j}");
        }
    }

    #[test]
    fn reduced_state_rank_bounded_by_traced_subsystem() {
        // Tracing out k qubits of a pure state leaves rank ≤ 2^k.
        let layout = HeaLayout::new(5, 4).unwrap();
        let params = AnsatzParameters::<f64>::init_random(layout, 19);
        let state = params.state().unwrap();
        for k in 1..=2usize {
            let ancilla: Vec<usize> = (5 - k..5).collect();
            let rho: DensityMatrix<f64> = state.partial_trace(&ancilla).unwrap();
            assert_eq!(rho.n_qubits(), 5 - k);
            assert!(
                rho.numerical_rank(1e-10) <= 1 << k,
                "rank {} with {k} qubits traced out",
                rho.numerical_rank(1e-10)
            );
        }
    }

    #[test]
    fn inverse_ops_undo_the_circuit() {
        let layout = HeaLayout::new(4, 2).unwrap();
        let params = AnsatzParameters::<f64>::init_random(layout, 3);
        let mut state = params.state().unwrap();
        for op in hea_ops(&layout).iter().rev() {
            apply_op_inverse_mut(&mut state, op, params.theta());
        }
        assert_abs_diff_eq!(state.amplitudes()[0].re, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn checkpoint_round_trips_and_validates() {
        let layout = HeaLayout::new(3, 1).unwrap();
        let params = AnsatzParameters::<f64>::init_random(layout, 99);
        let doc = params.to_json().unwrap();
        assert!(doc.contains("ordering_version"));
        let back = AnsatzParameters::<f64>::from_json(&doc).unwrap();
        assert_eq!(params, back);

        let wrong = doc.replace("\"ordering_version\": 1", "\"ordering_version\": 2");
        assert!(AnsatzParameters::<f64>::from_json(&wrong).is_err());

        let mut truncated = params.clone();
        truncated.theta.pop();
        let doc = serde_json::to_string(&truncated).unwrap();
        assert!(AnsatzParameters::<f64>::from_json(&doc).is_err());
    }

    #[test]
    fn f32_ansatz_states_work() {
        let layout = HeaLayout::new(3, 2).unwrap();
        let params = AnsatzParameters::<f32>::init_random(layout, 5);
        let state = params.state().unwrap();
        assert!((state.norm_sqr() - 1.0).abs() < 1e-5);
    }
}
