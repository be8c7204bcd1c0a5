//! Generative classification model built from the simulator primitives.
//!
//! The model prepares a trained circuit state `|q(θ)⟩` on three little-endian
//! registers — label `Y` on bits `[0, n_Y)`, feature `X` on
//! `[n_Y, n_Y+n_X)`, ancilla above — and scores an input/label pair by the
//! projection
//!
//! ```text
//! P(x, y) = ⟨ψ_{x,y}| Tr_A |q(θ)⟩⟨q(θ)| |ψ_{x,y}⟩,    ψ_{x,y} = |y⟩ ⊗ |ψ(x)⟩
//! ```
//!
//! which estimates the scaled joint density `p̂(x, y) = M_h·P(x, y)` with
//! `M_h = (2πh²)^{−D/2}`. Two evaluation paths compute the same number: the
//! literal reduced-density-matrix expectation, and the fast path that applies
//! the inverse feature unitary to the `X` register and sums `|amplitude|²`
//! over ancilla branches at `X = 0`. Their agreement is a standing invariant
//! (see [`QgcModel::joint_projection`] vs
//! [`QgcModel::joint_projection_via_density`]).
//!
//! Training minimizes either the averaged negative log joint density or the
//! discriminative negative log posterior with plain minibatch gradient
//! descent; gradients come from an adjoint-state sweep, a parameter-shift
//! rule, or central finite differences, which agree to tight tolerances and
//! cross-check one another in the test suite.

use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::{apply_op_inverse_mut, hea_ops, AnsatzParameters, CircuitOp, HeaLayout};
use crate::encodings::{
    label_qubits, pauli_to_canonical, phase_state, qeff_depth, qrff_phase_vector,
    sample_qeff_weights, zz_depth, zz_feature_state, zz_phase_vector, DistributionKind,
    FourierWeightsCanonical, FourierWeightsPauli, KernelBandwidth, MinMaxScaler,
    SamplingDistribution,
};
use crate::error::{Error, Result};
use crate::qstate::{DensityMatrix, StateVector};
use crate::scalar::Scalar;

/// Default floor applied inside logarithms; projections below it are clamped
/// so single collapsed samples cannot blow up a batch loss.
pub const LOG_EPSILON: f64 = 1e-12;

/// Checkpoint document format version.
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// SplitMix64 mixing step; used to derive independent stream seeds from a
/// master seed without correlated low bits.
pub(crate) fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Which loss the trainer optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainingMode {
    /// Averaged negative log joint density (density estimation + classing).
    Generative,
    /// Negative log posterior `P(y|x)` (pure classification).
    Discriminative,
}

impl std::fmt::Display for TrainingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrainingMode::Generative => "generative",
            TrainingMode::Discriminative => "discriminative",
        })
    }
}

/// How gradients are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMethod {
    /// Reverse-mode adjoint sweep: one forward and one backward pass per
    /// batch, exact to machine precision. The default.
    Adjoint,
    /// Exact parameter-shift rule, `∂p/∂θ = [p(θ+π/2) − p(θ−π/2)]/2`,
    /// chained through the loss. Two circuit evaluations per parameter.
    ParameterShift,
    /// Central finite differences with step `1e-5` on the clamped loss.
    FiniteDifference,
}

/// Trainer settings. [`Default`] gives generative mode, adjoint gradients,
/// learning rate `0.05`, 30 epochs, minibatches of 32, seed 7, and the
/// standard log floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrainConfig<S: Scalar> {
    /// Loss to optimize.
    pub mode: TrainingMode,
    /// Plain gradient-descent step size.
    pub learning_rate: S,
    /// Number of passes over the training set.
    pub epochs: usize,
    /// Minibatch size (clamped to the dataset size).
    pub batch_size: usize,
    /// Gradient backend.
    pub gradient_method: GradientMethod,
    /// Seed for the epoch shuffling stream.
    pub seed: u64,
    /// Floor applied to projections inside logarithms.
    pub log_epsilon: S,
}

impl<S: Scalar> Default for TrainConfig<S> {
    fn default() -> Self {
        Self {
            mode: TrainingMode::Generative,
            learning_rate: S::from_f64_lossy(0.05),
            epochs: 30,
            batch_size: 32,
            gradient_method: GradientMethod::Adjoint,
            seed: 7,
            log_epsilon: S::from_f64_lossy(LOG_EPSILON),
        }
    }
}

/// One per-epoch loss record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LossTraceEntry<S: Scalar> {
    /// Epoch index, starting at 0.
    pub epoch: usize,
    /// Full-dataset loss evaluated after the epoch's updates.
    pub loss: S,
}

/// Loss trajectory of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LossTrace<S: Scalar> {
    /// Which loss the entries report.
    pub mode: TrainingMode,
    /// One entry per epoch, in order.
    pub entries: Vec<LossTraceEntry<S>>,
}

impl<S: Scalar> LossTrace<S> {
    /// Write the trace as CSV with columns `epoch,loss,mode`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["epoch", "loss", "mode"]).map_err(csv_io)?;
        for e in &self.entries {
            w.write_record([
                e.epoch.to_string(),
                format!("{}", e.loss),
                self.mode.to_string(),
            ])
            .map_err(csv_io)?;
        }
        w.flush().map_err(|e| Error::io("<loss trace>", e))?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::CsvFormat { path: "<loss trace>".into(), reason: e.to_string() }
}

/// Scored density query result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DensityEstimate<S: Scalar> {
    /// Queried label.
    pub label: usize,
    /// Raw joint projection `P(x, y) ∈ [0, 1]`.
    pub projection: S,
    /// Scaled joint density `M_h·P(x, y)`.
    pub density: S,
}

/// Finite-shot estimator statistics for one `(x, y)` query.
///
/// `runs` independent seeded experiments of `shots` measurements each. Joint
/// statistics are over the raw per-run proportions `S*/S`; the density mean
/// additionally carries the `M_h` scale. Conditional statistics divide by the
/// per-run count of `X = 0` outcomes and skip runs where that count is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct VarianceReport<S: Scalar> {
    /// Shots per run.
    pub shots: u64,
    /// Number of runs.
    pub runs: usize,
    /// Analytic projection `P(x, y)` for reference.
    pub exact_projection: S,
    /// Mean of per-run joint proportions.
    pub joint_mean: S,
    /// Population variance of per-run joint proportions.
    pub joint_variance: S,
    /// `M_h` times the joint mean (density units).
    pub joint_density_mean: S,
    /// Mean of per-run conditional proportions, if any run had `X = 0` hits.
    pub conditional_mean: Option<S>,
    /// Population variance of the conditional proportions over included runs.
    pub conditional_variance: Option<S>,
    /// Runs dropped from the conditional statistics for lack of `X = 0` hits.
    pub excluded_runs: usize,
}

/// Input feature map bound into a model: sampled weights or the ZZ map with
/// its optional fitted input scaler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", tag = "kind", rename_all = "kebab-case")]
pub enum FeatureMap<S: Scalar> {
    /// Pauli-basis Fourier encoding; the converted canonical weights are
    /// cached because phase evaluation uses them directly.
    Qeff {
        /// Sampled Pauli-basis weights (the circuit-facing form).
        pauli: FourierWeightsPauli<S>,
        /// Cached conversion of `pauli`.
        canonical: FourierWeightsCanonical<S>,
    },
    /// Canonical-basis Fourier encoding (the reference form).
    Qrff {
        /// Directly sampled canonical weights.
        canonical: FourierWeightsCanonical<S>,
    },
    /// Second-order ZZ map on `n_qubits` inputs scaled into `[0, 2π)`.
    Zz {
        /// Qubit count, equal to the raw input dimension.
        n_qubits: usize,
        /// Min–max scaler fitted on training data; `None` means inputs are
        /// assumed pre-scaled.
        input_scaler: Option<MinMaxScaler<S>>,
    },
}

impl<S: Scalar> FeatureMap<S> {
    /// Expected raw input dimension.
    pub fn input_dim(&self) -> usize {
        match self {
            FeatureMap::Qeff { canonical, .. } | FeatureMap::Qrff { canonical } => {
                canonical.input_dim()
            }
            FeatureMap::Zz { n_qubits, .. } => *n_qubits,
        }
    }

    /// Short name used in artifacts and CSV columns.
    pub fn kind_name(&self) -> &'static str {
        match self {
            FeatureMap::Qeff { .. } => "qeff",
            FeatureMap::Qrff { .. } => "qrff",
            FeatureMap::Zz { .. } => "zz",
        }
    }

    /// Decomposition depth of the map on `n_x` qubits.
    pub fn depth(&self, n_x: usize) -> usize {
        match self {
            FeatureMap::Qeff { .. } | FeatureMap::Qrff { .. } => qeff_depth(n_x),
            FeatureMap::Zz { .. } => zz_depth(n_x),
        }
    }
}

/// Recipe for building a [`FeatureMap`] when the model is constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "distribution", rename_all = "kebab-case")]
pub enum FeatureMapSpec {
    /// Sample Pauli-basis weights from the given distribution.
    Qeff(SamplingDistribution),
    /// Sample canonical weights directly (normal family only).
    Qrff(SamplingDistribution),
    /// ZZ map; the input scaler is fitted later from training data.
    Zz,
}

/// Resource metadata of a built model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelMetadata {
    /// Total qubit count `n_A + n_X + n_Y`.
    pub n_qubits: usize,
    /// Trainable parameter count `2·n_T·(T+1)`.
    pub param_count: usize,
    /// CNOT count of the ansatz, `T·(n_T−1)`.
    pub cnot_count: usize,
    /// Decomposition depth of the feature map.
    pub feature_map_depth: usize,
    /// Entangling depth of the ansatz (equals its CNOT count).
    pub ansatz_depth: usize,
    /// `feature_map_depth + ansatz_depth`.
    pub total_depth: usize,
}

/// Serialized model bundle: registers, bandwidth, feature-map weights,
/// trained angles, and provenance (seed plus a configuration fingerprint).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ModelCheckpoint<S: Scalar> {
    /// Document format version.
    pub version: u32,
    /// Ancilla qubit count.
    pub n_ancilla: usize,
    /// Feature qubit count.
    pub n_feature: usize,
    /// Label qubit count.
    pub n_label: usize,
    /// Number of classes.
    pub classes: usize,
    /// Kernel bandwidth.
    pub bandwidth: KernelBandwidth<S>,
    /// Feature map with its weights.
    pub feature_map: FeatureMap<S>,
    /// Ansatz layer count.
    pub layers: usize,
    /// Master seed the model was built with.
    pub seed: u64,
    /// SHA-256 fingerprint of the structural configuration.
    pub config_fingerprint: String,
    /// Trained parameters (includes the ordering-convention version).
    pub params: AnsatzParameters<S>,
}

impl<S: Scalar> ModelCheckpoint<S> {
    /// Serialize to the checkpoint JSON document.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parse a checkpoint JSON document (structure validated on model load).
    pub fn from_json(doc: &str) -> Result<Self> {
        let cp: Self = serde_json::from_str(doc)?;
        if cp.version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "unsupported checkpoint version {} (expected {CHECKPOINT_FORMAT_VERSION})",
                    cp.version
                ),
            });
        }
        Ok(cp)
    }
}

/// The generative classification model.
///
/// Holds the register geometry, bandwidth, sampled feature map, and the
/// trainable ansatz parameters. All scoring goes through the projections
/// `P(x, y)`; see the module docs for the register conventions.
#[derive(Debug, Clone, PartialEq)]
pub struct QgcModel<S: Scalar> {
    n_ancilla: usize,
    n_feature: usize,
    n_label: usize,
    classes: usize,
    bandwidth: KernelBandwidth<S>,
    feature_map: FeatureMap<S>,
    params: AnsatzParameters<S>,
    seed: u64,
}

impl<S: Scalar> QgcModel<S> {
    /// Build a model.
    ///
    /// `n_label` must equal `⌈log₂ classes⌉`; the total register must fit the
    /// simulator cap; Fourier maps read the input dimension from `bandwidth`,
    /// while the ZZ map requires `bandwidth.input_dim() == n_feature`.
    /// Ansatz angles start i.i.d. uniform on `[0, 2π)` from `seed`; feature
    /// weights are drawn from the sampling distribution carried by the
    /// [`FeatureMapSpec`], which has its own seed.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        n_ancilla: usize,
        n_feature: usize,
        n_label: usize,
        classes: usize,
        bandwidth: KernelBandwidth<S>,
        spec: FeatureMapSpec,
        layers: usize,
        seed: u64,
    ) -> Result<Self>
    where
        rand_distr::StandardNormal: rand::distr::Distribution<S>,
        rand::distr::StandardUniform: rand::distr::Distribution<S>,
    {
        if n_ancilla == 0 {
            return Err(Error::InvalidConfig {
                reason: "need at least one ancilla qubit to form a mixed reduced state".into(),
            });
        }
        let needed = label_qubits(classes)?;
        if n_label != needed {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "{classes} classes need exactly {needed} label qubits, got {n_label}"
                ),
            });
        }
        let n_total = n_ancilla + n_feature + n_label;
        if n_total > crate::qstate::MAX_QUBITS {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "total register of {n_total} qubits exceeds the {}-qubit cap",
                    crate::qstate::MAX_QUBITS
                ),
            });
        }
        let feature_map = match spec {
            FeatureMapSpec::Qeff(dist) => {
                let pauli = sample_qeff_weights(n_feature, bandwidth.input_dim(), dist)?;
                let canonical = pauli_to_canonical(&pauli);
                FeatureMap::Qeff { pauli, canonical }
            }
            FeatureMapSpec::Qrff(dist) => {
                if dist.kind != DistributionKind::Normal {
                    return Err(Error::InvalidConfig {
                        reason: "canonical-basis weights sample from the normal family only"
                            .into(),
                    });
                }
                let canonical = FourierWeightsCanonical::sample_standard_normal(
                    n_feature,
                    bandwidth.input_dim(),
                    dist.seed,
                )?;
                FeatureMap::Qrff { canonical }
            }
            FeatureMapSpec::Zz => {
                if bandwidth.input_dim() != n_feature {
                    return Err(Error::InvalidConfig {
                        reason: format!(
                            "ZZ map encodes one input per qubit: input dim {} ≠ n_feature {n_feature}",
                            bandwidth.input_dim()
                        ),
                    });
                }
                FeatureMap::Zz { n_qubits: n_feature, input_scaler: None }
            }
        };
        let layout = HeaLayout::new(n_total, layers)?;
        let params = AnsatzParameters::init_random(layout, seed);
        Ok(Self {
            n_ancilla,
            n_feature,
            n_label,
            classes,
            bandwidth,
            feature_map,
            params,
            seed,
        })
    }

    // ---- geometry accessors ----

    /// Ancilla qubit count.
    pub fn n_ancilla(&self) -> usize {
        self.n_ancilla
    }

    /// Feature qubit count.
    pub fn n_feature(&self) -> usize {
        self.n_feature
    }

    /// Label qubit count.
    pub fn n_label(&self) -> usize {
        self.n_label
    }

    /// Number of classes.
    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Total qubit count.
    pub fn n_total(&self) -> usize {
        self.n_ancilla + self.n_feature + self.n_label
    }

    fn n_low(&self) -> usize {
        self.n_label + self.n_feature
    }

    /// Kernel bandwidth.
    pub fn bandwidth(&self) -> &KernelBandwidth<S> {
        &self.bandwidth
    }

    /// The bound feature map.
    pub fn feature_map(&self) -> &FeatureMap<S> {
        &self.feature_map
    }

    /// Build seed (drives the initial angles).
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Current ansatz parameters.
    pub fn params(&self) -> &AnsatzParameters<S> {
        &self.params
    }

    /// Replace the ansatz parameters (layout must match).
    pub fn set_params(&mut self, params: AnsatzParameters<S>) -> Result<()> {
        if params.layout() != self.params.layout() {
            return Err(Error::InvalidConfig {
                reason: "replacement parameters bind to a different layout".into(),
            });
        }
        self.params = params;
        Ok(())
    }

    /// Resource metadata for this configuration.
    pub fn metadata(&self) -> ModelMetadata {
        let layout = self.params.layout();
        let fm = self.feature_map.depth(self.n_feature);
        ModelMetadata {
            n_qubits: self.n_total(),
            param_count: layout.param_count(),
            cnot_count: layout.cnot_count(),
            feature_map_depth: fm,
            ansatz_depth: layout.depth(),
            total_depth: fm + layout.depth(),
        }
    }

    /// Fit the ZZ map's input scaler on training features. Errors for
    /// Fourier maps, which take raw inputs.
    pub fn fit_input_scaler(&mut self, features: &[Vec<S>]) -> Result<()> {
        match &mut self.feature_map {
            FeatureMap::Zz { input_scaler, .. } => {
                *input_scaler = Some(MinMaxScaler::fit(features)?);
                Ok(())
            }
            _ => Err(Error::InvalidConfig {
                reason: "only the ZZ map carries an input scaler".into(),
            }),
        }
    }

    // ---- feature-map plumbing ----

    /// Diagonal phase vector of the feature unitary at `x` (over `2^{n_X}`
    /// basis states; for the ZZ map this is the phase of one `U_Z` factor).
    fn input_phases(&self, x: &[S]) -> Result<Vec<S>> {
        match &self.feature_map {
            FeatureMap::Qeff { canonical, .. } | FeatureMap::Qrff { canonical } => {
                qrff_phase_vector(x, canonical, &self.bandwidth)
            }
            FeatureMap::Zz { n_qubits, input_scaler } => {
                if x.len() != *n_qubits {
                    return Err(Error::DimensionMismatch { expected: *n_qubits, actual: x.len() });
                }
                let scaled;
                let xs: &[S] = match input_scaler {
                    Some(sc) => {
                        scaled = sc.transform(x)?;
                        &scaled
                    }
                    None => x,
                };
                Ok(zz_phase_vector(xs))
            }
        }
    }

    /// The pure feature state `|ψ(x)⟩` on the `X` register alone.
    pub fn feature_state(&self, x: &[S]) -> Result<StateVector<S>> {
        match &self.feature_map {
            FeatureMap::Qeff { .. } | FeatureMap::Qrff { .. } => {
                let phases = self.input_phases(x)?;
                Ok(phase_state(self.n_feature, &phases))
            }
            FeatureMap::Zz { input_scaler, .. } => {
                let scaled;
                let xs: &[S] = match input_scaler {
                    Some(sc) => {
                        scaled = sc.transform(x)?;
                        &scaled
                    }
                    None => x,
                };
                zz_feature_state(xs)
            }
        }
    }

    /// Multiply each amplitude by `e^{±i·phases[x-bits]}`.
    fn mul_x_phases(&self, s: &mut StateVector<S>, phases: &[S], conjugate: bool) {
        let d = 1usize << self.n_feature;
        let n_y = self.n_label;
        let factors: Vec<Complex<S>> = phases
            .iter()
            .map(|&p| {
                let im = if conjugate { -p.sin() } else { p.sin() };
                Complex::new(p.cos(), im)
            })
            .collect();
        for (idx, amp) in s.amplitudes_mut().iter_mut().enumerate() {
            *amp *= factors[(idx >> n_y) & (d - 1)];
        }
    }

    fn h_wall_x(&self, s: &mut StateVector<S>) {
        let c = S::one() / S::from_f64_lossy(2.0).sqrt();
        let zero = S::zero();
        let h = [
            [Complex::new(c, zero), Complex::new(c, zero)],
            [Complex::new(c, zero), Complex::new(-c, zero)],
        ];
        for q in self.n_label..self.n_label + self.n_feature {
            s.apply_one_qubit_mut(q, &h);
        }
    }

    /// Apply the inverse feature unitary at `x` to the `X` register.
    fn unprep_x_mut(&self, s: &mut StateVector<S>, phases: &[S]) {
        match &self.feature_map {
            FeatureMap::Qeff { .. } | FeatureMap::Qrff { .. } => {
                self.mul_x_phases(s, phases, true);
                self.h_wall_x(s);
            }
            FeatureMap::Zz { .. } => {
                self.mul_x_phases(s, phases, true);
                self.h_wall_x(s);
                self.mul_x_phases(s, phases, true);
                self.h_wall_x(s);
            }
        }
    }

    /// Apply the forward feature unitary at `x` (inverse of
    /// [`Self::unprep_x_mut`]); used to push adjoint seeds back through.
    fn re_prep_x_mut(&self, s: &mut StateVector<S>, phases: &[S]) {
        match &self.feature_map {
            FeatureMap::Qeff { .. } | FeatureMap::Qrff { .. } => {
                self.h_wall_x(s);
                self.mul_x_phases(s, phases, false);
            }
            FeatureMap::Zz { .. } => {
                self.h_wall_x(s);
                self.mul_x_phases(s, phases, false);
                self.h_wall_x(s);
                self.mul_x_phases(s, phases, false);
            }
        }
    }

    fn collect_projections(&self, unprepped: &StateVector<S>) -> Vec<S> {
        let n_low = self.n_low();
        let amps = unprepped.amplitudes();
        let mut p = vec![S::zero(); self.classes];
        for a in 0..1usize << self.n_ancilla {
            let base = a << n_low;
            for (y, slot) in p.iter_mut().enumerate() {
                *slot += amps[base | y].norm_sqr();
            }
        }
        p
    }

    // ---- scoring ----

    /// All class projections `P(x, y)` at the current parameters.
    pub fn projections(&self, x: &[S]) -> Result<Vec<S>> {
        let phi = self.params.state()?;
        self.projections_from_state(&phi, x)
    }

    /// Class projections given an externally prepared circuit state (shared
    /// across a batch for speed).
    pub fn projections_from_state(&self, phi: &StateVector<S>, x: &[S]) -> Result<Vec<S>> {
        if phi.n_qubits() != self.n_total() {
            return Err(Error::DimensionMismatch {
                expected: self.n_total(),
                actual: phi.n_qubits(),
            });
        }
        let phases = self.input_phases(x)?;
        let mut u = phi.clone();
        self.unprep_x_mut(&mut u, &phases);
        Ok(self.collect_projections(&u))
    }

    /// Joint projection `P(x, y)` via the fast inverse-unitary path.
    pub fn joint_projection(&self, x: &[S], y: usize) -> Result<S> {
        if y >= self.classes {
            return Err(Error::LabelOutOfRange { label: y, classes: self.classes });
        }
        Ok(self.projections(x)?[y])
    }

    /// The same projection through its literal definition: trace out the
    /// ancilla and take the reduced-density-matrix expectation in
    /// `|y⟩ ⊗ |ψ(x)⟩`. Slower; kept as the semantic anchor the fast path is
    /// checked against.
    pub fn joint_projection_via_density(&self, x: &[S], y: usize) -> Result<S> {
        if y >= self.classes {
            return Err(Error::LabelOutOfRange { label: y, classes: self.classes });
        }
        let phi = self.params.state()?;
        let ancilla: Vec<usize> = (self.n_low()..self.n_total()).collect();
        let rho: DensityMatrix<S> = phi.partial_trace(&ancilla)?;
        let target = self.joint_target_state(x, y)?;
        rho.expectation(&target)
    }

    /// The composite target `|y⟩ ⊗ |ψ(x)⟩` on the low `Y`+`X` registers.
    pub fn joint_target_state(&self, x: &[S], y: usize) -> Result<StateVector<S>> {
        if y >= self.classes {
            return Err(Error::LabelOutOfRange { label: y, classes: self.classes });
        }
        let feat = self.feature_state(x)?;
        let n_low = self.n_low();
        let mut amps = vec![Complex::new(S::zero(), S::zero()); 1 << n_low];
        for (k, &a) in feat.amplitudes().iter().enumerate() {
            amps[(k << self.n_label) | y] = a;
        }
        Ok(StateVector::from_parts_unchecked(n_low, amps))
    }

    /// Scaled joint density estimate `M_h·P(x, y)`.
    pub fn joint_density(&self, x: &[S], y: usize) -> Result<DensityEstimate<S>> {
        let projection = self.joint_projection(x, y)?;
        Ok(DensityEstimate { label: y, projection, density: self.bandwidth.m_h() * projection })
    }

    /// Predicted label: argmax of the joint projections, ties resolved to
    /// the smallest label.
    pub fn predict(&self, x: &[S]) -> Result<usize> {
        let p = self.projections(x)?;
        let mut best = 0usize;
        for (y, &v) in p.iter().enumerate().skip(1) {
            if v > p[best] {
                best = y;
            }
        }
        Ok(best)
    }

    /// Predictions for a whole batch, sharing one circuit evaluation.
    pub fn predict_batch(&self, features: &[Vec<S>]) -> Result<Vec<usize>> {
        let phi = self.params.state()?;
        features
            .iter()
            .map(|x| {
                let p = self.projections_from_state(&phi, x)?;
                let mut best = 0usize;
                for (y, &v) in p.iter().enumerate().skip(1) {
                    if v > p[best] {
                        best = y;
                    }
                }
                Ok(best)
            })
            .collect()
    }

    /// Posterior `P(y|x)` by normalizing the joint projections. Errors if
    /// every projection is zero (or non-finite), since no conditional exists.
    pub fn posterior(&self, x: &[S]) -> Result<Vec<S>> {
        posterior_from_projections(&self.projections(x)?)
    }

    // ---- losses ----

    fn batch_projections_at(
        &self,
        theta: &[S],
        features: &[Vec<S>],
        idx: &[usize],
    ) -> Result<(Vec<Vec<S>>, StateVector<S>)> {
        let phi = crate::ansatz::hea_state(&self.params.layout(), theta)?;
        let mut all = Vec::with_capacity(idx.len());
        for &j in idx {
            all.push(self.projections_from_state(&phi, &features[j])?);
        }
        Ok((all, phi))
    }

    fn check_batch(&self, features: &[Vec<S>], labels: &[usize]) -> Result<()> {
        if features.is_empty() {
            return Err(Error::InvalidDataset { reason: "empty batch".into() });
        }
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                actual: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= self.classes) {
            return Err(Error::LabelOutOfRange { label: bad, classes: self.classes });
        }
        Ok(())
    }

    fn loss_from_projections(
        &self,
        p: &[Vec<S>],
        labels: &[usize],
        idx: &[usize],
        mode: TrainingMode,
        eps: S,
    ) -> S {
        let n = S::from_usize_lossy(idx.len());
        let mut acc = S::zero();
        match mode {
            TrainingMode::Generative => {
                let m_h = self.bandwidth.m_h();
                for (row, &j) in p.iter().zip(idx) {
                    acc += (m_h * row[labels[j]].max(eps)).ln();
                }
            }
            TrainingMode::Discriminative => {
                for (row, &j) in p.iter().zip(idx) {
                    let tot: S = row.iter().copied().sum();
                    let ratio = row[labels[j]] / tot.max(eps);
                    acc += ratio.max(eps).ln();
                }
            }
        }
        -acc / n
    }

    fn loss_for_mode(
        &self,
        theta: &[S],
        features: &[Vec<S>],
        labels: &[usize],
        mode: TrainingMode,
        eps: S,
    ) -> Result<S> {
        let idx: Vec<usize> = (0..features.len()).collect();
        let (p, _) = self.batch_projections_at(theta, features, &idx)?;
        Ok(self.loss_from_projections(&p, labels, &idx, mode, eps))
    }

    /// Averaged negative log joint density over a labeled batch, with
    /// projections clamped at [`LOG_EPSILON`] inside the logarithm.
    pub fn anl_loss(&self, features: &[Vec<S>], labels: &[usize]) -> Result<S> {
        self.check_batch(features, labels)?;
        self.loss_for_mode(
            self.params.theta(),
            features,
            labels,
            TrainingMode::Generative,
            S::from_f64_lossy(LOG_EPSILON),
        )
    }

    /// Averaged negative log posterior over a labeled batch, with the ratio
    /// clamped at [`LOG_EPSILON`] inside the logarithm.
    pub fn discriminative_loss(&self, features: &[Vec<S>], labels: &[usize]) -> Result<S> {
        self.check_batch(features, labels)?;
        self.loss_for_mode(
            self.params.theta(),
            features,
            labels,
            TrainingMode::Discriminative,
            S::from_f64_lossy(LOG_EPSILON),
        )
    }

    /// `∂L/∂P[j][y]` for the batch; shared by the adjoint and
    /// parameter-shift backends so they differentiate the identical loss.
    fn loss_coefficients(
        &self,
        p: &[Vec<S>],
        labels: &[usize],
        idx: &[usize],
        batch_len: usize,
        mode: TrainingMode,
        eps: S,
    ) -> Vec<Vec<S>> {
        let n = S::from_usize_lossy(batch_len);
        let mut coeff = vec![vec![S::zero(); self.classes]; idx.len()];
        for ((row, &j), c) in p.iter().zip(idx).zip(coeff.iter_mut()) {
            let yj = labels[j];
            match mode {
                TrainingMode::Generative => {
                    if row[yj] > eps {
                        c[yj] = -S::one() / (n * row[yj]);
                    }
                }
                TrainingMode::Discriminative => {
                    let tot: S = row.iter().copied().sum();
                    if row[yj] / tot.max(eps) > eps {
                        c[yj] = -S::one() / (n * row[yj]);
                        for slot in c.iter_mut() {
                            *slot += S::one() / (n * tot);
                        }
                    }
                }
            }
        }
        coeff
    }

    // ---- gradients ----

    /// Batch loss gradient with respect to the ansatz angles.
    pub fn gradient(
        &self,
        features: &[Vec<S>],
        labels: &[usize],
        method: GradientMethod,
        mode: TrainingMode,
    ) -> Result<Vec<S>> {
        self.check_batch(features, labels)?;
        let idx: Vec<usize> = (0..features.len()).collect();
        self.gradient_indexed(
            self.params.theta(),
            features,
            labels,
            &idx,
            method,
            mode,
            S::from_f64_lossy(LOG_EPSILON),
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn gradient_indexed(
        &self,
        theta: &[S],
        features: &[Vec<S>],
        labels: &[usize],
        idx: &[usize],
        method: GradientMethod,
        mode: TrainingMode,
        eps: S,
    ) -> Result<Vec<S>> {
        match method {
            GradientMethod::Adjoint => {
                self.adjoint_gradient(theta, features, labels, idx, mode, eps)
            }
            GradientMethod::ParameterShift => {
                self.parameter_shift_gradient(theta, features, labels, idx, mode, eps)
            }
            GradientMethod::FiniteDifference => {
                self.finite_difference_gradient(theta, features, labels, idx, mode, eps)
            }
        }
    }

    /// Reverse-mode sweep. The circuit state is sample-independent, so the
    /// batch shares one forward preparation; each sample contributes to the
    /// adjoint seed via unprepare → coefficient weighting → re-prepare, and
    /// one backward pass over the op list yields every angle derivative.
    fn adjoint_gradient(
        &self,
        theta: &[S],
        features: &[Vec<S>],
        labels: &[usize],
        idx: &[usize],
        mode: TrainingMode,
        eps: S,
    ) -> Result<Vec<S>> {
        let layout = self.params.layout();
        let phi = crate::ansatz::hea_state(&layout, theta)?;
        let dim = phi.dim();
        let n_low = self.n_low();
        let mut lam = vec![Complex::new(S::zero(), S::zero()); dim];

        for &j in idx {
            let phases = self.input_phases(&features[j])?;
            let mut u = phi.clone();
            self.unprep_x_mut(&mut u, &phases);
            let p = self.collect_projections(&u);
            let coeff = self.loss_coefficients(
                std::slice::from_ref(&p),
                labels,
                std::slice::from_ref(&j),
                idx.len(),
                mode,
                eps,
            );
            let coeff = &coeff[0];
            // Projector-weighted copy: keep only X = 0 amplitudes, scaled
            // per label by ∂L/∂P.
            let mut v = vec![Complex::new(S::zero(), S::zero()); dim];
            let u_amps = u.amplitudes();
            for a in 0..1usize << self.n_ancilla {
                let base = a << n_low;
                for (y, &c) in coeff.iter().enumerate() {
                    v[base | y] = u_amps[base | y] * c;
                }
            }
            let mut v = StateVector::from_parts_unchecked(self.n_total(), v);
            self.re_prep_x_mut(&mut v, &phases);
            for (acc, val) in lam.iter_mut().zip(v.amplitudes()) {
                *acc += *val;
            }
        }

        let mut grad = vec![S::zero(); layout.param_count()];
        let mut f = phi;
        let mut l = StateVector::from_parts_unchecked(self.n_total(), lam);
        let ops = hea_ops(&layout);
        for op in ops.iter().rev() {
            match *op {
                CircuitOp::Cnot { .. } => {
                    apply_op_inverse_mut(&mut f, op, theta);
                    apply_op_inverse_mut(&mut l, op, theta);
                }
                CircuitOp::Ry { qubit, param } => {
                    grad[param] = pauli_overlap_ry(&l, &f, qubit);
                    apply_op_inverse_mut(&mut f, op, theta);
                    apply_op_inverse_mut(&mut l, op, theta);
                }
                CircuitOp::Rz { qubit, param } => {
                    grad[param] = pauli_overlap_rz(&l, &f, qubit);
                    apply_op_inverse_mut(&mut f, op, theta);
                    apply_op_inverse_mut(&mut l, op, theta);
                }
            }
        }
        Ok(grad)
    }

    /// Exact shift rule chained through the loss: the coefficients
    /// `∂L/∂P` are taken at the unshifted angles, the projection derivatives
    /// from the `±π/2` evaluations.
    fn parameter_shift_gradient(
        &self,
        theta: &[S],
        features: &[Vec<S>],
        labels: &[usize],
        idx: &[usize],
        mode: TrainingMode,
        eps: S,
    ) -> Result<Vec<S>> {
        let (p0, _) = self.batch_projections_at(theta, features, idx)?;
        let coeff = self.loss_coefficients(&p0, labels, idx, idx.len(), mode, eps);
        let half_pi = S::FRAC_PI_2();
        let half = S::from_f64_lossy(0.5);
        let mut grad = vec![S::zero(); theta.len()];
        let mut shifted = theta.to_vec();
        for k in 0..theta.len() {
            shifted[k] = theta[k] + half_pi;
            let (p_plus, _) = self.batch_projections_at(&shifted, features, idx)?;
            shifted[k] = theta[k] - half_pi;
            let (p_minus, _) = self.batch_projections_at(&shifted, features, idx)?;
            shifted[k] = theta[k];
            let mut g = S::zero();
            for ((row_c, row_p), row_m) in coeff.iter().zip(&p_plus).zip(&p_minus) {
                for (y, &c) in row_c.iter().enumerate() {
                    g += c * half * (row_p[y] - row_m[y]);
                }
            }
            grad[k] = g;
        }
        Ok(grad)
    }

    /// Central differences on the clamped loss, step `1e-5`.
    fn finite_difference_gradient(
        &self,
        theta: &[S],
        features: &[Vec<S>],
        labels: &[usize],
        idx: &[usize],
        mode: TrainingMode,
        eps: S,
    ) -> Result<Vec<S>> {
        let step = S::from_f64_lossy(1e-5);
        let batch_loss = |t: &[S]| -> Result<S> {
            let (p, _) = self.batch_projections_at(t, features, idx)?;
            Ok(self.loss_from_projections(&p, labels, idx, mode, eps))
        };
        let mut grad = vec![S::zero(); theta.len()];
        let mut shifted = theta.to_vec();
        for k in 0..theta.len() {
            shifted[k] = theta[k] + step;
            let up = batch_loss(&shifted)?;
            shifted[k] = theta[k] - step;
            let down = batch_loss(&shifted)?;
            shifted[k] = theta[k];
            grad[k] = (up - down) / (step + step);
        }
        Ok(grad)
    }

    // ---- training ----

    /// Minibatch gradient descent from the model's current angles.
    ///
    /// Batches reshuffle each epoch from `config.seed`; the returned trace
    /// holds the full-dataset loss after each epoch. Training is
    /// deterministic given the model and config, and aborts with
    /// [`Error::NonFiniteLoss`] if the loss or a gradient stops being finite.
    pub fn train(
        &mut self,
        features: &[Vec<S>],
        labels: &[usize],
        config: &TrainConfig<S>,
    ) -> Result<LossTrace<S>> {
        self.check_batch(features, labels)?;
        if config.batch_size == 0 {
            return Err(Error::InvalidConfig { reason: "batch size must be ≥ 1".into() });
        }
        if !(config.learning_rate > S::zero()) || !config.learning_rate.is_finite() {
            return Err(Error::InvalidConfig {
                reason: "learning rate must be positive and finite".into(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let n = features.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut trace = LossTrace { mode: config.mode, entries: Vec::with_capacity(config.epochs) };
        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            for (batch, chunk) in order.chunks(config.batch_size).enumerate() {
                let g = self.gradient_indexed(
                    self.params.theta(),
                    features,
                    labels,
                    chunk,
                    config.gradient_method,
                    config.mode,
                    config.log_epsilon,
                )?;
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteLoss { loss: f64::NAN, epoch, batch });
                }
                for (t, gi) in self.params.theta_mut().iter_mut().zip(&g) {
                    *t = *t - config.learning_rate * *gi;
                }
            }
            let loss = self.loss_for_mode(
                self.params.theta(),
                features,
                labels,
                config.mode,
                config.log_epsilon,
            )?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { loss: loss.to_f64_lossy(), epoch, batch: 0 });
            }
            trace.entries.push(LossTraceEntry { epoch, loss });
        }
        Ok(trace)
    }

    /// Generative warm-up continuation: full-batch adjoint descent on the
    /// averaged negative log density, touching only the ansatz angles. With
    /// `epochs = 0` the angles are untouched and the trace is empty.
    pub fn finetune_generative(
        &mut self,
        features: &[Vec<S>],
        labels: &[usize],
        epochs: usize,
        learning_rate: S,
    ) -> Result<LossTrace<S>> {
        let config = TrainConfig {
            mode: TrainingMode::Generative,
            learning_rate,
            epochs,
            batch_size: features.len().max(1),
            gradient_method: GradientMethod::Adjoint,
            seed: 0,
            log_epsilon: S::from_f64_lossy(LOG_EPSILON),
        };
        self.train(features, labels, &config)
    }

    // ---- finite-shot estimation ----

    /// Finite-shot joint and conditional estimates at `(x, y)`.
    ///
    /// Performs `runs` independent experiments; each samples `shots` outcomes
    /// of the combined label+feature register after the inverse feature
    /// unitary. Per-run seeds derive deterministically from `seed`.
    pub fn shot_estimates(
        &self,
        x: &[S],
        y: usize,
        shots: u64,
        runs: usize,
        seed: u64,
    ) -> Result<VarianceReport<S>> {
        if y >= self.classes {
            return Err(Error::LabelOutOfRange { label: y, classes: self.classes });
        }
        if shots == 0 || runs == 0 {
            return Err(Error::InvalidConfig {
                reason: "shot estimation needs shots ≥ 1 and runs ≥ 1".into(),
            });
        }
        let phases = self.input_phases(x)?;
        let mut u = self.params.state()?;
        self.unprep_x_mut(&mut u, &phases);
        let exact = self.collect_projections(&u)[y];
        let register: Vec<usize> = (0..self.n_low()).collect();
        let dist = u.measure_register(&register)?;

        let shots_s = S::from_f64_lossy(shots as f64);
        let mut joint = Vec::with_capacity(runs);
        let mut conditional = Vec::with_capacity(runs);
        let mut excluded = 0usize;
        for r in 0..runs {
            let run_seed = splitmix64(seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let counts = dist.sample_shots(shots, run_seed)?;
            let hits = counts.count(y);
            joint.push(S::from_f64_lossy(hits as f64) / shots_s);
            let x_zero: u64 = (0..1u64 << self.n_label)
                .map(|outcome| counts.count(outcome as usize))
                .sum();
            if x_zero == 0 {
                excluded += 1;
            } else {
                conditional
                    .push(S::from_f64_lossy(hits as f64) / S::from_f64_lossy(x_zero as f64));
            }
        }
        let (joint_mean, joint_variance) = population_stats(&joint);
        let (conditional_mean, conditional_variance) = if conditional.is_empty() {
            (None, None)
        } else {
            let (m, v) = population_stats(&conditional);
            (Some(m), Some(v))
        };
        Ok(VarianceReport {
            shots,
            runs,
            exact_projection: exact,
            joint_mean,
            joint_variance,
            joint_density_mean: self.bandwidth.m_h() * joint_mean,
            conditional_mean,
            conditional_variance,
            excluded_runs: excluded,
        })
    }

    // ---- persistence ----

    /// SHA-256 fingerprint of the structural configuration (registers,
    /// bandwidth, feature-map provenance, layers, seed) — everything that
    /// determines the model other than the trained angles.
    pub fn config_fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Digest2<'a> {
            n_ancilla: usize,
            n_feature: usize,
            n_label: usize,
            classes: usize,
            h: f64,
            input_dim: usize,
            feature_map: &'a str,
            distribution: Option<SamplingDistribution>,
            layers: usize,
            seed: u64,
        }
        let distribution = match &self.feature_map {
            FeatureMap::Qeff { pauli, .. } => Some(pauli.distribution()),
            FeatureMap::Qrff { canonical } => canonical.distribution(),
            FeatureMap::Zz { .. } => None,
        };
        let digest = Digest2 {
            n_ancilla: self.n_ancilla,
            n_feature: self.n_feature,
            n_label: self.n_label,
            classes: self.classes,
            h: self.bandwidth.h().to_f64_lossy(),
            input_dim: self.bandwidth.input_dim(),
            feature_map: self.feature_map.kind_name(),
            distribution,
            layers: self.params.layout().layers(),
            seed: self.seed,
        };
        let json = serde_json::to_string(&digest).expect("digest serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hex_string(&hasher.finalize())
    }

    /// Bundle the model into a checkpoint.
    pub fn to_checkpoint(&self) -> ModelCheckpoint<S> {
        ModelCheckpoint {
            version: CHECKPOINT_FORMAT_VERSION,
            n_ancilla: self.n_ancilla,
            n_feature: self.n_feature,
            n_label: self.n_label,
            classes: self.classes,
            bandwidth: self.bandwidth,
            feature_map: self.feature_map.clone(),
            layers: self.params.layout().layers(),
            seed: self.seed,
            config_fingerprint: self.config_fingerprint(),
            params: self.params.clone(),
        }
    }

    /// Rebuild a model from a checkpoint, re-validating the geometry.
    pub fn from_checkpoint(cp: ModelCheckpoint<S>) -> Result<Self> {
        if cp.version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::InvalidConfig {
                reason: format!("unsupported checkpoint version {}", cp.version),
            });
        }
        if cp.n_label != label_qubits(cp.classes)? {
            return Err(Error::InvalidConfig {
                reason: "checkpoint label register does not match its class count".into(),
            });
        }
        let n_total = cp.n_ancilla + cp.n_feature + cp.n_label;
        let expected_layout = HeaLayout::new(n_total, cp.layers)?;
        if cp.params.layout() != expected_layout {
            return Err(Error::InvalidConfig {
                reason: "checkpoint parameters bind to a different layout".into(),
            });
        }
        match &cp.feature_map {
            FeatureMap::Qeff { pauli, canonical } => {
                if pauli.n_x() != cp.n_feature || canonical.n_x() != cp.n_feature {
                    return Err(Error::InvalidConfig {
                        reason: "checkpoint weights cover a different feature register".into(),
                    });
                }
            }
            FeatureMap::Qrff { canonical } => {
                if canonical.n_x() != cp.n_feature {
                    return Err(Error::InvalidConfig {
                        reason: "checkpoint weights cover a different feature register".into(),
                    });
                }
            }
            FeatureMap::Zz { n_qubits, .. } => {
                if *n_qubits != cp.n_feature {
                    return Err(Error::InvalidConfig {
                        reason: "checkpoint ZZ map covers a different feature register".into(),
                    });
                }
            }
        }
        Ok(Self {
            n_ancilla: cp.n_ancilla,
            n_feature: cp.n_feature,
            n_label: cp.n_label,
            classes: cp.classes,
            bandwidth: cp.bandwidth,
            feature_map: cp.feature_map,
            params: cp.params,
            seed: cp.seed,
        })
    }
}

/// Normalize projections into a posterior; all-zero input is an error.
pub(crate) fn posterior_from_projections<S: Scalar>(p: &[S]) -> Result<Vec<S>> {
    let total: S = p.iter().copied().sum();
    if !(total > S::zero()) || !total.is_finite() {
        return Err(Error::DegenerateProjections);
    }
    Ok(p.iter().map(|&v| v / total).collect())
}

/// Lowercase hex rendering of a digest.
pub(crate) fn hex_string(bytes: &[u8]) -> String {
    use std::fmt::Write;
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Population mean and variance (divide by the run count, not `n − 1`).
fn population_stats<S: Scalar>(values: &[S]) -> (S, S) {
    let n = S::from_usize_lossy(values.len());
    let mean = values.iter().copied().sum::<S>() / n;
    let var = values
        .iter()
        .map(|&v| {
            let d = v - mean;
            d * d
        })
        .sum::<S>()
        / n;
    (mean, var)
}

/// `2·Re⟨l|(−i/2)·Y_q|f⟩`, reduced to a real pair sum: the generator of
/// `Ry` contributes `Re(conj(l₁)f₀ − conj(l₀)f₁)` per `(0,1)` pair on `q`.
fn pauli_overlap_ry<S: Scalar>(l: &StateVector<S>, f: &StateVector<S>, qubit: usize) -> S {
    let mask = 1usize << qubit;
    let la = l.amplitudes();
    let fa = f.amplitudes();
    let mut acc = S::zero();
    let mut base = 0usize;
    while base < fa.len() {
        for i0 in base..base + mask {
            let i1 = i0 | mask;
            acc += (la[i1].conj() * fa[i0] - la[i0].conj() * fa[i1]).re;
        }
        base += mask << 1;
    }
    acc
}

/// `2·Re⟨l|(−i/2)·Z_q|f⟩ = Σ Im(conj(l₀)f₀) − Im(conj(l₁)f₁)` per pair.
fn pauli_overlap_rz<S: Scalar>(l: &StateVector<S>, f: &StateVector<S>, qubit: usize) -> S {
    let mask = 1usize << qubit;
    let la = l.amplitudes();
    let fa = f.amplitudes();
    let mut acc = S::zero();
    let mut base = 0usize;
    while base < fa.len() {
        for i0 in base..base + mask {
            let i1 = i0 | mask;
            acc += (la[i0].conj() * fa[i0]).im - (la[i1].conj() * fa[i1]).im;
        }
        base += mask << 1;
    }
    acc
}
