//! Dense statevector simulation and quantum generative classification.
//!
//! This crate implements a small-but-exact quantum circuit simulator together
//! with a complete training stack for *quantum generative classification*
//! (QGC): a variational circuit prepares a purification of a mixed state whose
//! diagonal blocks encode a joint probability density over inputs and class
//! labels. Inputs enter through random-Fourier-feature phase encodings that
//! approximate a Gaussian kernel, so the trained model behaves like a smoothed
//! kernel density classifier — and every quantum estimate produced here can be
//! cross-checked against the classical kernel-density oracles that ship in the
//! [`oracles`] module.
//!
//! The crate is organized in layers:
//!
//! - [`qstate`] — dense statevector / density-matrix engine: gates, diagonal
//!   phases, partial trace, expectation values, register marginals, and seeded
//!   shot sampling.
//! - [`encodings`] — input feature maps (Fourier phase encodings in Pauli and
//!   canonical form, the second-order ZZ map, polynomial input augmentation)
//!   and one-hot label states.
//! - [`ansatz`] — the layered hardware-efficient ansatz that prepares the
//!   purification, plus exact parameter/CNOT metadata.
//! - [`qgc`] — the model itself: joint projections and densities, generative
//!   and discriminative losses, three interchangeable gradient back-ends,
//!   gradient-descent training, prediction, posteriors, shot-noise variance
//!   reports, and generative fine-tuning on externally produced latent
//!   features.
//! - [`oracles`] — classical ground truth: Gaussian kernel density
//!   estimation/classification and evaluation metrics (accuracy, MAE,
//!   per-class Spearman rank correlation).
//! - [`pipeline`] — dataset generation and ingestion (synthetic 1D/2D sets
//!   with out-of-distribution partitions, IDX image files with 4×4
//!   downsampling, latent CSV files), experiment configuration, and the
//!   orchestration used by the `qgc` command-line tool.
//!
//! # Numeric precision
//!
//! The simulation core ([`qstate`], [`encodings`], [`ansatz`]) is generic over
//! the floating-point scalar via [`scalar::Scalar`]; `f32` and `f64` are
//! supported. The pipeline layer and all shipped binaries use `f64`, and the
//! crate root exports `f64`-concrete aliases ([`StateVector`],
//! [`DensityMatrix`], [`QgcModel`], …) so most users never touch the generic
//! forms.
//!
//! # Conventions
//!
//! Qubit `i` owns bit `i` of a basis-state index (little-endian): qubit 0 is
//! the uppermost wire of a circuit diagram and the rightmost position in a
//! ket. The classifier's register layout on `n_T = n_A + n_X + n_Y` qubits
//! places the label register on qubits `[0, n_Y)`, the input register on
//! `[n_Y, n_Y + n_X)`, and the purification ancillas above those.
//!
//! # Example
//!
//! ```
//! use qgc_sim::encodings::SamplingDistribution;
//! use qgc_sim::pipeline::{gen_synthetic, SyntheticName};
//! use qgc_sim::qgc::FeatureMapSpec;
//! use qgc_sim::{KernelBandwidth, QgcModel, TrainConfig};
//!
//! // A tiny generative run on a two-moons subsample.
//! let triplet = gen_synthetic(SyntheticName::Moons, Some((60, 20)), 7).unwrap();
//! let (features, labels) = triplet.train.supervised();
//!
//! let bandwidth = KernelBandwidth::new(0.25, 2).unwrap();
//! let mut model = QgcModel::build(
//!     1, 3, 1, 2, bandwidth,
//!     FeatureMapSpec::Qeff(SamplingDistribution::normal(11)),
//!     2, 13,
//! ).unwrap();
//!
//! let config = TrainConfig { epochs: 2, ..TrainConfig::default() };
//! let trace = model.train(&features, &labels, &config).unwrap();
//! assert_eq!(trace.entries.len(), 2);
//! assert!(model.predict(&features[0]).unwrap() < 2);
//! ```

pub mod ansatz;
pub mod encodings;
pub mod oracles;
pub mod pipeline;
pub mod qgc;
pub mod qstate;
pub mod scalar;

mod error;

pub use error::{Error, Result};

/// `f64` statevector — the concrete type used by the pipeline layer.
pub type StateVector = qstate::StateVector<f64>;
/// `f64` density matrix.
pub type DensityMatrix = qstate::DensityMatrix<f64>;
/// `f64` register-measurement distribution.
pub type MeasurementDistribution = qstate::MeasurementDistribution<f64>;
/// `f64` Pauli-basis Fourier weights.
pub type FourierWeightsPauli = encodings::FourierWeightsPauli<f64>;
/// `f64` canonical-basis Fourier weights.
pub type FourierWeightsCanonical = encodings::FourierWeightsCanonical<f64>;
/// `f64` kernel bandwidth with its derived density normalizer.
pub type KernelBandwidth = encodings::KernelBandwidth<f64>;
/// `f64` ansatz parameter vector.
pub type AnsatzParameters = ansatz::AnsatzParameters<f64>;
/// `f64` generative classifier.
pub type QgcModel = qgc::QgcModel<f64>;
/// `f64` optimizer settings.
pub type TrainConfig = qgc::TrainConfig<f64>;
/// `f64` per-epoch loss trace.
pub type LossTrace = qgc::LossTrace<f64>;
/// `f64` serialized model bundle.
pub type ModelCheckpoint = qgc::ModelCheckpoint<f64>;
/// `f64` kernel-density classification oracle.
pub type KdcModel = oracles::KdcModel<f64>;
