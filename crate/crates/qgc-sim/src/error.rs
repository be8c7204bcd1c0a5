use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors reported by the simulator, model, and pipeline layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A qubit index was outside the state's register range.
    #[error("qubit index {index} out of range for {n_qubits}-qubit state")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    /// Gate targets must be distinct.
    #[error("duplicate target qubit {index} in gate application")]
    DuplicateTarget { index: usize },

    /// A gate matrix failed the unitarity check.
    #[error("gate matrix is not unitary (max |U†U − I| entry = {deviation:.3e}, tolerance {tolerance:.3e})")]
    NonUnitaryGate { deviation: f64, tolerance: f64 },

    /// Vector/matrix dimensions do not match the operation's expectation.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A statevector failed its normalization invariant.
    #[error("statevector norm² deviates from 1 by {deviation:.3e} (tolerance {tolerance:.3e})")]
    NotNormalized { deviation: f64, tolerance: f64 },

    /// A density matrix failed Hermiticity, unit trace, or positivity.
    #[error("density matrix invariant violated: {reason}")]
    InvalidDensityMatrix { reason: String },

    /// Partial trace would leave no qubits behind.
    #[error("partial trace must leave at least one qubit untraced")]
    EmptyRemainder,

    /// The traced/measured register selection was invalid.
    #[error("invalid register selection: {reason}")]
    InvalidRegister { reason: String },

    /// An expectation value came out with a non-negligible imaginary part.
    #[error("expectation value has imaginary part {imag:.3e} beyond tolerance {tolerance:.3e}; inputs are corrupted")]
    NonRealExpectation { imag: f64, tolerance: f64 },

    /// A label index was outside `[0, L)`.
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    /// Invalid model or layout geometry.
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    /// Every class projection was zero, so no conditional quantity exists.
    #[error("degenerate model state: all class projections are zero at the queried input")]
    DegenerateProjections,

    /// Training produced a non-finite loss.
    #[error("training aborted: non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { loss: f64, epoch: usize, batch: usize },

    /// A dataset failed a structural check (row counts, label range, …).
    #[error("invalid dataset: {reason}")]
    InvalidDataset { reason: String },

    /// IDX container parse failure.
    #[error("IDX parse error in {path}: {reason}")]
    IdxFormat { path: String, reason: String },

    /// CSV ingestion failure with row context.
    #[error("CSV error in {path}: {reason}")]
    CsvFormat { path: String, reason: String },

    /// Checkpoint/config (de)serialization failure.
    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),

    /// Underlying I/O failure.
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Attach a path to a raw I/O error.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
