use thiserror::Error;

/// Errors raised by the simulator. Numerical quantities are carried as
/// `f64` so the error type does not depend on the scalar parameter.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode index {index} out of range ({count} modes)")]
    InvalidMode { index: usize, count: usize },
    #[error("qubit index {index} out of range ({count} qubits)")]
    InvalidQubit { index: usize, count: usize },
    #[error("Fock cutoff {0} is below the minimum of 2")]
    CutoffTooLow(usize),
    #[error("operation needs two distinct modes, got {0} twice")]
    SameMode(usize),
    #[error("modes {a} and {b} have different cutoffs ({da} vs {db})")]
    CutoffMismatch { a: usize, b: usize, da: usize, db: usize },
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("matrix shape {rows}x{cols} does not match dimension {dim}")]
    ShapeMismatch { rows: usize, cols: usize, dim: usize },
    #[error("cutoff {cutoff} leaves thermal tail {tail:e} for <n> = {mean} (tolerance {tolerance:e})")]
    CutoffTooSmall { mean: f64, cutoff: usize, tail: f64, tolerance: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("projection onto an empty branch (probability {0:e})")]
    EmptyBranch(f64),
    #[error("operator does not square to identity (residual {0:e})")]
    NotInvolution(f64),
    #[error("ancilla is not in |+> (overlap deficit {0:e})")]
    AncillaNotPlus(f64),
    #[error("state is not a density matrix: {0}")]
    NotDensityMatrix(String),
    #[error("state is not normalised (trace {0})")]
    NotNormalized(f64),
    #[error("dimension {dim} exceeds budget {budget}")]
    DimensionBudget { dim: usize, budget: usize },
    #[error("basis pair (m={m}, n={n}) does not fit under cutoff {cutoff}")]
    BasisOutOfRange { m: usize, n: usize, cutoff: usize },
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("integration did not converge after {halvings} halvings (last change {change:e})")]
    NonConvergence { halvings: usize, change: f64 },
    #[error("truncation tail {tail:e} exceeds budget {budget:e}")]
    TailBudget { tail: f64, budget: f64 },
    #[error("optimizer failed: {0}")]
    Optimizer(String),
}

pub type Result<T> = std::result::Result<T, Error>;
