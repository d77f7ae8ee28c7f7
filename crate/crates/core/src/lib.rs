//! Simulator for parity-encoded mixed-state qubits in pairs of bosonic modes.
//!
//! The numerical core is generic over [`scalar::Real`]; the aliases below fix
//! the scalar to `f64`, which is what every tolerance in the crate assumes.

pub mod circuit;
pub mod encoding;
pub mod error;
pub mod fock;
pub mod msuqc;
pub mod ns;
pub mod open_system;
pub mod pulse;
pub mod scalar;
pub mod thermal;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` specialisations.
pub type Operator = fock::TruncatedOperator<f64>;
pub type Local = fock::LocalOperator<f64>;
pub type State = fock::HybridState<f64>;
pub type Complex = scalar::C<f64>;
pub type Matrix = scalar::CMatrix<f64>;
pub type Vector = scalar::CVector<f64>;
