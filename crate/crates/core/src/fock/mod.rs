//! Truncated Fock-space and hybrid qubit–oscillator linear algebra.

pub mod expm;
pub mod layout;
pub mod local;
pub mod operator;
pub mod ops;
pub mod state;

pub use expm::expm;
pub use layout::SpaceLayout;
pub use local::{LinearMap, LocalOperator, OperatorSequence, SubspaceBasis};
pub use operator::{TruncatedOperator, Verified, HERMITIAN_TOL, UNITARY_TOL};
pub use ops::Pauli;
pub use state::{HybridState, Representation};
