pub mod algebra;
pub mod entropy;
pub mod fidelity;
pub mod msuqc;
pub mod ns;

pub use algebra::{algebra_check, AlgebraParams};
pub use entropy::{entropy_sweep, EntropyParams};
pub use fidelity::{fidelity_sweep, FidelityParams};
pub use msuqc::{msuqc_demo, MsuqcParams};
pub use ns::ns_check;
