//! Complex-valued modReLU networks built explicitly, from the exact identity
//! network up to approximants of smooth functions on the complex cube, with
//! the tooling to measure their errors and sizes.

pub mod activation;
pub mod compiler;
pub mod error;
pub mod harness;
pub mod layer;
pub mod json;
pub mod network;
pub mod precision;
pub mod primitives;
mod sparse;
pub mod stats;
pub mod structured;

pub use activation::modrelu;
pub use error::{Error, Result};
pub use layer::AffineLayer;
pub use network::{compose, identity_network, pad_depth, parallel, ModReLUNetwork};
pub use precision::EvalPolicy;
pub use stats::{ArchitectureStats, ComponentStats};
pub use structured::{NetRef, NodeKind, StructuredNet};

/// Complex scalar used everywhere.
pub type C64 = num_complex::Complex64;
