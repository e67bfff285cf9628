//! Pauli-weight analysis of Heisenberg-evolved local operators in the
//! mixed-field Ising chain.
//!
//! Operators are matrix product states over the four-dimensional Pauli
//! frame. The crate provides second-order TEBD in the Heisenberg picture,
//! projector MPOs onto contributing / weight sectors, weight densities,
//! contributions, the operator weight entropy, the backflow protocol and the
//! product-state temperature map. A dense reference implementation lives in
//! [`oracle`] for small chains.

pub mod analysis;
pub mod checkpoint;
pub mod error;
pub mod evolution;
pub mod linalg;
pub mod mpo;
pub mod mps;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod pauli;
pub mod projectors;
pub mod thermo;

pub use error::{Error, Result};
