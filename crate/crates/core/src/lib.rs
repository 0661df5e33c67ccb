//! Semidefinite certification hierarchy for qubit–qudit (2×M) separability.
//!
//! The primal side ([`hierarchy`]) searches for a positive semidefinite block
//! certificate Γ whose existence proves that a 2M×2M matrix lies in a cone
//! contained in the separable cone. The dual side ([`witness`]) tests the
//! structured block-Toeplitz matrices that characterize positive maps from
//! 2×2 to M×M matrices. Both reduce to asking whether an affine subspace of
//! Hermitian matrices meets the PSD cone, answered by [`feasibility`].

pub mod error;
pub mod feasibility;
pub mod hierarchy;
pub mod linalg;
pub mod state;
pub mod witness;

pub use error::{Error, Result};
pub use num_complex::Complex64;
