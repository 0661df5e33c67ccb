//! Dense complex linear algebra: matrices, the Hermitian eigensolver, PSD
//! projection, Kronecker products, partial transposition and the trace pairing.

mod eigen;
mod matrix;
mod ops;

pub use eigen::{
    hermitian_eig, hermitian_eig_seeded, min_eigenvalue, psd_project, EigenDecomposition,
    DEFAULT_EIG_TOL, MAX_SWEEPS,
};
pub use matrix::{ComplexMatrix, HermitianMatrix, HERMITIAN_TOL};
pub use ops::{kron, pairing, partial_transpose_first};
