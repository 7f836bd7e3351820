//! Dense linear algebra for the small matrices that show up in few-qubit models.

pub mod complex;
pub mod eigen;
pub mod real;

pub use complex::{
    compress, kron, orthonormality_defect, ComplexMatrix, HermitianOperator, C64, HERMITIAN_TOL,
    ONE, ZERO,
};
pub use eigen::{eig_hermitian, SpectralDecomposition};
pub use real::{Cholesky, RealMatrix};
