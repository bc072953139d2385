//! Sparse and dense linear algebra: CSR storage, BiCGSTAB with ILU(0) or
//! Jacobi preconditioning, and small dense LU solves for element mass systems.

mod bicgstab;
mod csr;
mod dense;
mod precond;

pub use bicgstab::{bicgstab, rounding_floor, true_relative_residual, SolverOptions, SolverReport};
pub use csr::CsrMatrix;
pub use dense::{dense_solve, DenseMatrix, LuFactors};
pub use precond::{Identity, Ilu0, Jacobi, Preconditioner, PreconditionerKind};
