//! Sparse storage and kernels, sparse direct factorizations and dense eigen
//! probes.

pub mod dense;
pub mod factor;
pub mod mmio;
pub mod sparse;
pub mod umfpack;

pub use dense::{eig_general, eig_sym, eig_sym_generalized, DENSE_EIG_LIMIT};
pub use factor::{Factorization, SymbolicCache};
pub use mmio::{read_dense_csv, read_matrix_market, write_dense_csv, write_matrix_market};
pub use sparse::{axpy, dot, norm2, CsrMatrix};
