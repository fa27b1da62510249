//! Numerical model of the pluriharmonic Fock space `𝒫ℋ²_α(ℂⁿ)` truncated at a
//! total degree, with Toeplitz operators for positive measure symbols.

pub mod basis;
pub mod berezin;
pub mod carleson;
pub mod error;
pub mod kernels;
pub mod measures;
pub mod quadrature;
pub mod spectral;
pub mod toeplitz;

pub use basis::{
    enumerate_basis, eval_basis, eval_basis_weighted, project, BasisIndex, BasisTruncation,
    ComplexPoint, FockParams, MultiIndex,
};
pub use error::{FockError, Result};
pub use measures::MeasureSpec;
pub use num_complex::Complex64;
